#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "cptgen/io.hpp"
#include "fixtures.hpp"

using namespace cptgen;
namespace fx = cptgen::fixtures;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

bool has_line(const std::string& text, const std::string& line) {
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) {
    if (l == line) return true;
  }
  return false;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// One parent X with three hard states; effects Z are the given rows.
ObservationSet single_parent_set(const Eigen::MatrixXd& effects) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(3, 3);
  return ObservationSet({{"X", {"x1", "x2", "x3"}}}, {x}, {"Z", {"z1", "z2"}}, effects);
}

Cpt single_parent_cpt(const Eigen::MatrixXd& rows) {
  return Cpt({"z1", "z2"}, std::vector<NodeSpec>{{"X", {"x1", "x2", "x3"}}}, rows.transpose());
}

}  // namespace

TEST(CliGenerate, RegressSurgeRecoversSurveyCpt) {
  const fs::path dir = fx::scratch_dir("cli_surge");
  save_observations(fx::canonical_set(fx::survey_cpt(), 3), dir / "train.csv");
  const Outcome o = run({"generate", "--method", "regress-surge", "--train", (dir / "train.csv").string(),
                         "--out", (dir / "t1.cpt").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(has_line(o.out, "method,regress-surge"));
  EXPECT_TRUE(has_line(o.out, "rows,27"));
  const Cpt c = load_cpt(dir / "t1.cpt");
  EXPECT_LE((c.entries() - fx::survey_cpt().entries()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(c.parents(), fx::er_parents());
}

TEST(CliGenerate, DistinctReportsDuplicates) {
  const fs::path dir = fx::scratch_dir("cli_distinct");
  save_observations(fx::canonical_set(fx::survey_cpt(), 3), dir / "train.csv");
  const Outcome o = run({"generate", "--method", "regress-limit", "--distinct", "--train",
                         (dir / "train.csv").string(), "--out", (dir / "c.cpt").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(has_line(o.out, "rows,9"));
  EXPECT_TRUE(has_line(o.out, "duplicates_removed,18"));
}

TEST(CliGenerate, MleRejectsSoftRowsWithoutRounding) {
  const fs::path dir = fx::scratch_dir("cli_mle");
  const std::string train = fx::data_path("ls39.csv").string();
  EXPECT_EQ(run({"generate", "--method", "mle", "--train", train, "--out", (dir / "c.cpt").string()}).code, 1);
  const Outcome o =
      run({"generate", "--method", "mle", "--rounding", "--train", train, "--out", (dir / "c.cpt").string()});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("rows_skipped,"), std::string::npos);
}

TEST(CliGenerate, EmIsReproducibleForAFixedSeed) {
  const fs::path dir = fx::scratch_dir("cli_em");
  const std::string train = fx::data_path("ls39.csv").string();
  const std::vector<std::string> base{"generate", "--method", "em", "--train", train,
                                      "--init", "random", "--seed", "7", "--restarts", "3"};
  auto a_args = base;
  a_args.insert(a_args.end(), {"--out", (dir / "a.cpt").string()});
  auto b_args = base;
  b_args.insert(b_args.end(), {"--out", (dir / "b.cpt").string()});
  const Outcome a = run(a_args);
  const Outcome b = run(b_args);
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(read_text(dir / "a.cpt"), read_text(dir / "b.cpt"));
  EXPECT_NE(a.out.find("log_likelihood,"), std::string::npos);
}

TEST(CliGenerate, EmNonConvergenceWritesPartialCpt) {
  const fs::path dir = fx::scratch_dir("cli_em_cap");
  const Outcome o = run({"generate", "--method", "em", "--train", fx::data_path("ls39.csv").string(),
                         "--max-iter", "1", "--epsilon", "1e-300", "--out", (dir / "p.cpt").string()});
  EXPECT_EQ(o.code, 2);
  EXPECT_TRUE(fs::exists(dir / "p.cpt"));
  EXPECT_NE(o.err.find("partial"), std::string::npos);
}

TEST(CliGenerate, LogitWritesValidCpt) {
  const fs::path dir = fx::scratch_dir("cli_logit");
  const Outcome o = run({"generate", "--method", "logit", "--train", fx::data_path("logit50.csv").string(),
                         "--out", (dir / "l.cpt").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NO_THROW(load_cpt(dir / "l.cpt"));
}

TEST(CliGenerate, SingularDesignExitsTwo) {
  const fs::path dir = fx::scratch_dir("cli_singular");
  const Eigen::MatrixXd z = (Eigen::MatrixXd(3, 2) << 0.5, 0.5, 0.5, 0.5, 0.5, 0.5).finished();
  const Eigen::MatrixXd x = (Eigen::MatrixXd(3, 3) << 1, 0, 0, 1, 0, 0, 1, 0, 0).finished();
  save_observations(ObservationSet({{"X", {"x1", "x2", "x3"}}}, {x}, {"Z", {"z1", "z2"}}, z),
                    dir / "train.csv");
  const Outcome o = run({"generate", "--method", "regress-limit", "--train", (dir / "train.csv").string(),
                         "--out", (dir / "c.cpt").string()});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("error:"), std::string::npos);
}

TEST(CliGenerate, UnknownMethodIsUsageError) {
  EXPECT_EQ(run({"generate", "--method", "bogus", "--train", "a", "--out", "b"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
}

TEST(CliEvaluate, SelfGeneratedDataScoresPerfectly) {
  const fs::path dir = fx::scratch_dir("cli_eval_self");
  save_cpt(fx::survey_cpt(), dir / "t1.cpt");
  save_observations(fx::canonical_set(fx::survey_cpt(), 1), dir / "test.csv");
  const Outcome o = run({"evaluate", "--cpt", (dir / "t1.cpt").string(), "--test", (dir / "test.csv").string(),
                         "--out", (dir / "report.txt").string(), "--plot-data"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out, "diagnostic_goodness,100.00%\ntotal_average_shift_error,0.00%\n");
  EXPECT_TRUE(fs::exists(dir / "report_errors.csv"));
  EXPECT_TRUE(fs::exists(dir / "report_effects.csv"));
}

TEST(CliEvaluate, ThreePairData) {
  const fs::path dir = fx::scratch_dir("cli_eval_ex1");
  save_cpt(single_parent_cpt(fx::three_pair_predicted()), dir / "c.cpt");
  save_observations(single_parent_set(fx::three_pair_observed()), dir / "test.csv");
  const Outcome o = run({"evaluate", "--cpt", (dir / "c.cpt").string(), "--test", (dir / "test.csv").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(has_line(o.out, "diagnostic_goodness,66.67%"));
  EXPECT_TRUE(has_line(o.out, "total_average_shift_error,13.33%"));
}

TEST(CliEvaluate, MissingFileNamesPath) {
  const fs::path dir = fx::scratch_dir("cli_eval_missing");
  save_cpt(fx::survey_cpt(), dir / "t1.cpt");
  const Outcome o =
      run({"evaluate", "--cpt", (dir / "t1.cpt").string(), "--test", "/nonexistent/test.csv"});
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.err.find("/nonexistent/test.csv"), std::string::npos);
}

TEST(CliCompare, PermutationSelfAndSurvey) {
  const fs::path dir = fx::scratch_dir("cli_compare");
  save_cpt(fx::permuted_c(), dir / "c.cpt");
  save_cpt(fx::permuted_c_hat(), dir / "chat.cpt");
  save_cpt(fx::survey_cpt(), dir / "t1.cpt");
  save_cpt(fx::elicited_cpt(), dir / "t2.cpt");

  Outcome o = run({"compare", "--cpt", (dir / "c.cpt").string(), "--cpt-b", (dir / "chat.cpt").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(has_line(o.out, "shift,100.00%"));

  o = run({"compare", "--cpt", (dir / "t1.cpt").string(), "--cpt-b", (dir / "t1.cpt").string()});
  EXPECT_EQ(o.out, "shift,0.00%\nkl,0\neuclidean,0\n");

  o = run({"compare", "--cpt", (dir / "t2.cpt").string(), "--cpt-b", (dir / "t1.cpt").string()});
  EXPECT_TRUE(has_line(o.out, "shift,10.85%"));
  EXPECT_TRUE(has_line(o.out, "kl,inf"));

  o = run({"compare", "--cpt", (dir / "t1.cpt").string(), "--cpt-b", (dir / "c.cpt").string()});
  EXPECT_EQ(o.code, 1);
}

TEST(CliInfer, HardEvidenceOnSurveyCpt) {
  const fs::path dir = fx::scratch_dir("cli_infer");
  save_cpt(fx::survey_cpt(), dir / "t1.cpt");
  const std::string cpt = (dir / "t1.cpt").string();
  Outcome o = run({"infer", "--cpt", cpt, "--evidence", "E=e3", "--evidence", "R=r2"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out, "0.00%,10.86%,9.43%,47.95%,31.76%\n");
  o = run({"infer", "--cpt", cpt, "--evidence", "R=r2", "--evidence", "E=e3"});
  EXPECT_EQ(o.out, "0.00%,10.86%,9.43%,47.95%,31.76%\n");
}

TEST(CliInfer, BadEvidenceExitsOne) {
  const fs::path dir = fx::scratch_dir("cli_infer_bad");
  save_cpt(fx::survey_cpt(), dir / "t1.cpt");
  const std::string cpt = (dir / "t1.cpt").string();
  EXPECT_EQ(run({"infer", "--cpt", cpt, "--evidence", "E=e3"}).code, 1);
  EXPECT_EQ(run({"infer", "--cpt", cpt, "--evidence", "E=e3", "--evidence", "E=e1", "--evidence", "R=r1"}).code, 1);
  EXPECT_EQ(run({"infer", "--cpt", cpt, "--evidence", "E=e9", "--evidence", "R=r1"}).code, 1);
  EXPECT_EQ(run({"infer", "--cpt", cpt, "--evidence", "E=0.5,0.6,0", "--evidence", "R=r1"}).code, 1);
  EXPECT_EQ(run({"infer", "--cpt", cpt, "--evidence", "Q=q1", "--evidence", "R=r1"}).code, 1);
}

TEST(CliInfer, IdentityCptEchoesSoftEvidence) {
  const fs::path dir = fx::scratch_dir("cli_infer_id");
  save_cpt(Cpt({"y1", "y2", "y3"}, std::vector<NodeSpec>{{"X", {"x1", "x2", "x3"}}},
               Eigen::MatrixXd::Identity(3, 3)),
           dir / "id.cpt");
  const Outcome o = run({"infer", "--cpt", (dir / "id.cpt").string(), "--evidence", "X=0.2,0.3,0.5",
                         "--reverse-out", (dir / "rev.cpt").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out, "20.00%,30.00%,50.00%\n");
  EXPECT_EQ(load_cpt(dir / "rev.cpt").entries(), Eigen::MatrixXd::Identity(3, 3));
}

TEST(CliInfer, PositionalParentsWithoutNames) {
  const fs::path dir = fx::scratch_dir("cli_infer_pos");
  {
    std::ofstream f(dir / "c.cpt");
    f << "#cpt v1\na,b\n#arities 2\nz1,0.25,1\nz2,0.75,0\n";
  }
  const Outcome o = run({"infer", "--cpt", (dir / "c.cpt").string(), "--evidence", "1=1"});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out, "25.00%,75.00%\n");
}

TEST(CliDedup, CountsAndWrites) {
  const fs::path dir = fx::scratch_dir("cli_dedup");
  save_observations(fx::canonical_set(fx::survey_cpt(), 2), dir / "train.csv");
  const Outcome o = run({"dedup", "--train", (dir / "train.csv").string(), "--out", (dir / "d.csv").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(o.out, "rows,18\ndistinct,9\n");
  EXPECT_EQ(load_observations(dir / "d.csv").row_count(), 9u);
}
