#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cptgen/errors.hpp"
#include "cptgen/generation.hpp"
#include "cptgen/goodness.hpp"
#include "cptgen/io.hpp"

namespace cptgen::cli {

namespace {

struct RunConfig {
  std::string method;
  std::string train;
  std::string test;
  std::string cpt;
  std::string cpt_b;
  std::string out;
  std::string weights;
  std::string reverse_out;
  std::vector<std::string> evidence;
  double tolerance = kDefaultInputTolerance;
  double epsilon = 1e-6;
  int max_iter = 1000;
  double ridge = 0.0;
  double reg = 1e-8;
  std::uint64_t seed = 0;
  int restarts = 1;
  std::string init = "uniform";
  bool distinct = false;
  bool impute_uniform = false;
  bool plot_data = false;
  bool rounding = false;
};

std::string percent_line(const ProbVector& v) {
  std::vector<std::string> parts;
  for (double p : v.values()) parts.push_back(format_percent(p));
  return fmt::format("{}", fmt::join(parts, ","));
}

void print_repairs(const RepairedCpt& repaired, std::ostream& out) {
  for (std::size_t j = 0; j < repaired.columns.size(); ++j) {
    if (repaired.columns[j] == ColumnRepair::kNone) continue;
    out << fmt::format("repair,{},{}\n", repaired.cpt.cause_labels()[j], to_string(repaired.columns[j]));
  }
}

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  ObservationSet obs = load_observations(cfg.train, cfg.tolerance);
  const std::size_t loaded = obs.row_count();
  if (cfg.distinct) obs = dedup(obs);
  out << fmt::format("method,{}\n", cfg.method);
  out << fmt::format("rows,{}\n", obs.row_count());
  if (cfg.distinct) out << fmt::format("duplicates_removed,{}\n", loaded - obs.row_count());

  if (cfg.method == "mle") {
    const MleResult r = mle_cpt(obs, cfg.rounding);
    if (cfg.rounding) out << fmt::format("rows_skipped,{}\n", r.rows_skipped);
    for (std::size_t j : r.unobserved_columns) {
      out << fmt::format("unobserved,{},uniform\n", r.cpt.cause_labels()[j]);
    }
    save_cpt(r.cpt, cfg.out);
  } else if (cfg.method == "em") {
    EmConfig em;
    em.epsilon = cfg.epsilon;
    em.max_iterations = cfg.max_iter;
    em.seed = cfg.seed;
    em.restarts = cfg.restarts;
    em.init = cfg.init == "random" ? EmInit::kSeededRandom : EmInit::kUniform;
    try {
      const EmResult r = em_cpt(obs, em);
      out << fmt::format("iterations,{}\n", r.iterations);
      out << fmt::format("restart,{}\n", r.restart);
      out << fmt::format("log_likelihood,{:.17g}\n", r.final_loglik);
      save_cpt(r.cpt, cfg.out);
    } catch (const EmNonConvergence& e) {
      save_cpt(e.partial().cpt, cfg.out);
      err << fmt::format("warning: partial CPT written to {}\n", cfg.out);
      throw;
    }
  } else if (cfg.method == "regress-limit" || cfg.method == "regress-surge") {
    const CptBasis basis = cpt_basis_least_squares(obs, cfg.ridge);
    const RepairedCpt r =
        cfg.method == "regress-limit" ? boundary_limitation(basis) : potential_surge(basis);
    print_repairs(r, out);
    save_cpt(r.cpt, cfg.out);
  } else {
    LogitOptions options;
    options.reg = cfg.reg;
    options.max_iter = cfg.max_iter;
    const LogitModel model = fit_multinomial_logit(obs, options);
    const Cpt cpt = extract_cpt([&model](const ProbVector& x) { return logit_predict(model, x); },
                                obs.combined_labels(), obs.parents());
    save_cpt(cpt, cfg.out);
  }
  out << fmt::format("cpt,{}\n", cfg.out);
  return kOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const Cpt cpt = load_cpt(cfg.cpt);
  const ObservationSet test = load_observations(cfg.test, cfg.tolerance);
  const GoodnessReport report = evaluate_cpt(cpt, test);
  if (!cfg.out.empty()) write_report(report, cfg.out, cfg.plot_data);
  out << fmt::format("diagnostic_goodness,{}\n", format_percent(report.diagnostic_goodness));
  out << fmt::format("total_average_shift_error,{}\n", format_percent(report.total_average_shift_error));
  return kOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  const Cpt a = load_cpt(cfg.cpt);
  const Cpt b = load_cpt(cfg.cpt_b);
  if (a.effect_count() != b.effect_count() || a.cause_count() != b.cause_count()) {
    throw DimensionError(fmt::format("CPT shapes differ: {}x{} and {}x{}", a.effect_count(),
                                     a.cause_count(), b.effect_count(), b.cause_count()));
  }
  const ProbVector w =
      cfg.weights.empty() ? uniform(a.cause_labels()) : read_weights(cfg.weights, a.cause_labels());
  out << fmt::format("shift,{}\n", format_percent(cpt_shift_error(a, b)));
  out << fmt::format("kl,{:.17g}\n", cpt_kl_divergence(a, b, w));
  out << fmt::format("euclidean,{:.17g}\n", cpt_euclidean(a, b, w));
  return kOk;
}

Evidence parse_evidence(const std::string& text, const std::vector<NodeSpec>& parents,
                        double tolerance) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw ValidationError(fmt::format("evidence '{}' is not of the form node=state or node=p1,p2", text));
  }
  const std::string name = text.substr(0, eq);
  const std::string value = text.substr(eq + 1);
  const auto it = std::find_if(parents.begin(), parents.end(),
                               [&](const NodeSpec& p) { return p.name == name; });
  if (it == parents.end()) throw ValidationError(fmt::format("unknown parent node '{}'", name));
  const auto parent = static_cast<std::size_t>(it - parents.begin());
  const auto state = std::find(it->states.begin(), it->states.end(), value);
  if (state != it->states.end()) {
    return Evidence::hard(parent, static_cast<std::size_t>(state - it->states.begin()));
  }
  std::vector<double> values;
  std::stringstream parts(value);
  std::string part;
  while (std::getline(parts, part, ',')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw ValidationError(fmt::format("'{}' is neither a state of {} nor a probability list", value, name));
    }
    values.push_back(v);
  }
  if (values.size() != it->arity()) {
    throw DimensionError(fmt::format("soft evidence for {} has {} values, node has {} states", name,
                                     values.size(), it->arity()));
  }
  try {
    return Evidence::soft(parent, make_prob_vector(it->states, std::move(values), tolerance));
  } catch (const ValidationError& e) {
    throw ValidationError(e.reason(), Location{std::nullopt, std::nullopt, name});
  }
}

int cmd_infer(const RunConfig& cfg, std::ostream& out) {
  Cpt cpt = load_cpt(cfg.cpt);
  if (cpt.parents().empty()) {
    // Without names, parents are "1", "2", ... and states are 1-based indices.
    const std::vector<std::size_t> arities =
        cpt.has_arities() ? cpt.arities() : std::vector<std::size_t>{cpt.cause_count()};
    std::vector<NodeSpec> positional;
    for (std::size_t p = 0; p < arities.size(); ++p) {
      positional.push_back({std::to_string(p + 1), numbered_labels("", arities[p])});
    }
    cpt = cpt.with_parents(std::move(positional));
  }
  const auto& parents = cpt.parents();
  std::vector<Evidence> evidence;
  std::vector<bool> given(parents.size(), false);
  for (const auto& text : cfg.evidence) {
    Evidence e = parse_evidence(text, parents, cfg.tolerance);
    if (given[e.parent]) {
      throw ValidationError(fmt::format("evidence for {} given twice", parents[e.parent].name));
    }
    given[e.parent] = true;
    evidence.push_back(std::move(e));
  }
  for (std::size_t p = 0; p < parents.size(); ++p) {
    if (!given[p]) throw ValidationError(fmt::format("no evidence for parent {}", parents[p].name));
  }
  std::sort(evidence.begin(), evidence.end(),
            [](const Evidence& a, const Evidence& b) { return a.parent < b.parent; });

  const ProbVector effects = effects_from_evidence(cpt, evidence);
  out << percent_line(effects) << "\n";

  if (!cfg.reverse_out.empty()) {
    std::vector<ProbVector> beliefs;
    for (const auto& e : evidence) {
      beliefs.push_back(e.is_hard() ? hard_evidence(parents[e.parent].states, std::get<std::size_t>(e.value))
                                    : std::get<ProbVector>(e.value));
    }
    const Cpt reverse = reverse_cpt(cpt, combine(beliefs),
                                    cfg.impute_uniform ? ZeroMarginalPolicy::kImputeUniform
                                                       : ZeroMarginalPolicy::kFail);
    save_cpt(reverse, cfg.reverse_out);
  }
  return kOk;
}

int cmd_dedup(const RunConfig& cfg, std::ostream& out) {
  const ObservationSet obs = load_observations(cfg.train, cfg.tolerance);
  const ObservationSet distinct = dedup(obs);
  save_observations(distinct, cfg.out);
  out << fmt::format("rows,{}\n", obs.row_count());
  out << fmt::format("distinct,{}\n", distinct.row_count());
  return kOk;
}

void add_tolerance(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--tolerance", cfg.tolerance, "Input sum tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Conditional probability table generation and evaluation", "cptgen"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "Build a CPT from training observations");
  generate->add_option("--method", cfg.method, "Generation method")
      ->required()
      ->check(CLI::IsMember({"mle", "em", "regress-limit", "regress-surge", "logit"}));
  generate->add_option("--train", cfg.train, "Training observation CSV")->required();
  generate->add_option("--out", cfg.out, "Output CPT file")->required();
  add_tolerance(generate, cfg);
  generate->add_option("--epsilon", cfg.epsilon, "EM log-likelihood change threshold")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--max-iter", cfg.max_iter, "Iteration cap for EM and logit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--ridge", cfg.ridge, "Ridge added to X'X")->check(CLI::NonNegativeNumber);
  generate->add_option("--reg", cfg.reg, "Logit slope penalty")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  generate->add_option("--seed", cfg.seed, "EM random seed");
  generate->add_option("--restarts", cfg.restarts, "EM restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  generate->add_option("--init", cfg.init, "EM initialisation")
      ->check(CLI::IsMember({"uniform", "random"}))
      ->capture_default_str();
  generate->add_flag("--distinct", cfg.distinct, "Drop exact duplicate rows first");
  generate->add_flag("--rounding", cfg.rounding, "MLE: round soft rows to hard evidence");

  auto* evaluate = app.add_subcommand("evaluate", "Score a CPT against test observations");
  evaluate->add_option("--cpt", cfg.cpt, "CPT file")->required();
  evaluate->add_option("--test", cfg.test, "Test observation CSV")->required();
  evaluate->add_option("--out", cfg.out, "Report file");
  evaluate->add_flag("--plot-data", cfg.plot_data, "Also write per-observation CSVs");
  add_tolerance(evaluate, cfg);

  auto* compare = app.add_subcommand("compare", "Compare two CPTs");
  compare->add_option("--cpt", cfg.cpt, "First CPT file")->required();
  compare->add_option("--cpt-b", cfg.cpt_b, "Second CPT file")->required();
  compare->add_option("--weights", cfg.weights, "Column weights for KL and Euclidean");

  auto* infer = app.add_subcommand("infer", "Effect probabilities under parent evidence");
  infer->add_option("--cpt", cfg.cpt, "CPT file")->required();
  infer->add_option("--evidence", cfg.evidence, "node=state or node=p1,p2,...")
      ->required()
      ->allow_extra_args(false);
  infer->add_option("--reverse-out", cfg.reverse_out, "Write P(cause | effect) here");
  infer->add_flag("--impute-uniform", cfg.impute_uniform, "Uniform columns for zero marginals");
  add_tolerance(infer, cfg);

  auto* dedup_cmd = app.add_subcommand("dedup", "Remove exact duplicate observation rows");
  dedup_cmd->add_option("--train", cfg.train, "Observation CSV")->required();
  dedup_cmd->add_option("--out", cfg.out, "Output CSV")->required();
  add_tolerance(dedup_cmd, cfg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputFailure;
  }

  try {
    if (*generate) return cmd_generate(cfg, out, err);
    if (*evaluate) return cmd_evaluate(cfg, out);
    if (*compare) return cmd_compare(cfg, out);
    if (*infer) return cmd_infer(cfg, out);
    return cmd_dedup(cfg, out);
  } catch (const SingularMatrixError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const NonConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputFailure;
  }
}

}  // namespace cptgen::cli
