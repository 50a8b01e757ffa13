#include "cptgen/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "cptgen/errors.hpp"

namespace cptgen {

namespace fs = std::filesystem;

namespace {

std::ifstream open_for_read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  return in;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

void finish_write(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_record(const std::string& line, std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!trim(field).empty()) {
        throw ParseError("quote inside an unquoted field", Location{row, fields.size() + 1, {}});
      }
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", Location{row, fields.size() + 1, {}});
  fields.push_back(was_quoted ? field : trim(field));
  return fields;
}

double parse_number(const std::string& text, Location where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(fmt::format("'{}' is not a number", text), std::move(where));
  }
  if (!std::isfinite(value)) {
    throw ParseError(fmt::format("'{}' is not a finite number", text), std::move(where));
  }
  return value;
}

std::string number(double v) { return fmt::format("{:.17g}", v); }

struct Header {
  bool has_site = false;
  ObservationSchema schema;
};

Header parse_header(const std::string& line) {
  const std::vector<std::string> fields = split_record(line, 0);
  Header header;
  std::size_t start = 0;
  if (!fields.empty() && fields[0] == "site") {
    header.has_site = true;
    start = 1;
  }
  std::set<std::string> finished;
  for (std::size_t c = start; c < fields.size(); ++c) {
    const std::string& f = fields[c];
    const auto colon = f.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == f.size()) {
      throw SchemaError(fmt::format("header column {} ('{}') is not of the form node:state", c + 1, f));
    }
    const std::string node = f.substr(0, colon);
    const std::string state = f.substr(colon + 1);
    auto& nodes = header.schema.nodes;
    if (nodes.empty() || nodes.back().name != node) {
      if (!nodes.empty()) finished.insert(nodes.back().name);
      if (finished.count(node) != 0) {
        throw SchemaError(fmt::format("header column {}: columns of node '{}' are not contiguous",
                                      c + 1, node));
      }
      nodes.push_back({node, {}});
    }
    nodes.back().states.push_back(state);
  }
  header.schema.validate();
  return header;
}

}  // namespace

void ObservationSchema::validate() const {
  if (nodes.size() < 2) throw SchemaError("a schema needs at least one parent and one effect node");
  std::set<std::string> names;
  for (const auto& node : nodes) {
    if (node.name.empty()) throw SchemaError("node names must be non-empty");
    if (!names.insert(node.name).second) {
      throw SchemaError(fmt::format("node '{}' appears twice", node.name));
    }
    if (node.states.empty()) throw SchemaError(fmt::format("node '{}' has no states", node.name));
    std::set<std::string> states;
    for (const auto& s : node.states) {
      if (s.empty()) throw SchemaError(fmt::format("node '{}' has an empty state label", node.name));
      if (!states.insert(s).second) {
        throw SchemaError(fmt::format("node '{}' repeats state '{}'", node.name, s));
      }
    }
  }
}

ObservationSchema schema_from_header(const fs::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!next_line(in, line)) throw ParseError(fmt::format("'{}' is empty", path.string()));
  return parse_header(line).schema;
}

ObservationSet load_observations(const fs::path& path, const ObservationSchema& schema,
                                 double tolerance) {
  schema.validate();
  std::ifstream in = open_for_read(path);
  std::string line;
  if (!next_line(in, line)) throw ParseError(fmt::format("'{}' is empty", path.string()));
  const Header header = parse_header(line);
  if (header.schema.nodes != schema.nodes) {
    throw SchemaError(fmt::format("header of '{}' does not match the expected node:state columns",
                                  path.string()));
  }

  const std::size_t offset = header.has_site ? 1 : 0;
  std::size_t width = offset;
  for (const auto& node : schema.nodes) width += node.arity();

  std::vector<std::vector<double>> values;
  std::vector<std::string> sites;
  std::vector<std::size_t> source_rows;
  std::size_t row = 0;
  while (next_line(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_record(line, row);
    if (fields.size() != width) {
      throw ParseError(fmt::format("expected {} fields, found {}", width, fields.size()),
                       Location{row, std::nullopt, {}});
    }
    std::vector<double> parsed;
    parsed.reserve(width - offset);
    std::size_t c = offset;
    for (const auto& node : schema.nodes) {
      for (std::size_t s = 0; s < node.arity(); ++s, ++c) {
        parsed.push_back(parse_number(fields[c], Location{row, c + 1, node.name}));
      }
    }
    values.push_back(std::move(parsed));
    if (header.has_site) sites.push_back(fields[0]);
    source_rows.push_back(row);
  }
  if (values.empty()) throw ParseError(fmt::format("'{}' has no data rows", path.string()));

  const auto k = static_cast<Eigen::Index>(values.size());
  std::vector<Eigen::MatrixXd> blocks;
  std::size_t c = 0;
  for (const auto& node : schema.nodes) {
    Eigen::MatrixXd block(k, static_cast<Eigen::Index>(node.arity()));
    for (Eigen::Index r = 0; r < k; ++r) {
      for (std::size_t s = 0; s < node.arity(); ++s) {
        block(r, static_cast<Eigen::Index>(s)) = values[static_cast<std::size_t>(r)][c + s];
      }
    }
    c += node.arity();
    blocks.push_back(std::move(block));
  }
  Eigen::MatrixXd effect = std::move(blocks.back());
  blocks.pop_back();
  return ObservationSet(schema.parents(), std::move(blocks), schema.effect(), std::move(effect),
                        tolerance, std::move(source_rows), std::move(sites));
}

ObservationSet load_observations(const fs::path& path, double tolerance) {
  return load_observations(path, schema_from_header(path), tolerance);
}

void save_observations(const ObservationSet& observations, const fs::path& path) {
  std::ofstream out = open_for_write(path);
  std::vector<std::string> header;
  if (observations.has_sites()) header.emplace_back("site");
  const auto all_nodes = [&] {
    std::vector<std::pair<const NodeSpec*, const Eigen::MatrixXd*>> nodes;
    for (std::size_t p = 0; p < observations.parent_count(); ++p) {
      nodes.emplace_back(&observations.parents()[p], &observations.parent_blocks()[p]);
    }
    nodes.emplace_back(&observations.effect(), &observations.effect_block());
    return nodes;
  }();
  for (const auto& [node, block] : all_nodes) {
    for (const auto& s : node->states) header.push_back(node->name + ":" + s);
  }
  out << fmt::format("{}\n", fmt::join(header, ","));
  for (std::size_t r = 0; r < observations.row_count(); ++r) {
    std::vector<std::string> fields;
    if (observations.has_sites()) fields.push_back(observations.sites()[r]);
    for (const auto& [node, block] : all_nodes) {
      for (Eigen::Index c = 0; c < block->cols(); ++c) {
        fields.push_back(number((*block)(static_cast<Eigen::Index>(r), c)));
      }
    }
    out << fmt::format("{}\n", fmt::join(fields, ","));
  }
  finish_write(out, path);
}

ObservationSet dedup(const ObservationSet& observations) {
  std::set<std::vector<double>> seen;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < observations.row_count(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    std::vector<double> key;
    for (const auto& block : observations.parent_blocks()) {
      for (Eigen::Index c = 0; c < block.cols(); ++c) key.push_back(block(row, c));
    }
    for (Eigen::Index c = 0; c < observations.effect_block().cols(); ++c) {
      key.push_back(observations.effect_block()(row, c));
    }
    if (seen.insert(std::move(key)).second) keep.push_back(r);
  }
  return observations.select(keep);
}

// ---------------------------------------------------------------------------
// CPT files
// ---------------------------------------------------------------------------

void save_cpt(const Cpt& cpt, const fs::path& path) {
  std::ofstream out = open_for_write(path);
  out << "#cpt v1\n";
  out << fmt::format("{}\n", fmt::join(cpt.cause_labels(), ","));
  if (cpt.has_arities()) out << fmt::format("#arities {}\n", fmt::join(cpt.arities(), ","));
  if (!cpt.parents().empty()) {
    std::vector<std::string> parts;
    for (const auto& p : cpt.parents()) parts.push_back(fmt::format("{}={}", p.name, fmt::join(p.states, "|")));
    out << fmt::format("#parents {}\n", fmt::join(parts, ";"));
  }
  for (std::size_t i = 0; i < cpt.effect_count(); ++i) {
    std::vector<std::string> fields{cpt.effect_labels()[i]};
    for (std::size_t j = 0; j < cpt.cause_count(); ++j) fields.push_back(number(cpt(i, j)));
    out << fmt::format("{}\n", fmt::join(fields, ","));
  }
  finish_write(out, path);
}

namespace {

std::vector<NodeSpec> parse_parents(const std::string& spec, std::size_t line) {
  std::vector<NodeSpec> parents;
  std::stringstream nodes(spec);
  std::string part;
  while (std::getline(nodes, part, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ParseError(fmt::format("'{}' is not of the form node=s1|s2", part), Location{line, {}, {}});
    }
    NodeSpec node{trim(part.substr(0, eq)), {}};
    std::stringstream states(part.substr(eq + 1));
    std::string s;
    while (std::getline(states, s, '|')) node.states.push_back(trim(s));
    parents.push_back(std::move(node));
  }
  return parents;
}

}  // namespace

Cpt load_cpt(const fs::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  std::size_t line_no = 1;
  if (!next_line(in, line) || trim(line) != "#cpt v1") {
    throw ParseError(fmt::format("'{}' does not start with '#cpt v1'", path.string()), Location{1, {}, {}});
  }
  ++line_no;
  if (!next_line(in, line)) throw ParseError("missing cause label line", Location{line_no, {}, {}});
  const std::vector<std::string> causes = split_record(line, line_no);

  std::vector<std::size_t> arities;
  std::vector<NodeSpec> parents;
  std::vector<std::string> effects;
  std::vector<std::vector<double>> rows;
  while (next_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line.rfind("#arities", 0) == 0) {
      for (const auto& f : split_record(trim(line.substr(8)), line_no)) {
        const double a = parse_number(f, Location{line_no, {}, {}});
        if (a < 1 || a != std::floor(a)) throw ParseError("arities must be positive integers", Location{line_no, {}, {}});
        arities.push_back(static_cast<std::size_t>(a));
      }
      continue;
    }
    if (line.rfind("#parents", 0) == 0) {
      parents = parse_parents(trim(line.substr(8)), line_no);
      continue;
    }
    if (line[0] == '#') throw ParseError(fmt::format("unknown directive '{}'", line), Location{line_no, {}, {}});
    const std::vector<std::string> fields = split_record(line, line_no);
    if (fields.size() != causes.size() + 1) {
      throw ParseError(fmt::format("expected {} fields, found {}", causes.size() + 1, fields.size()),
                       Location{line_no, {}, {}});
    }
    effects.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      row.push_back(parse_number(fields[c], Location{line_no, c + 1, {}}));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(fmt::format("'{}' has no effect rows", path.string()));

  Eigen::MatrixXd entries(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(causes.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < causes.size(); ++j) {
      entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  if (!parents.empty()) {
    Cpt cpt(std::move(effects), std::move(parents), std::move(entries));
    if (cpt.cause_labels() != causes) {
      throw SchemaError("cause labels do not match the combined #parents states");
    }
    if (!arities.empty() && arities != cpt.arities()) {
      throw SchemaError("#arities disagrees with #parents");
    }
    return cpt;
  }
  return Cpt(std::move(effects), causes, std::move(entries), std::move(arities));
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string format_percent(double fraction) {
  if (std::isinf(fraction)) return fraction > 0 ? "inf" : "-inf";
  if (std::isnan(fraction)) return "nan";
  // nearbyint honours the default round-to-nearest-even mode.
  const double hundredths = std::nearbyint(fraction * 10000.0);
  return fmt::format("{:.2f}%", hundredths / 100.0 + 0.0);
}

void write_report(const GoodnessReport& report, const fs::path& path, bool plot_data) {
  {
    std::ofstream out = open_for_write(path);
    out << fmt::format("observation_count,{}\n", report.observation_count);
    out << fmt::format("mean_absolute_error,{}\n", format_percent(report.mean_absolute_error));
    out << fmt::format("total_average_shift_error,{}\n", format_percent(report.total_average_shift_error));
    out << fmt::format("diagnostic_goodness,{}\n", format_percent(report.diagnostic_goodness));
    out << fmt::format("diagnostic_error,{}\n", format_percent(report.diagnostic_error));
    for (std::size_t j = 0; j < report.state_errors.size(); ++j) {
      const std::string label =
          j < report.effect_labels.size() ? report.effect_labels[j] : fmt::format("{}", j + 1);
      out << fmt::format("state_error:{},{}\n", label, format_percent(report.state_errors[j]));
    }
    finish_write(out, path);
  }
  if (!plot_data) return;

  const fs::path dir = path.parent_path();
  const std::string stem = path.stem().string();
  const fs::path errors_path = dir / (stem + "_errors.csv");
  {
    std::ofstream out = open_for_write(errors_path);
    out << "observation,delta\n";
    for (std::size_t i = 0; i < report.per_observation_errors.size(); ++i) {
      out << fmt::format("{},{}\n", i + 1, number(report.per_observation_errors[i]));
    }
    finish_write(out, errors_path);
  }
  const fs::path effects_path = dir / (stem + "_effects.csv");
  std::ofstream out = open_for_write(effects_path);
  std::vector<std::string> header{"observation"};
  for (const auto& l : report.effect_labels) header.push_back("test:" + l);
  for (const auto& l : report.effect_labels) header.push_back("predicted:" + l);
  out << fmt::format("{}\n", fmt::join(header, ","));
  for (Eigen::Index r = 0; r < report.observed.rows(); ++r) {
    std::vector<std::string> fields{fmt::format("{}", r + 1)};
    for (Eigen::Index c = 0; c < report.observed.cols(); ++c) fields.push_back(number(report.observed(r, c)));
    for (Eigen::Index c = 0; c < report.predicted.cols(); ++c) fields.push_back(number(report.predicted(r, c)));
    out << fmt::format("{}\n", fmt::join(fields, ","));
  }
  finish_write(out, effects_path);
}

ProbVector read_weights(const fs::path& path, std::vector<std::string> labels) {
  std::ifstream in = open_for_read(path);
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (next_line(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_record(line, row);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      values.push_back(parse_number(fields[c], Location{row, c + 1, {}}));
    }
  }
  if (values.size() != labels.size()) {
    throw DimensionError(fmt::format("'{}' holds {} weights, CPT has {} columns", path.string(),
                                     values.size(), labels.size()));
  }
  return make_prob_vector(std::move(labels), std::move(values));
}

}  // namespace cptgen
