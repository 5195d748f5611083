#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pirules/benchmarks.hpp"
#include "pirules/rules.hpp"

namespace pirules {

/// 12 significant digits, enough to make golden files byte-stable.
inline std::string format_degree(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line,
                                               const std::string& where) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw ValidationError(where + ": unterminated quote");
  cells.push_back(std::move(cell));
  return cells;
}

inline std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Distribution CSV: header row = domain labels, one distribution per row.

struct DistributionFile {
  std::vector<std::string> header;
  std::vector<DegreeVector> rows;
};

inline DistributionFile read_distribution_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  DistributionFile file;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string where = path.string() + ":" + std::to_string(lineno);
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    auto cells = detail::split_csv_line(line, where);
    if (lineno == 1) {
      file.header = std::move(cells);
      if (file.header.empty()) throw ValidationError(where + ": empty header");
      continue;
    }
    if (cells.size() != file.header.size())
      throw ValidationError(where + ": expected " + std::to_string(file.header.size()) +
                            " cells, found " + std::to_string(cells.size()));
    DegreeVector row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        throw ValidationError(where + ": column " + std::to_string(c + 1) +
                              ": not a number: '" + cells[c] + "'");
      }
      if (used != cells[c].size())
        throw ValidationError(where + ": column " + std::to_string(c + 1) +
                              ": trailing garbage in '" + cells[c] + "'");
      if (!is_degree(v))
        throw ValidationError(where + ": column " + std::to_string(c + 1) + ": degree " +
                              cells[c] + " outside [0,1]");
      row[c] = v;
    }
    file.rows.push_back(std::move(row));
  }
  if (file.header.empty()) throw ValidationError(path.string() + ": empty file");
  return file;
}

inline void write_distribution_csv(const std::filesystem::path& path,
                                   const std::vector<std::string>& header,
                                   const std::vector<DegreeVector>& rows) {
  auto out = detail::open_output(path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << detail::csv_escape(header[i]);
  }
  out << '\n';
  for (const DegreeVector& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_degree(row[i]);
    }
    out << '\n';
  }
}

/// Integer label rows (no header): digit labels per sample, plus the validity
/// flag for sudoku.
inline std::vector<std::vector<int>> read_labels_csv(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<std::vector<int>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = path.string() + ":" + std::to_string(lineno);
    auto cells = detail::split_csv_line(line, where);
    std::vector<int> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        row.push_back(std::stoi(cells[c]));
      } catch (const std::exception&) {
        throw ValidationError(where + ": column " + std::to_string(c + 1) +
                              ": not an integer: '" + cells[c] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_labels_csv(const std::filesystem::path& path,
                             const std::vector<std::vector<int>>& rows) {
  auto out = detail::open_output(path);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Rule file JSON.

inline nlohmann::json cascade_to_json(const Cascade& cascade) {
  nlohmann::json j;
  j["attributes"] = nlohmann::json::array();
  for (const auto& [name, domain] : cascade.attributes().entries())
    j["attributes"].push_back({{"name", name}, {"labels", domain.labels()}});
  j["rule_sets"] = nlohmann::json::array();
  for (const RuleSet& set : cascade.sets()) {
    nlohmann::json js;
    js["name"] = set.name();
    js["output"] = set.output_attribute();
    if (set.tau_group() != set.name()) js["tau_group"] = set.tau_group();
    js["rules"] = nlohmann::json::array();
    const Domain& out_dom = set.output_domain();
    for (const Rule& rule : set.rules()) {
      nlohmann::json jr;
      jr["premise"] = nlohmann::json::array();
      for (const Proposition& prop : rule.premise) {
        const Domain& dom = cascade.attributes().at(prop.attribute);
        std::vector<std::string> values;
        values.reserve(prop.values.size());
        for (std::size_t v : prop.values) values.push_back(dom.label(v));
        jr["premise"].push_back({{"attr", prop.attribute}, {"values", values}});
      }
      std::vector<std::string> conclusion;
      conclusion.reserve(rule.conclusion.size());
      for (std::size_t v : rule.conclusion) conclusion.push_back(out_dom.label(v));
      jr["conclusion"] = conclusion;
      if (rule.s != 0.0) jr["s"] = rule.s;
      if (rule.r != 0.0) jr["r"] = rule.r;
      js["rules"].push_back(std::move(jr));
    }
    j["rule_sets"].push_back(std::move(js));
  }
  return j;
}

inline Cascade cascade_from_json(const nlohmann::json& j, const std::string& where) {
  try {
    auto attrs = std::make_shared<AttributeTable>();
    for (const auto& ja : j.at("attributes"))
      attrs->add(ja.at("name").get<std::string>(),
                 Domain(ja.at("labels").get<std::vector<std::string>>()));
    AttributeTablePtr table = attrs;
    std::vector<RuleSet> sets;
    for (const auto& js : j.at("rule_sets")) {
      std::string output = js.at("output").get<std::string>();
      const Domain& out_dom = table->at(output);
      std::vector<Rule> rules;
      for (const auto& jr : js.at("rules")) {
        Rule rule;
        for (const auto& jp : jr.at("premise")) {
          Proposition prop;
          prop.attribute = jp.at("attr").get<std::string>();
          const Domain& dom = table->at(prop.attribute);
          for (const auto& v : jp.at("values").get<std::vector<std::string>>())
            prop.values.push_back(dom.index_of(v));
          rule.premise.push_back(std::move(prop));
        }
        for (const auto& v : jr.at("conclusion").get<std::vector<std::string>>())
          rule.conclusion.push_back(out_dom.index_of(v));
        rule.s = jr.value("s", 0.0);
        rule.r = jr.value("r", 0.0);
        rules.push_back(std::move(rule));
      }
      sets.emplace_back(js.value("name", output), output, table, std::move(rules),
                        js.value("tau_group", std::string{}));
    }
    return Cascade(table, std::move(sets));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline Cascade read_cascade_json(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return cascade_from_json(j, path.string());
}

inline void write_cascade_json(const std::filesystem::path& path, const Cascade& cascade) {
  auto out = detail::open_output(path);
  out << cascade_to_json(cascade).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Learned parameters JSON: per rule set, 1-based rule index -> {s, r}.

inline nlohmann::json parameters_to_json(const Cascade& cascade) {
  nlohmann::json j;
  for (const RuleSet& set : cascade.sets()) {
    nlohmann::json js;
    for (std::size_t i = 0; i < set.size(); ++i)
      js[std::to_string(i + 1)] = {{"s", set.rules()[i].s}, {"r", set.rules()[i].r}};
    j[set.name()] = std::move(js);
  }
  return j;
}

inline void write_parameters_json(const std::filesystem::path& path, const Cascade& cascade) {
  auto out = detail::open_output(path);
  out << parameters_to_json(cascade).dump(2) << '\n';
}

inline void apply_parameters_json(const std::filesystem::path& path, Cascade& cascade) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  for (RuleSet& set : cascade.sets()) {
    if (!j.contains(set.name())) continue;
    const nlohmann::json& js = j.at(set.name());
    std::vector<std::pair<Degree, Degree>> params;
    params.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      const nlohmann::json& jr = js.at(std::to_string(i + 1));
      params.emplace_back(jr.at("s").get<double>(), jr.at("r").get<double>());
    }
    set.set_parameters(params);
  }
}

// ---------------------------------------------------------------------------
// Training data JSONL: {"inputs": {attr: [degrees]}, "targets": {attr: label}}.

inline std::vector<TrainingSample> read_training_jsonl(const std::filesystem::path& path,
                                                       const Cascade& cascade) {
  auto in = detail::open_input(path);
  std::vector<TrainingSample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = path.string() + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      TrainingSample sample;
      for (const auto& [attr, degrees] : j.at("inputs").items()) {
        const Domain& dom = cascade.attributes().at(attr);
        DegreeVector row = degrees.get<DegreeVector>();
        if (row.size() != dom.size())
          throw ValidationError(where + ": '" + attr + "' needs " +
                                std::to_string(dom.size()) + " degrees");
        detail::check_degrees(row, "input degree");
        sample.inputs[attr] = std::move(row);
      }
      for (const auto& [attr, label] : j.at("targets").items()) {
        const Domain& dom = cascade.attributes().at(attr);
        sample.targets[attr] = dom.index_of(label.get<std::string>());
      }
      samples.push_back(std::move(sample));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Dataset manifest JSON.

struct Manifest {
  std::string problem;  // "addition" or "sudoku"
  std::size_t size = 0;  // k for addition, side for sudoku
  std::filesystem::path distributions;
  std::filesystem::path labels;
  std::string split;
};

inline Manifest read_manifest_json(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
    Manifest m;
    m.problem = j.at("problem").get<std::string>();
    if (m.problem == "addition")
      m.size = j.at("k").get<std::size_t>();
    else if (m.problem == "sudoku")
      m.size = j.at("side").get<std::size_t>();
    else
      throw ValidationError(path.string() + ": unknown problem '" + m.problem + "'");
    m.distributions = j.at("distributions").get<std::string>();
    m.labels = j.at("labels").get<std::string>();
    m.split = j.value("split", std::string{});
    // relative paths resolve against the manifest location
    auto base = path.parent_path();
    if (m.distributions.is_relative()) m.distributions = base / m.distributions;
    if (m.labels.is_relative()) m.labels = base / m.labels;
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void write_manifest_json(const std::filesystem::path& path, const Manifest& m) {
  nlohmann::json j;
  j["problem"] = m.problem;
  if (m.problem == "addition")
    j["k"] = m.size;
  else
    j["side"] = m.size;
  j["distributions"] = m.distributions.string();
  j["labels"] = m.labels.string();
  if (!m.split.empty()) j["split"] = m.split;
  auto out = detail::open_output(path);
  out << j.dump(2) << '\n';
}

/// Builds the generated cascade plus the sample list a manifest points at.
inline std::pair<Cascade, std::vector<ProblemSample>> load_manifest_dataset(const Manifest& m) {
  DistributionFile dist = read_distribution_csv(m.distributions);
  auto labels = read_labels_csv(m.labels);
  if (m.problem == "addition") {
    AdditionSpec spec{m.size};
    return {make_addition_cascade(spec), make_addition_samples(spec, dist.rows, labels)};
  }
  SudokuSpec spec = make_sudoku_spec(m.size);
  return {make_sudoku_cascade(spec), make_sudoku_samples(spec, dist.rows, labels)};
}

/// Structural warnings that do not block loading: rules with identical
/// premises but disjoint conclusions force the inferred distribution towards
/// non-normalization.
inline std::vector<std::string> validate_warnings(const Cascade& cascade) {
  std::vector<std::string> warnings;
  for (const RuleSet& set : cascade.sets()) {
    const auto& rules = set.rules();
    for (std::size_t i = 0; i < rules.size(); ++i)
      for (std::size_t j = i + 1; j < rules.size(); ++j) {
        auto same_premise = [&] {
          if (rules[i].premise.size() != rules[j].premise.size()) return false;
          for (std::size_t p = 0; p < rules[i].premise.size(); ++p) {
            if (rules[i].premise[p].attribute != rules[j].premise[p].attribute) return false;
            auto a = rules[i].premise[p].values, b = rules[j].premise[p].values;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a != b) return false;
          }
          return true;
        };
        if (!same_premise()) continue;
        std::set<std::size_t> ci(rules[i].conclusion.begin(), rules[i].conclusion.end());
        bool disjoint = true;
        for (std::size_t v : rules[j].conclusion)
          if (ci.count(v)) {
            disjoint = false;
            break;
          }
        if (disjoint)
          warnings.push_back("rule set '" + set.name() + "': rules " + std::to_string(i + 1) +
                             " and " + std::to_string(j + 1) +
                             " share a premise but conclude on disjoint sets; such rules "
                             "cannot both normalize (a repaired domain value would be needed)");
      }
  }
  return warnings;
}

}  // namespace pirules
