#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pirules/learning.hpp"
#include "pirules/transforms.hpp"

namespace pirules {

namespace detail {

inline std::vector<std::string> digit_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i);
  return labels;
}

inline std::vector<std::string> pair_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n * n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      labels.push_back("(" + std::to_string(u) + "," + std::to_string(v) + ")");
  return labels;
}

inline std::vector<std::string> triple_labels(std::size_t n, std::size_t w) {
  std::vector<std::string> labels;
  labels.reserve(n * n * w);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < w; ++c)
        labels.push_back("(" + std::to_string(u) + "," + std::to_string(v) + "," +
                         std::to_string(c) + ")");
  return labels;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Digit-addition rule systems.

struct AdditionSpec {
  std::size_t k = 1;  // digits per operand

  std::string operand_attr(std::size_t i) const { return "a" + std::to_string(i); }  // 1..2k
  std::string tuple_attr(std::size_t i) const { return "c" + std::to_string(i); }    // 1..k
  std::string carry_attr(std::size_t i) const { return "w" + std::to_string(i); }    // 1..k
  std::string digit_attr(std::size_t i) const { return "y" + std::to_string(i); }    // 0..k
};

/// 3k+1 rule sets, 32k rules total: the pair set for the least significant
/// column, triple sets with the incoming carry for the others, one-rule carry
/// sets, ten-rule sum-digit sets and the one-rule leading-digit set, wired in
/// inference order. All parameters start at zero.
inline Cascade make_addition_cascade(const AdditionSpec& spec) {
  if (spec.k < 1) throw ValidationError("addition spec needs k >= 1");
  const std::size_t k = spec.k;
  auto attrs = std::make_shared<AttributeTable>();
  Domain digits(detail::digit_labels(10));
  Domain binary(detail::digit_labels(2));
  Domain pairs(detail::pair_labels(10));
  Domain triples(detail::triple_labels(10, 2));
  for (std::size_t i = 1; i <= 2 * k; ++i) attrs->add(spec.operand_attr(i), digits);
  for (std::size_t i = 1; i <= k; ++i)
    attrs->add(spec.tuple_attr(i), i == k ? pairs : triples);
  for (std::size_t i = 1; i <= k; ++i) attrs->add(spec.carry_attr(i), binary);
  attrs->add(spec.digit_attr(0), binary);
  for (std::size_t i = 1; i <= k; ++i) attrs->add(spec.digit_attr(i), digits);
  AttributeTablePtr table = attrs;

  auto pair_index = [](std::size_t u, std::size_t v) { return u * 10 + v; };
  auto triple_index = [](std::size_t u, std::size_t v, std::size_t w) {
    return (u * 10 + v) * 2 + w;
  };

  std::vector<RuleSet> sets;

  auto make_tuple_set = [&](std::size_t i) {
    std::vector<Rule> rules;
    if (i == k) {
      for (std::size_t j = 0; j < 10; ++j) {
        std::vector<std::size_t> q;
        for (std::size_t v = 0; v < 10; ++v) q.push_back(pair_index(j, v));
        rules.push_back({{{spec.operand_attr(k), {j}}}, q});
      }
      for (std::size_t j = 0; j < 10; ++j) {
        std::vector<std::size_t> q;
        for (std::size_t u = 0; u < 10; ++u) q.push_back(pair_index(u, j));
        rules.push_back({{{spec.operand_attr(2 * k), {j}}}, q});
      }
    } else {
      for (std::size_t j = 0; j < 10; ++j) {
        std::vector<std::size_t> q;
        for (std::size_t v = 0; v < 10; ++v)
          for (std::size_t w = 0; w < 2; ++w) q.push_back(triple_index(j, v, w));
        rules.push_back({{{spec.operand_attr(i), {j}}}, q});
      }
      for (std::size_t j = 0; j < 10; ++j) {
        std::vector<std::size_t> q;
        for (std::size_t u = 0; u < 10; ++u)
          for (std::size_t w = 0; w < 2; ++w) q.push_back(triple_index(u, j, w));
        rules.push_back({{{spec.operand_attr(k + i), {j}}}, q});
      }
      std::vector<std::size_t> no_carry;
      for (std::size_t u = 0; u < 10; ++u)
        for (std::size_t v = 0; v < 10; ++v) no_carry.push_back(triple_index(u, v, 0));
      rules.push_back({{{spec.carry_attr(i + 1), {0}}}, no_carry});
    }
    sets.emplace_back(spec.tuple_attr(i), spec.tuple_attr(i), table, std::move(rules), "c");
  };

  auto make_carry_set = [&](std::size_t i) {
    std::vector<std::size_t> overflow;
    if (i == k) {
      for (std::size_t u = 0; u < 10; ++u)
        for (std::size_t v = 0; v < 10; ++v)
          if (u + v >= 10) overflow.push_back(pair_index(u, v));
    } else {
      for (std::size_t u = 0; u < 10; ++u)
        for (std::size_t v = 0; v < 10; ++v)
          for (std::size_t w = 0; w < 2; ++w)
            if (u + v + w >= 10) overflow.push_back(triple_index(u, v, w));
    }
    std::vector<Rule> rules;
    rules.push_back({{{spec.tuple_attr(i), std::move(overflow)}}, {1}});
    sets.emplace_back(spec.carry_attr(i), spec.carry_attr(i), table, std::move(rules), "w");
  };

  auto make_digit_set = [&](std::size_t i) {
    std::vector<Rule> rules;
    if (i == 0) {
      rules.push_back({{{spec.carry_attr(1), {0}}}, {0}});
    } else {
      for (std::size_t j = 0; j < 10; ++j) {
        std::vector<std::size_t> q;
        if (i == k) {
          for (std::size_t u = 0; u < 10; ++u)
            for (std::size_t v = 0; v < 10; ++v)
              if ((u + v) % 10 == j) q.push_back(pair_index(u, v));
        } else {
          for (std::size_t u = 0; u < 10; ++u)
            for (std::size_t v = 0; v < 10; ++v)
              for (std::size_t w = 0; w < 2; ++w)
                if ((u + v + w) % 10 == j) q.push_back(triple_index(u, v, w));
        }
        rules.push_back({{{spec.tuple_attr(i), std::move(q)}}, {j}});
      }
    }
    sets.emplace_back(spec.digit_attr(i), spec.digit_attr(i), table, std::move(rules), "y");
  };

  for (std::size_t i = k; i >= 1; --i) {
    make_tuple_set(i);
    make_carry_set(i);
  }
  for (std::size_t i = 1; i <= k; ++i) make_digit_set(i);
  make_digit_set(0);

  return Cascade(table, std::move(sets));
}

/// Per-sample targets for every output attribute, derived from the 2k digit
/// labels: column tuples, carries, sum digits and the leading digit.
inline std::map<std::string, std::size_t> addition_targets(const AdditionSpec& spec,
                                                           std::span<const int> digits) {
  const std::size_t k = spec.k;
  if (digits.size() != 2 * k)
    throw ValidationError("addition sample needs " + std::to_string(2 * k) + " digit labels");
  for (int d : digits)
    if (d < 0 || d > 9) throw ValidationError("digit label out of range");
  std::map<std::string, std::size_t> t;
  std::vector<int> carry(k + 2, 0);
  for (std::size_t i = k; i >= 1; --i) {
    int u = digits[i - 1], v = digits[k + i - 1];
    int sum = (i == k) ? u + v : u + v + carry[i + 1];
    carry[i] = sum >= 10 ? 1 : 0;
    if (i == k)
      t[spec.tuple_attr(i)] = static_cast<std::size_t>(u * 10 + v);
    else
      t[spec.tuple_attr(i)] = static_cast<std::size_t>((u * 10 + v) * 2 + carry[i + 1]);
    t[spec.carry_attr(i)] = static_cast<std::size_t>(carry[i]);
    t[spec.digit_attr(i)] = static_cast<std::size_t>(sum % 10);
  }
  t[spec.digit_attr(0)] = static_cast<std::size_t>(carry[1]);
  return t;
}

// ---------------------------------------------------------------------------
// Sudoku validity rule systems.

struct SudokuSpec {
  std::size_t side = 4;  // 4 or 9
  std::vector<std::array<int, 4>> constraints;  // (i, j, i', j'), 1-based

  std::string cell_attr(int i, int j) const {
    return "a_" + std::to_string(i) + "_" + std::to_string(j);
  }
  std::string pair_attr(const std::array<int, 4>& t) const {
    return "b_" + std::to_string(t[0]) + "_" + std::to_string(t[1]) + "_" +
           std::to_string(t[2]) + "_" + std::to_string(t[3]);
  }
};

/// The "small constraints": one tuple per pair of cells that must differ,
/// combining rows, columns and sub-grids (56 tuples for side 4, 810 for
/// side 9).
inline SudokuSpec make_sudoku_spec(std::size_t side) {
  if (side != 4 && side != 9) throw ValidationError("sudoku side must be 4 or 9");
  const int s = static_cast<int>(side);
  const int box = side == 4 ? 2 : 3;
  std::set<std::array<int, 4>> f;
  for (int i = 1; i <= s; ++i)
    for (int j = 1; j <= s; ++j)
      for (int j2 = j + 1; j2 <= s; ++j2) f.insert({i, j, i, j2});
  for (int j = 1; j <= s; ++j)
    for (int i = 1; i <= s; ++i)
      for (int i2 = i + 1; i2 <= s; ++i2) f.insert({i, j, i2, j});
  auto row_of = [&](int sq, int e) { return ((sq - 1) / box) * box + (e - 1) / box + 1; };
  auto col_of = [&](int sq, int e) { return ((sq - 1) % box) * box + (e - 1) % box + 1; };
  for (int sq = 1; sq <= s; ++sq)
    for (int e = 1; e <= s; ++e)
      for (int e2 = e + 1; e2 <= s; ++e2)
        f.insert({row_of(sq, e), col_of(sq, e), row_of(sq, e2), col_of(sq, e2)});
  SudokuSpec spec;
  spec.side = side;
  spec.constraints.assign(f.begin(), f.end());
  return spec;
}

/// Per constraint, 2*side pairwise rules over the pair attribute; one final
/// validity rule whose premise conjoins every "different pair" proposition.
inline Cascade make_sudoku_cascade(const SudokuSpec& spec) {
  const std::size_t side = spec.side;
  auto attrs = std::make_shared<AttributeTable>();
  Domain digits(detail::digit_labels(side));
  Domain pairs(detail::pair_labels(side));
  Domain binary(detail::digit_labels(2));
  for (int i = 1; i <= static_cast<int>(side); ++i)
    for (int j = 1; j <= static_cast<int>(side); ++j) attrs->add(spec.cell_attr(i, j), digits);
  for (const auto& t : spec.constraints) attrs->add(spec.pair_attr(t), pairs);
  attrs->add("c", binary);
  AttributeTablePtr table = attrs;

  std::vector<RuleSet> sets;
  for (const auto& t : spec.constraints) {
    std::vector<Rule> rules;
    for (std::size_t k = 0; k < side; ++k) {
      std::vector<std::size_t> left, right;
      for (std::size_t l = 0; l < side; ++l) {
        left.push_back(k * side + l);
        right.push_back(l * side + k);
      }
      rules.push_back({{{spec.cell_attr(t[0], t[1]), {k}}}, std::move(left)});
      rules.push_back({{{spec.cell_attr(t[2], t[3]), {k}}}, std::move(right)});
    }
    sets.emplace_back(spec.pair_attr(t), spec.pair_attr(t), table, std::move(rules), "pair");
  }

  std::vector<std::size_t> different;
  for (std::size_t u = 0; u < side; ++u)
    for (std::size_t v = 0; v < side; ++v)
      if (u != v) different.push_back(u * side + v);
  Rule validity;
  for (const auto& t : spec.constraints)
    validity.premise.push_back({spec.pair_attr(t), different});
  validity.conclusion = {1};
  sets.emplace_back("c", "c", table, std::vector<Rule>{std::move(validity)}, "validity");

  return Cascade(table, std::move(sets));
}

/// Targets: each pair attribute points at the true label pair; the validity
/// attribute at the puzzle label.
inline std::map<std::string, std::size_t> sudoku_targets(const SudokuSpec& spec,
                                                         std::span<const int> cells,
                                                         bool valid) {
  const std::size_t side = spec.side;
  if (cells.size() != side * side)
    throw ValidationError("sudoku sample needs " + std::to_string(side * side) + " cell labels");
  for (int d : cells)
    if (d < 0 || d >= static_cast<int>(side)) throw ValidationError("cell label out of range");
  std::map<std::string, std::size_t> t;
  for (const auto& c : spec.constraints) {
    int u = cells[(c[0] - 1) * static_cast<int>(side) + (c[1] - 1)];
    int v = cells[(c[2] - 1) * static_cast<int>(side) + (c[3] - 1)];
    t[spec.pair_attr(c)] = static_cast<std::size_t>(u) * side + static_cast<std::size_t>(v);
  }
  t["c"] = valid ? 1 : 0;
  return t;
}

// ---------------------------------------------------------------------------
// Synthetic classifier outputs.

/// Stand-in for softmax exports: a distribution peaked at the true label.
/// temperature 0 gives one-point rows; at temperature 1 the true label keeps
/// `base` and the rest is near-uniform with seeded jitter.
struct SyntheticNoiseModel {
  Degree base = 0.9;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

inline std::vector<DegreeVector> gen_synthetic_distributions(
    std::size_t domain_size, const std::vector<std::size_t>& truth,
    const SyntheticNoiseModel& model) {
  if (domain_size == 0) throw ValidationError("empty domain");
  if (domain_size > 1 &&
      !(model.base > 1.0 / static_cast<double>(domain_size) && model.base <= 1.0))
    throw ValidationError("base mass must lie in (1/|D|, 1]");
  if (model.temperature < 0.0 || model.temperature > 1.0)
    throw ValidationError("noise temperature must lie in [0, 1]");
  std::mt19937_64 rng(model.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<DegreeVector> rows;
  rows.reserve(truth.size());
  for (std::size_t label : truth) {
    if (label >= domain_size) throw ValidationError("truth label out of range");
    DegreeVector row(domain_size, 0.0);
    if (model.temperature == 0.0 || domain_size == 1) {
      row[label] = 1.0;
    } else {
      double correct = 1.0 - model.temperature * (1.0 - model.base);
      row[label] = correct;
      double rest = 1.0 - correct;
      std::vector<double> weights;
      weights.reserve(domain_size - 1);
      double total = 0.0;
      for (std::size_t v = 0; v < domain_size; ++v) {
        if (v == label) continue;
        double w = 1.0 + model.temperature * (unit(rng) - 0.5);
        weights.push_back(w);
        total += w;
      }
      std::size_t wi = 0;
      for (std::size_t v = 0; v < domain_size; ++v)
        if (v != label) row[v] = rest * weights[wi++] / total;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Dataset assembly and evaluation.

/// One evaluation record: probability rows per external input attribute plus
/// the targeted label per output attribute.
struct ProblemSample {
  DistributionMap prob_inputs;
  std::map<std::string, std::size_t> targets;
};

inline std::vector<ProblemSample> make_addition_samples(
    const AdditionSpec& spec, const std::vector<DegreeVector>& dist_rows,
    const std::vector<std::vector<int>>& label_rows) {
  const std::size_t k = spec.k;
  if (dist_rows.size() != 2 * k * label_rows.size())
    throw ValidationError("expected " + std::to_string(2 * k) +
                          " distribution rows per sample");
  std::vector<ProblemSample> samples;
  samples.reserve(label_rows.size());
  for (std::size_t s = 0; s < label_rows.size(); ++s) {
    ProblemSample sample;
    for (std::size_t i = 1; i <= 2 * k; ++i)
      sample.prob_inputs[spec.operand_attr(i)] = dist_rows[s * 2 * k + (i - 1)];
    sample.targets = addition_targets(spec, label_rows[s]);
    samples.push_back(std::move(sample));
  }
  return samples;
}

inline std::vector<ProblemSample> make_sudoku_samples(
    const SudokuSpec& spec, const std::vector<DegreeVector>& dist_rows,
    const std::vector<std::vector<int>>& label_rows) {
  const std::size_t cells = spec.side * spec.side;
  if (dist_rows.size() != cells * label_rows.size())
    throw ValidationError("expected " + std::to_string(cells) + " distribution rows per sample");
  std::vector<ProblemSample> samples;
  samples.reserve(label_rows.size());
  for (std::size_t s = 0; s < label_rows.size(); ++s) {
    const std::vector<int>& row = label_rows[s];
    if (row.size() != cells + 1)
      throw ValidationError("sudoku label rows carry the cells plus the validity flag");
    ProblemSample sample;
    std::size_t idx = 0;
    for (int i = 1; i <= static_cast<int>(spec.side); ++i)
      for (int j = 1; j <= static_cast<int>(spec.side); ++j)
        sample.prob_inputs[spec.cell_attr(i, j)] = dist_rows[s * cells + idx++];
    std::span<const int> cell_labels(row.data(), cells);
    sample.targets = sudoku_targets(spec, cell_labels, row[cells] != 0);
    samples.push_back(std::move(sample));
  }
  return samples;
}

/// Fully synthetic addition dataset: random digit labels plus synthetic
/// classifier rows, deterministic for a given spec/model/seed.
inline std::pair<std::vector<ProblemSample>, std::vector<std::vector<int>>>
synth_addition_dataset(const AdditionSpec& spec, std::size_t count,
                       const SyntheticNoiseModel& model, std::uint64_t label_seed) {
  std::mt19937_64 rng(label_seed);
  std::uniform_int_distribution<int> digit(0, 9);
  std::vector<std::vector<int>> labels(count, std::vector<int>(2 * spec.k));
  std::vector<std::size_t> truth;
  truth.reserve(count * 2 * spec.k);
  for (auto& row : labels)
    for (int& d : row) {
      d = digit(rng);
      truth.push_back(static_cast<std::size_t>(d));
    }
  auto rows = gen_synthetic_distributions(10, truth, model);
  return {make_addition_samples(spec, rows, labels), labels};
}

inline TrainingSample to_training_sample(const ProblemSample& sample, TransformMethod method) {
  TrainingSample out;
  for (const auto& [attr, row] : sample.prob_inputs) out.inputs[attr] = prob_to_poss(row, method);
  out.targets = sample.targets;
  return out;
}

inline std::vector<TrainingSample> to_training_samples(const std::vector<ProblemSample>& samples,
                                                       TransformMethod method) {
  std::vector<TrainingSample> out;
  out.reserve(samples.size());
  for (const ProblemSample& s : samples) out.push_back(to_training_sample(s, method));
  return out;
}

struct EvalReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::size_t ambiguous = 0;
  double accuracy = 0.0;
  std::vector<std::pair<std::string, double>> stage_seconds;  // CPU time per rule set
};

/// Transforms every probability row, runs the cascade and compares the unique
/// argmax of every final output against its target. Any argmax tie marks the
/// sample ambiguous and therefore wrong.
inline EvalReport evaluate(const Cascade& cascade, const std::vector<ProblemSample>& samples,
                           TransformMethod method, const InferOptions& opts = {},
                           unsigned jobs = 1) {
  EvalReport report;
  report.total = samples.size();
  CompiledCascade compiled = compile(cascade);
  const std::size_t n_sets = cascade.sets().size();
  std::vector<std::atomic<std::int64_t>> stage_ns(n_sets);
  for (auto& a : stage_ns) a.store(0);
  std::vector<char> outcome(samples.size(), 0);  // 0 wrong, 1 correct, 2 ambiguous

  parallel_for(samples.size(), jobs, [&](std::size_t si) {
    DistributionMap state;
    for (const auto& [attr, row] : samples[si].prob_inputs)
      state[attr] = prob_to_poss(row, method);
    for (std::size_t s = 0; s < n_sets; ++s) {
      const RuleSet& set = cascade.sets()[s];
      auto t0 = std::chrono::steady_clock::now();
      PremiseDegrees premise = premise_degrees(set, state, opts);
      DegreeVector out =
          cells_to_labels(set.partition(), infer_cells(compiled.matrices[s], premise));
      auto t1 = std::chrono::steady_clock::now();
      stage_ns[s].fetch_add(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
      state[set.output_attribute()] = std::move(out);
    }
    bool ok = true, tie = false;
    for (const std::string& attr : cascade.final_outputs()) {
      auto target_it = samples[si].targets.find(attr);
      if (target_it == samples[si].targets.end()) continue;
      auto arg = unique_argmax(state.at(attr));
      if (!arg) {
        tie = true;
        ok = false;
      } else if (*arg != target_it->second) {
        ok = false;
      }
    }
    outcome[si] = tie ? 2 : (ok ? 1 : 0);
  });

  for (char o : outcome) {
    if (o == 1) ++report.correct;
    if (o == 2) ++report.ambiguous;
  }
  report.accuracy = samples.empty()
                        ? 0.0
                        : static_cast<double>(report.correct) / static_cast<double>(samples.size());
  for (std::size_t s = 0; s < n_sets; ++s)
    report.stage_seconds.emplace_back(cascade.sets()[s].name(),
                                      static_cast<double>(stage_ns[s].load()) * 1e-9);
  return report;
}

}  // namespace pirules
