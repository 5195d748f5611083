#pragma once

#include <map>
#include <string>
#include <vector>

#include "pirules/inference.hpp"
#include "pirules/learning.hpp"

namespace pirules {

/// Inference inversion system: o_target = M minmax X, with the premise
/// degrees (lambda_1, rho_1, ..., lambda_n, rho_n) as the unknowns.
struct OmegaSystem {
  DegreeMatrix m;         // inference matrix with the rule parameters fixed
  DegreeVector o_target;  // target output per partition cell
  const PartitionIndex* partition = nullptr;
};

inline OmegaSystem build_omega_system(const RuleSet& rules, std::span<const Degree> target) {
  if (!is_normalized(target))
    throw NotNormalizedError("backpropagation target must be normalized");
  return {build_inference_matrix(rules), build_second_member(rules.partition(), target),
          &rules.partition()};
}

struct PremiseSolution {
  DegreeVector f_low;   // lowest solution when consistent
  DegreeVector f_high;  // greatest solution from the top/bot splits
  bool consistent = false;
  Degree nabla = 0.0;
};

/// f_low as the max-epsilon product, f_high from the top/bot maxima of the
/// target; consistency via the Chebyshev distance of the system.
inline PremiseSolution solve_omega(const OmegaSystem& sys) {
  if (!sys.partition) throw ValidationError("omega system without partition");
  const PartitionIndex& part = *sys.partition;
  const std::size_t n = part.rule_count();
  PremiseSolution sol;
  sol.f_high.assign(2 * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k : part.top(j)) sol.f_high[2 * j] = std::max(sol.f_high[2 * j], sys.o_target[k]);
    for (std::size_t k : part.bot(j))
      sol.f_high[2 * j + 1] = std::max(sol.f_high[2 * j + 1], sys.o_target[k]);
  }
  sol.f_low = maxeps_product_transpose_of(sys.m, sys.o_target);
  sol.nabla = chebyshev_distance(sys.m, sys.o_target);
  sol.consistent = sol.nabla == 0.0;
  return sol;
}

enum class SolutionPick { low, high };

/// Generates, per input attribute, the unique minimal possibility
/// distribution whose premise degrees reproduce the chosen solution. Only
/// single-proposition premises are invertible; conflicting constraints on a
/// shared attribute raise ConflictError, non-unique ones
/// UnsupportedPremiseShapeError.
inline DistributionMap targeted_inputs(const RuleSet& rules, const PremiseSolution& sol,
                                       SolutionPick pick = SolutionPick::low) {
  if (!sol.consistent)
    throw ValidationError("cannot generate inputs from an inconsistent omega system");
  const DegreeVector& x = pick == SolutionPick::low ? sol.f_low : sol.f_high;

  struct Constraint {
    std::vector<std::size_t> subset;
    Degree max_value;
    std::size_t rule_index;
  };
  std::map<std::string, std::vector<Constraint>> by_attr;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& rule = rules.rules()[i];
    if (rule.premise.size() != 1)
      throw UnsupportedPremiseShapeError(
          "rule " + std::to_string(i + 1) + " of '" + rules.name() +
          "' has a multi-proposition premise; the premise degrees are not uniquely invertible");
    const Proposition& prop = rule.premise.front();
    const Domain& dom = rules.attributes().at(prop.attribute);
    std::vector<bool> member(dom.size(), false);
    for (std::size_t v : prop.values) member[v] = true;
    std::vector<std::size_t> complement;
    for (std::size_t u = 0; u < dom.size(); ++u)
      if (!member[u]) complement.push_back(u);
    by_attr[prop.attribute].push_back({prop.values, x[2 * i], i});
    by_attr[prop.attribute].push_back({std::move(complement), x[2 * i + 1], i});
  }

  DistributionMap out;
  for (auto& [attr, constraints] : by_attr) {
    const Domain& dom = rules.attributes().at(attr);
    // Values pinned by singleton subsets, then upper bounds from every
    // constraint: max over S = m forces each member of S to stay <= m.
    std::vector<Degree> pinned(dom.size(), -1.0);
    for (const Constraint& c : constraints) {
      if (c.subset.size() != 1) continue;
      std::size_t v = c.subset.front();
      if (pinned[v] >= 0.0 && pinned[v] != c.max_value)
        throw ConflictError(attr, v,
                            "contradictory degrees for '" + attr + "' = '" + dom.label(v) +
                                "': " + std::to_string(pinned[v]) + " vs " +
                                std::to_string(c.max_value));
      pinned[v] = c.max_value;
    }
    std::vector<Degree> cap(dom.size(), 1.0);
    for (const Constraint& c : constraints)
      for (std::size_t v : c.subset) cap[v] = std::min(cap[v], c.max_value);
    for (std::size_t v = 0; v < dom.size(); ++v)
      if (pinned[v] >= 0.0 && pinned[v] > cap[v])
        throw ConflictError(attr, v,
                            "degree " + std::to_string(pinned[v]) + " for '" + attr + "' = '" +
                                dom.label(v) + "' exceeds an upper bound of " +
                                std::to_string(cap[v]));

    // Minimal distribution: pinned values as required, others 0 unless a
    // non-singleton constraint needs a unique unpinned value raised.
    DegreeVector pi(dom.size(), 0.0);
    for (std::size_t v = 0; v < dom.size(); ++v)
      if (pinned[v] >= 0.0) pi[v] = pinned[v];
    for (const Constraint& c : constraints) {
      if (c.subset.size() <= 1) continue;
      Degree reached = 0.0;
      std::vector<std::size_t> free;
      for (std::size_t v : c.subset) {
        if (pinned[v] >= 0.0)
          reached = std::max(reached, pinned[v]);
        else
          free.push_back(v);
      }
      if (reached == c.max_value) continue;
      if (reached > c.max_value)
        throw ConflictError(attr, c.subset.front(),
                            "constraint on '" + attr + "' cannot reach " +
                                std::to_string(c.max_value) + ": pinned degrees already exceed it");
      std::vector<std::size_t> usable;
      for (std::size_t v : free)
        if (cap[v] >= c.max_value) usable.push_back(v);
      if (usable.empty())
        throw ConflictError(attr, c.subset.front(),
                            "constraint on '" + attr + "' requires degree " +
                                std::to_string(c.max_value) + " but every value is capped below it");
      if (usable.size() > 1)
        throw UnsupportedPremiseShapeError(
            "constraint on '" + attr + "' can be met by several values; the minimal "
            "distribution is not unique");
      pi[usable.front()] = c.max_value;
    }

    // Final check: every constraint must be achieved exactly.
    for (const Constraint& c : constraints) {
      Degree m = 0.0;
      for (std::size_t v : c.subset) m = std::max(m, pi[v]);
      if (m != c.max_value)
        throw ConflictError(attr, c.subset.empty() ? 0 : c.subset.front(),
                            "constraint from rule " + std::to_string(c.rule_index + 1) +
                                " on '" + attr + "' resolves to " + std::to_string(m) +
                                " instead of " + std::to_string(c.max_value));
    }
    out[attr] = std::move(pi);
  }
  return out;
}

/// L-infinity gap between the inferred cell degrees for these inputs and the
/// target cell degrees.
inline Degree inference_distance(const RuleSet& rules, const DistributionMap& inputs,
                                 std::span<const Degree> target,
                                 const InferOptions& opts = {}) {
  PremiseDegrees premise = premise_degrees(rules, inputs, opts);
  DegreeMatrix m = build_inference_matrix(rules);
  DegreeVector o = infer_cells(m, premise);
  DegreeVector t = build_second_member(rules.partition(), target);
  return linf_distance(o, t);
}

}  // namespace pirules
