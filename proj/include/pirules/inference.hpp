#pragma once

#include <map>
#include <string>
#include <vector>

#include "pirules/distributions.hpp"
#include "pirules/rules.hpp"

namespace pirules {

/// Attribute id -> possibility degree vector over that attribute's domain.
using DistributionMap = std::map<std::string, DegreeVector>;

/// Per rule i, the possibility degrees of the premise and of its negation.
/// max(lambda_i, rho_i) = 1 whenever the inputs are normalized.
struct PremiseDegrees {
  DegreeVector lambda;
  DegreeVector rho;

  std::size_t size() const noexcept { return lambda.size(); }
};

struct InferOptions {
  /// Divide un-normalized input distributions by their maximum instead of
  /// rejecting them.
  bool renormalize = false;
};

/// lambda_i = min over premise propositions of Pi(P); rho_i = max of
/// Pi(complement of P).
inline PremiseDegrees premise_degrees(const RuleSet& rules, const DistributionMap& inputs,
                                      const InferOptions& opts = {}) {
  DistributionMap normalized;  // holds renormalized copies when opts.renormalize
  auto distribution = [&](const std::string& attr) -> const DegreeVector& {
    auto it = inputs.find(attr);
    if (it == inputs.end())
      throw ValidationError("no distribution for attribute '" + attr + "'");
    const Domain& dom = rules.attributes().at(attr);
    if (it->second.size() != dom.size())
      throw ValidationError("distribution for '" + attr + "' has " +
                            std::to_string(it->second.size()) + " degrees, domain has " +
                            std::to_string(dom.size()));
    detail::check_degrees(it->second, "input degree");
    if (!is_normalized(it->second)) {
      if (!opts.renormalize)
        throw NotNormalizedError("input distribution for '" + attr + "' is not normalized");
      auto [pos, inserted] = normalized.try_emplace(attr);
      if (inserted) pos->second = renormalize_possibility(it->second);
      return pos->second;
    }
    return it->second;
  };

  PremiseDegrees out;
  out.lambda.reserve(rules.size());
  out.rho.reserve(rules.size());
  for (const Rule& rule : rules.rules()) {
    Degree lambda = 1.0, rho = 0.0;
    for (const Proposition& prop : rule.premise) {
      const DegreeVector& pi = distribution(prop.attribute);
      std::vector<bool> member(pi.size(), false);
      for (std::size_t v : prop.values) member[v] = true;
      Degree in = 0.0, out_of = 0.0;
      for (std::size_t u = 0; u < pi.size(); ++u) {
        if (member[u])
          in = std::max(in, pi[u]);
        else
          out_of = std::max(out_of, pi[u]);
      }
      lambda = std::min(lambda, in);
      rho = std::max(rho, out_of);
    }
    out.lambda.push_back(lambda);
    out.rho.push_back(rho);
  }
  return out;
}

/// Input vector I_n = (lambda_1, rho_1, ..., lambda_n, rho_n).
inline DegreeVector input_vector(const PremiseDegrees& premise) {
  DegreeVector in(2 * premise.size());
  for (std::size_t j = 0; j < premise.size(); ++j) {
    in[2 * j] = premise.lambda[j];
    in[2 * j + 1] = premise.rho[j];
  }
  return in;
}

/// omega x 2n matrix: row mu, columns (2j-1, 2j) hold (s_j, 1) when mu has
/// sign +j and (1, r_j) otherwise.
inline DegreeMatrix build_inference_matrix(const RuleSet& rules) {
  const PartitionIndex& part = rules.partition();
  DegreeMatrix m(part.omega(), 2 * rules.size());
  for (std::size_t k = 0; k < part.omega(); ++k) {
    const SignTuple& mu = part.tuple(k);
    for (std::size_t j = 0; j < rules.size(); ++j) {
      if (mu.positive[j]) {
        m(k, 2 * j) = rules.rules()[j].s;
        m(k, 2 * j + 1) = 1.0;
      } else {
        m(k, 2 * j) = 1.0;
        m(k, 2 * j + 1) = rules.rules()[j].r;
      }
    }
  }
  return m;
}

/// Spreads per-cell degrees onto the labels of the output domain; the output
/// is constant on every partition cell.
inline DegreeVector cells_to_labels(const PartitionIndex& part, std::span<const Degree> o) {
  DegreeVector out(part.domain_size(), 0.0);
  for (std::size_t k = 0; k < part.omega(); ++k)
    for (std::size_t u : part.cell(k).indices()) out[u] = o[k];
  return out;
}

/// O = M minmax I over the partition cells.
inline DegreeVector infer_cells(const DegreeMatrix& matrix, const PremiseDegrees& premise) {
  return minmax_product(matrix, input_vector(premise));
}

/// Forward inference: output possibility distribution over the output domain.
inline DegreeVector infer(const RuleSet& rules, const DistributionMap& inputs,
                          const InferOptions& opts = {}) {
  PremiseDegrees premise = premise_degrees(rules, inputs, opts);
  DegreeMatrix m = build_inference_matrix(rules);
  return cells_to_labels(rules.partition(), infer_cells(m, premise));
}

struct ChainOptions {
  /// Renormalize a non-normalized intermediate output instead of rejecting it.
  bool renormalize_intermediate = false;
};

/// Feeds a stage-1 output distribution into the set consuming that attribute.
/// Rejects non-normalized intermediates unless renormalization is enabled.
inline DegreeVector chain(const std::string& shared_attribute, const DegreeVector& stage1_output,
                          const RuleSet& next, const ChainOptions& opts = {}) {
  const Domain& dom = next.attributes().at(shared_attribute);
  if (stage1_output.size() != dom.size())
    throw ValidationError("chained distribution does not match the domain of '" +
                          shared_attribute + "'");
  DistributionMap inputs;
  if (!is_normalized(stage1_output)) {
    if (!opts.renormalize_intermediate)
      throw NotNormalizedError("stage output for '" + shared_attribute +
                               "' is not normalized; an earlier stage is incoherent");
    inputs[shared_attribute] = renormalize_possibility(stage1_output);
  } else {
    inputs[shared_attribute] = stage1_output;
  }
  return infer(next, inputs);
}

/// Matrices of a cascade built once so that batch inference over samples can
/// run concurrently on shared state.
struct CompiledCascade {
  const Cascade* cascade;
  std::vector<DegreeMatrix> matrices;  // one per rule set, in cascade order
};

inline CompiledCascade compile(const Cascade& cascade) {
  CompiledCascade out{&cascade, {}};
  out.matrices.reserve(cascade.sets().size());
  for (const RuleSet& set : cascade.sets()) out.matrices.push_back(build_inference_matrix(set));
  return out;
}

/// Runs every stage in cascade order. Returns all stage outputs keyed by
/// output attribute; `trace` (when given) records the execution order.
inline DistributionMap infer_cascade(const CompiledCascade& compiled,
                                     const DistributionMap& external_inputs,
                                     const InferOptions& opts = {},
                                     std::vector<std::string>* trace = nullptr) {
  const Cascade& cascade = *compiled.cascade;
  DistributionMap all = external_inputs;
  DistributionMap outputs;
  for (std::size_t si = 0; si < cascade.sets().size(); ++si) {
    const RuleSet& set = cascade.sets()[si];
    if (trace) trace->push_back(set.name());
    PremiseDegrees premise = premise_degrees(set, all, opts);
    DegreeVector out =
        cells_to_labels(set.partition(), infer_cells(compiled.matrices[si], premise));
    all[set.output_attribute()] = out;
    outputs[set.output_attribute()] = std::move(out);
  }
  return outputs;
}

inline DistributionMap infer_cascade(const Cascade& cascade, const DistributionMap& inputs,
                                     const InferOptions& opts = {},
                                     std::vector<std::string>* trace = nullptr) {
  CompiledCascade compiled = compile(cascade);
  return infer_cascade(compiled, inputs, opts, trace);
}

}  // namespace pirules
