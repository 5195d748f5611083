#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "pirules/inference.hpp"
#include "pirules/parallel.hpp"
#include "pirules/rules.hpp"

namespace pirules {

/// Reduced min-max equation system: y = gamma minmax X, one row per
/// non-empty partition cell, unknowns (s_1, r_1, ..., s_n, r_n).
struct EquationSystem {
  DegreeMatrix gamma;
  DegreeVector y;
  const PartitionIndex* partition = nullptr;
};

/// omega x 2n matrix: row mu, columns (2j-1, 2j) hold (lambda_j, 1) when mu
/// has sign +j and (1, rho_j) otherwise.
inline DegreeMatrix build_equation_matrix(const RuleSet& rules, const PremiseDegrees& premise) {
  if (premise.size() != rules.size())
    throw ValidationError("premise degrees do not match the rule count");
  const PartitionIndex& part = rules.partition();
  DegreeMatrix g(part.omega(), 2 * rules.size());
  for (std::size_t k = 0; k < part.omega(); ++k) {
    const SignTuple& mu = part.tuple(k);
    for (std::size_t j = 0; j < rules.size(); ++j) {
      if (mu.positive[j]) {
        g(k, 2 * j) = premise.lambda[j];
        g(k, 2 * j + 1) = 1.0;
      } else {
        g(k, 2 * j) = 1.0;
        g(k, 2 * j + 1) = premise.rho[j];
      }
    }
  }
  return g;
}

/// Second member: y_mu = possibility of the cell sigma(mu) under the target
/// distribution.
inline DegreeVector build_second_member(const PartitionIndex& part,
                                        std::span<const Degree> target) {
  if (target.size() != part.domain_size())
    throw ValidationError("target distribution does not match the output domain");
  detail::check_degrees(target, "target degree");
  DegreeVector y(part.omega(), 0.0);
  for (std::size_t k = 0; k < part.omega(); ++k) {
    Degree m = 0.0;
    for (std::size_t u = 0; u < target.size(); ++u)
      if (part.cell(k).test(u) && target[u] > m) m = target[u];
    y[k] = m;
  }
  return y;
}

inline EquationSystem build_system(const RuleSet& rules, const PremiseDegrees& premise,
                                   std::span<const Degree> target) {
  return {build_equation_matrix(rules, premise),
          build_second_member(rules.partition(), target), &rules.partition()};
}

// ---------------------------------------------------------------------------
// Chebyshev distance of a min-max system.

/// Literal evaluation of the closed-form row distances; O(m^2 * cols).
inline DegreeVector chebyshev_row_distances_reference(const DegreeMatrix& gamma,
                                                      std::span<const Degree> y) {
  const std::size_t m = gamma.rows(), cols = gamma.cols();
  if (y.size() != m) throw ValidationError("second member does not match the matrix");
  DegreeVector nabla(m, 0.0);
  for (std::size_t mu = 0; mu < m; ++mu) {
    Degree best = 2.0;
    for (std::size_t l = 0; l < cols; ++l) {
      Degree a = pos_part(gamma(mu, l) - y[mu]);
      Degree t = 0.0;
      for (std::size_t nu = 0; nu < m; ++nu) {
        Degree v = std::min(pos_part(y[nu] - y[mu]) / 2.0, pos_part(y[nu] - gamma(nu, l)));
        if (v > t) t = v;
      }
      best = std::min(best, std::max(a, t));
    }
    nabla[mu] = best;
  }
  return nabla;
}

/// Same values via a per-column descending sweep; O(cols * m log m). Used for
/// stacked systems, where the row count grows with the sample count.
inline DegreeVector chebyshev_row_distances_sweep(const DegreeMatrix& gamma,
                                                  std::span<const Degree> y) {
  const std::size_t m = gamma.rows(), cols = gamma.cols();
  if (y.size() != m) throw ValidationError("second member does not match the matrix");

  std::vector<std::size_t> queries(m);
  for (std::size_t i = 0; i < m; ++i) queries[i] = i;
  std::sort(queries.begin(), queries.end(),
            [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });

  DegreeVector nabla(m, 2.0);
  struct Pair {
    Degree y, c, exit;  // exit = y - 2c, where the slope term saturates
  };
  std::vector<Pair> pairs;
  std::vector<std::size_t> by_entry, by_exit;
  std::vector<char> exited;
  for (std::size_t l = 0; l < cols; ++l) {
    pairs.clear();
    for (std::size_t i = 0; i < m; ++i) {
      Degree c = y[i] - gamma(i, l);
      if (c > 0.0) pairs.push_back({y[i], c, y[i] - 2.0 * c});
    }
    by_entry.resize(pairs.size());
    by_exit.resize(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) by_entry[i] = by_exit[i] = i;
    std::sort(by_entry.begin(), by_entry.end(),
              [&](std::size_t a, std::size_t b) { return pairs[a].y > pairs[b].y; });
    std::sort(by_exit.begin(), by_exit.end(),
              [&](std::size_t a, std::size_t b) { return pairs[a].exit > pairs[b].exit; });
    exited.assign(pairs.size(), 0);

    // Active = entered (y >= x) and not yet saturated; contributes (y - x)/2.
    std::priority_queue<std::pair<Degree, std::size_t>> active;
    Degree max_saturated = 0.0;
    std::size_t ei = 0, xi = 0;
    for (std::size_t q : queries) {
      const Degree x = y[q];
      while (ei < pairs.size() && pairs[by_entry[ei]].y >= x) {
        active.emplace(pairs[by_entry[ei]].y, by_entry[ei]);
        ++ei;
      }
      while (xi < pairs.size() && pairs[by_exit[xi]].exit >= x) {
        max_saturated = std::max(max_saturated, pairs[by_exit[xi]].c);
        exited[by_exit[xi]] = 1;
        ++xi;
      }
      while (!active.empty() && exited[active.top().second]) active.pop();
      Degree t = max_saturated;
      if (!active.empty()) t = std::max(t, (active.top().first - x) / 2.0);
      Degree cand = std::max(pos_part(gamma(q, l) - x), t);
      if (cand < nabla[q]) nabla[q] = cand;
    }
  }
  return nabla;
}

inline DegreeVector chebyshev_row_distances(const DegreeMatrix& gamma,
                                            std::span<const Degree> y) {
  return gamma.rows() <= 128 ? chebyshev_row_distances_reference(gamma, y)
                             : chebyshev_row_distances_sweep(gamma, y);
}

/// L-infinity distance from y to the nearest consistent second member;
/// 0 iff the system is consistent.
inline Degree chebyshev_distance(const DegreeMatrix& gamma, std::span<const Degree> y) {
  DegreeVector rows = chebyshev_row_distances(gamma, y);
  Degree d = 0.0;
  for (Degree v : rows) d = std::max(d, v);
  return d;
}

inline Degree chebyshev_distance(const EquationSystem& sys) {
  return chebyshev_distance(sys.gamma, sys.y);
}

/// The training sample behind `sys` is reliable iff its distance is strictly
/// below the tolerance threshold.
inline bool reliable(const EquationSystem& sys, double tau) {
  if (!(tau > 0.0)) throw ValidationError("tolerance threshold must be positive");
  return chebyshev_distance(sys) < tau;
}

inline DegreeVector clip_below(std::span<const Degree> y, Degree nabla) {
  DegreeVector out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = pos_part(y[i] - nabla);
  return out;
}

// ---------------------------------------------------------------------------
// Solving one system.

struct SolveResult {
  DegreeVector e_low;   // lowest solution of the nearest consistent system
  DegreeVector e_high;  // maximal solution built from the top/bot splits
  Degree nabla = 0.0;
  bool consistent = false;
  DegreeVector y_approx;  // lowest Chebyshev approximation of y
  DegreeVector x_approx;  // lowest approximate solution
};

/// e_high per the top/bot splits (empty split gives 0); e_low as the
/// max-epsilon product; nabla by the closed form. When nabla = 0, x_approx
/// is e_low and y_approx is y itself.
inline SolveResult solve(const EquationSystem& sys) {
  if (!sys.partition) throw ValidationError("equation system without partition");
  const PartitionIndex& part = *sys.partition;
  const std::size_t n = part.rule_count();
  SolveResult res;
  res.e_high.assign(2 * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k : part.top(j)) res.e_high[2 * j] = std::max(res.e_high[2 * j], sys.y[k]);
    for (std::size_t k : part.bot(j))
      res.e_high[2 * j + 1] = std::max(res.e_high[2 * j + 1], sys.y[k]);
  }
  res.e_low = maxeps_product_transpose_of(sys.gamma, sys.y);
  res.nabla = chebyshev_distance(sys);
  res.consistent = res.nabla == 0.0;
  res.x_approx = maxeps_product_transpose_of(sys.gamma, clip_below(sys.y, res.nabla));
  res.y_approx = minmax_product(sys.gamma, res.x_approx);
  return res;
}

// ---------------------------------------------------------------------------
// Stacked multi-sample learning.

struct StackedSystem {
  DegreeMatrix gamma;
  DegreeVector y;
  std::size_t block_count = 0;
};

struct StackedSolution {
  Degree nabla = 0.0;
  DegreeVector x;  // lowest approximate solution
};

inline StackedSolution solve_stacked(const StackedSystem& stack) {
  StackedSolution sol;
  sol.nabla = chebyshev_distance(stack.gamma, stack.y);
  sol.x = maxeps_product_transpose_of(stack.gamma, clip_below(stack.y, sol.nabla));
  return sol;
}

struct SampleAssessment {
  Degree nabla = 0.0;
  bool selected = false;
};

struct LearnReport {
  std::vector<SampleAssessment> samples;
  std::size_t reliable_count = 0;
  Degree stacked_nabla = 0.0;
};

struct LearnOutcome {
  std::vector<std::pair<Degree, Degree>> parameters;  // (s_i, r_i) per rule
  LearnReport report;
};

/// Multi-sample learning for one rule set, from precomputed premise degrees
/// and targets. Reliable samples have their second member replaced by its
/// lowest Chebyshev approximation before stacking; the stacked system's
/// lowest approximate solution provides the parameters.
inline LearnOutcome learn_from_premises(
    const RuleSet& rules,
    const std::vector<std::pair<PremiseDegrees, DegreeVector>>& samples, double tau,
    unsigned jobs = 1) {
  if (samples.empty())
    throw NoReliableSampleError(rules.name(), "no training samples for rule set '" +
                                                  rules.name() + "'");
  if (!(tau > 0.0)) throw ValidationError("tolerance threshold must be positive");

  const std::size_t n = samples.size();
  std::vector<EquationSystem> systems(n);
  std::vector<SolveResult> solved(n);
  LearnOutcome out;
  out.report.samples.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    systems[i] = build_system(rules, samples[i].first, samples[i].second);
    solved[i] = solve(systems[i]);
    out.report.samples[i].nabla = solved[i].nabla;
    out.report.samples[i].selected = solved[i].nabla < tau;
  });

  StackedSystem stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.report.samples[i].selected) continue;
    stack.gamma.append_rows(systems[i].gamma);
    stack.y.insert(stack.y.end(), solved[i].y_approx.begin(), solved[i].y_approx.end());
    ++stack.block_count;
  }
  out.report.reliable_count = stack.block_count;
  if (stack.block_count == 0)
    throw NoReliableSampleError(rules.name(),
                                "no training sample is reliable for rule set '" +
                                    rules.name() + "' at threshold " + std::to_string(tau));

  StackedSolution sol = solve_stacked(stack);
  out.report.stacked_nabla = sol.nabla;
  out.parameters.reserve(rules.size());
  for (std::size_t j = 0; j < rules.size(); ++j)
    out.parameters.emplace_back(sol.x[2 * j], sol.x[2 * j + 1]);
  return out;
}

/// One training record: external input possibility distributions plus the
/// targeted label per output attribute (expanded to a one-hot distribution).
struct TrainingSample {
  DistributionMap inputs;
  std::map<std::string, std::size_t> targets;
};

inline DegreeVector one_hot(std::size_t size, std::size_t index) {
  if (index >= size) throw ValidationError("one-hot index out of range");
  DegreeVector v(size, 0.0);
  v[index] = 1.0;
  return v;
}

/// Public entry for a single rule set: samples as (inputs, target
/// distribution over the output domain).
struct LearnSample {
  DistributionMap inputs;
  DegreeVector target;
};

inline LearnOutcome learn_ruleset(const RuleSet& rules, const std::vector<LearnSample>& samples,
                                  double tau, const InferOptions& opts = {},
                                  unsigned jobs = 1) {
  std::vector<std::pair<PremiseDegrees, DegreeVector>> prepared(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    prepared[i] = {premise_degrees(rules, samples[i].inputs, opts), samples[i].target};
  });
  return learn_from_premises(rules, prepared, tau, jobs);
}

// ---------------------------------------------------------------------------
// Cascade learning.

struct StageLearnReport {
  std::string set_name;
  LearnReport learn;
};

struct CascadeLearnReport {
  std::vector<StageLearnReport> stages;
};

/// Learns stage by stage in cascade order: select reliable samples, solve the
/// stacked system, freeze the parameters, then push every training sample
/// through the stage so later stages see inferred distributions.
inline CascadeLearnReport cascade_learn(Cascade& cascade,
                                        const std::vector<TrainingSample>& samples,
                                        const std::map<std::string, double>& taus_by_group,
                                        const InferOptions& opts = {}, unsigned jobs = 1) {
  CascadeLearnReport report;
  std::vector<DistributionMap> state(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) state[i] = samples[i].inputs;

  for (RuleSet& set : cascade.sets()) {
    auto tau_it = taus_by_group.find(set.tau_group());
    if (tau_it == taus_by_group.end())
      throw ValidationError("no tolerance threshold for tau group '" + set.tau_group() + "'");
    const double tau = tau_it->second;
    const Domain& out_dom = set.output_domain();

    std::vector<std::pair<PremiseDegrees, DegreeVector>> prepared(samples.size());
    parallel_for(samples.size(), jobs, [&](std::size_t i) {
      auto target_it = samples[i].targets.find(set.output_attribute());
      if (target_it == samples[i].targets.end())
        throw ValidationError("sample " + std::to_string(i + 1) + " has no target for '" +
                              set.output_attribute() + "'");
      prepared[i] = {premise_degrees(set, state[i], opts),
                     one_hot(out_dom.size(), target_it->second)};
    });

    LearnOutcome outcome = learn_from_premises(set, prepared, tau, jobs);
    set.set_parameters(outcome.parameters);
    report.stages.push_back({set.name(), std::move(outcome.report)});

    DegreeMatrix matrix = build_inference_matrix(set);
    parallel_for(samples.size(), jobs, [&](std::size_t i) {
      DegreeVector o = infer_cells(matrix, prepared[i].first);
      state[i][set.output_attribute()] = cells_to_labels(set.partition(), o);
    });
  }
  return report;
}

// ---------------------------------------------------------------------------
// Tolerance threshold selection.

struct ThresholdConfig {
  std::size_t l = 30;      // candidate count
  double h = 5.0;          // exponent packing candidates near zero
  double eps = 1e-3;       // top candidate is 1 + eps, which selects everything
  double min_improvement = 0.01;
  std::size_t stagnation = 1;
};

/// Candidate set {(i/l)^h * (1 + eps)}, strictly increasing, top value > 1.
inline std::vector<double> threshold_candidates(const ThresholdConfig& cfg) {
  if (cfg.l == 0) throw ValidationError("threshold candidate count must be >= 1");
  if (!(cfg.eps > 0.0)) throw ValidationError("threshold eps must be positive");
  if (!(cfg.h >= 1.0)) throw ValidationError("threshold exponent must be >= 1");
  std::vector<double> t(cfg.l);
  for (std::size_t i = 1; i <= cfg.l; ++i)
    t[i - 1] = std::pow(static_cast<double>(i) / static_cast<double>(cfg.l), cfg.h) *
               (1.0 + cfg.eps);
  return t;
}

/// Fraction of samples whose every targeted final output attribute has a
/// unique argmax matching the target; ties count as misclassifications.
inline double final_output_accuracy(const Cascade& cascade,
                                    const std::vector<TrainingSample>& samples,
                                    const InferOptions& opts = {}, unsigned jobs = 1) {
  if (samples.empty()) return 0.0;
  CompiledCascade compiled = compile(cascade);
  std::vector<char> correct(samples.size(), 0);
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    DistributionMap outputs = infer_cascade(compiled, samples[i].inputs, opts);
    bool ok = true;
    for (const std::string& attr : cascade.final_outputs()) {
      auto target_it = samples[i].targets.find(attr);
      if (target_it == samples[i].targets.end()) continue;
      auto arg = unique_argmax(outputs.at(attr));
      if (!arg || *arg != target_it->second) {
        ok = false;
        break;
      }
    }
    correct[i] = ok;
  });
  std::size_t hits = 0;
  for (char c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

struct ThresholdTrial {
  double tau = 0.0;
  bool feasible = false;
  double accuracy = 0.0;
};

struct ThresholdSearchResult {
  std::map<std::string, double> taus;
  std::vector<ThresholdTrial> trials;
  double best_accuracy = 0.0;
};

using AccuracyMetric =
    std::function<double(const Cascade&, const std::vector<TrainingSample>&)>;

/// Walks the candidate set upward, all tau groups in lockstep, learning and
/// scoring on the validation set; stops once the accuracy has stagnated and
/// returns the lowest tested value achieving the stabilized accuracy. The top
/// candidate exceeds 1, so some candidate always makes learning feasible.
inline ThresholdSearchResult threshold_search(const Cascade& cascade,
                                              const std::vector<TrainingSample>& train,
                                              const std::vector<TrainingSample>& valid,
                                              const ThresholdConfig& cfg,
                                              AccuracyMetric metric = {},
                                              const InferOptions& opts = {},
                                              unsigned jobs = 1) {
  if (!metric)
    metric = [&opts, jobs](const Cascade& c, const std::vector<TrainingSample>& s) {
      return final_output_accuracy(c, s, opts, jobs);
    };
  std::vector<double> candidates = threshold_candidates(cfg);

  ThresholdSearchResult result;
  double best = -1.0;
  std::size_t stagnant = 0;
  bool evaluated_before = false;
  for (double tau : candidates) {
    std::map<std::string, double> taus;
    for (const RuleSet& set : cascade.sets()) taus[set.tau_group()] = tau;
    ThresholdTrial trial{tau, false, 0.0};
    Cascade candidate = cascade;
    try {
      cascade_learn(candidate, train, taus, opts, jobs);
      trial.feasible = true;
    } catch (const NoReliableSampleError&) {
      result.trials.push_back(trial);
      continue;
    }
    trial.accuracy = metric(candidate, valid);
    result.trials.push_back(trial);
    double improvement = trial.accuracy - best;
    if (trial.accuracy > best) best = trial.accuracy;
    if (evaluated_before && improvement < cfg.min_improvement)
      ++stagnant;
    else
      stagnant = 0;
    evaluated_before = true;
    if (stagnant >= cfg.stagnation) break;
  }
  result.best_accuracy = best;
  double chosen = candidates.back();
  for (const ThresholdTrial& t : result.trials)
    if (t.feasible && t.accuracy == best) {
      chosen = t.tau;
      break;
    }
  for (const RuleSet& set : cascade.sets()) result.taus[set.tau_group()] = chosen;
  return result;
}

}  // namespace pirules
