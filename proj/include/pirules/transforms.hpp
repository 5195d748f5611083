#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "pirules/distributions.hpp"

namespace pirules {

enum class TransformMethod { antipignistic, minspec };

namespace detail {

/// Indices sorting `values` in stable descending order.
inline std::vector<std::size_t> descending_order(std::span<const Degree> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

}  // namespace detail

/// Antipignistic transform. On the descending-sorted view,
/// pi_i = i*p_i + sum_{j>i} p_j; ties get equal transformed values and the
/// argmax is pinned to exactly 1.
inline DegreeVector prob_to_poss_antipignistic(std::span<const Degree> p) {
  const std::size_t n = p.size();
  auto order = detail::descending_order(p);
  DegreeVector pi(n);
  double tail = 0.0;  // sum of masses strictly after position i in sorted order
  for (std::size_t i = n; i-- > 0;) {
    double mass = p[order[i]];
    pi[order[i]] = static_cast<double>(i + 1) * mass + tail;
    tail += mass;
  }
  pi[order[0]] = 1.0;  // the formula yields the full mass sum here
  for (Degree& d : pi) d = std::min(d, 1.0);
  return pi;
}

inline PossibilityDistribution prob_to_poss_antipignistic(const ProbabilityDistribution& p) {
  return {p.domain, prob_to_poss_antipignistic(std::span<const Degree>(p.masses))};
}

/// Inverse antipignistic transform, defined on normalized distributions via
/// the descending-sorted view: p_i = sum_{j>=i} (pi_j - pi_{j+1})/j with
/// pi_{n+1} = 0.
inline DegreeVector poss_to_prob_antipignistic(std::span<const Degree> pi) {
  if (!is_normalized(pi))
    throw NotNormalizedError("antipignistic inverse requires a normalized distribution");
  const std::size_t n = pi.size();
  auto order = detail::descending_order(pi);
  DegreeVector p(n);
  double acc = 0.0;
  double next = 0.0;  // pi_{j+1}, with the convention pi_{n+1} = 0
  for (std::size_t i = n; i-- > 0;) {
    double cur = pi[order[i]];
    acc += (cur - next) / static_cast<double>(i + 1);
    p[order[i]] = acc;
    next = cur;
  }
  return p;
}

inline ProbabilityDistribution poss_to_prob_antipignistic(const PossibilityDistribution& pi) {
  return {pi.domain, poss_to_prob_antipignistic(std::span<const Degree>(pi.degrees))};
}

/// Minimum-specificity transform: pi*_i = sum_{j>=i} p_j on the sorted view.
/// Pointwise below the antipignistic result; not invertible.
inline DegreeVector prob_to_poss_minspec(std::span<const Degree> p) {
  const std::size_t n = p.size();
  auto order = detail::descending_order(p);
  DegreeVector pi(n);
  double tail = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    tail += p[order[i]];
    pi[order[i]] = tail;
  }
  pi[order[0]] = 1.0;
  for (Degree& d : pi) d = std::min(d, 1.0);
  return pi;
}

inline PossibilityDistribution prob_to_poss_minspec(const ProbabilityDistribution& p) {
  return {p.domain, prob_to_poss_minspec(std::span<const Degree>(p.masses))};
}

inline DegreeVector prob_to_poss(std::span<const Degree> p, TransformMethod method) {
  return method == TransformMethod::antipignistic ? prob_to_poss_antipignistic(p)
                                                  : prob_to_poss_minspec(p);
}

}  // namespace pirules
