#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pirules/degrees.hpp"
#include "pirules/domain.hpp"

namespace pirules {

namespace detail {
inline void check_degrees(std::span<const Degree> degrees, const char* what) {
  for (Degree d : degrees) require_degree(d, what);
}
}  // namespace detail

/// Possibility distribution over a finite labeled domain.
struct PossibilityDistribution {
  std::shared_ptr<const Domain> domain;
  DegreeVector degrees;

  PossibilityDistribution(std::shared_ptr<const Domain> dom, DegreeVector d)
      : domain(std::move(dom)), degrees(std::move(d)) {
    if (!domain) throw ValidationError("possibility distribution without domain");
    if (degrees.size() != domain->size())
      throw ValidationError("possibility distribution has " +
                            std::to_string(degrees.size()) + " degrees for a domain of size " +
                            std::to_string(domain->size()));
    detail::check_degrees(degrees, "possibility degree");
  }

  bool normalized() const noexcept {
    return std::any_of(degrees.begin(), degrees.end(),
                       [](Degree d) { return d == 1.0; });
  }
};

/// Probability distribution over a finite labeled domain. Masses sum to 1
/// within 1e-9.
struct ProbabilityDistribution {
  std::shared_ptr<const Domain> domain;
  DegreeVector masses;

  ProbabilityDistribution(std::shared_ptr<const Domain> dom, DegreeVector m)
      : domain(std::move(dom)), masses(std::move(m)) {
    if (!domain) throw ValidationError("probability distribution without domain");
    if (masses.size() != domain->size())
      throw ValidationError("probability distribution has " +
                            std::to_string(masses.size()) + " masses for a domain of size " +
                            std::to_string(domain->size()));
    detail::check_degrees(masses, "probability mass");
    double sum = 0.0;
    for (Degree m_ : masses) sum += m_;
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("probability masses sum to " + std::to_string(sum));
  }
};

inline bool is_normalized(std::span<const Degree> degrees) noexcept {
  return std::any_of(degrees.begin(), degrees.end(),
                     [](Degree d) { return d == 1.0; });
}

/// Divides a possibility degree vector by its maximum.
inline DegreeVector renormalize_possibility(std::span<const Degree> degrees) {
  Degree mx = *std::max_element(degrees.begin(), degrees.end());
  if (mx == 0.0) throw ValidationError("cannot renormalize the all-zero distribution");
  DegreeVector out(degrees.begin(), degrees.end());
  for (Degree& d : out) d /= mx;
  return out;
}

/// Divides probability masses by their sum.
inline DegreeVector renormalize_probability(std::span<const Degree> masses) {
  double sum = 0.0;
  for (Degree m : masses) sum += m;
  if (sum == 0.0) throw ValidationError("cannot renormalize the all-zero distribution");
  DegreeVector out(masses.begin(), masses.end());
  for (Degree& m : out) m /= sum;
  return out;
}

/// Pi(A) = max of degrees over A; Pi(empty) = 0.
inline Degree possibility_measure(std::span<const Degree> pi,
                                  std::span<const std::size_t> subset) {
  Degree m = 0.0;
  for (std::size_t i : subset) {
    if (i >= pi.size())
      throw ValidationError("subset index " + std::to_string(i) + " out of range");
    if (pi[i] > m) m = pi[i];
  }
  return m;
}

inline Degree possibility_measure(const PossibilityDistribution& pi,
                                  std::span<const std::size_t> subset) {
  return possibility_measure(std::span<const Degree>(pi.degrees), subset);
}

/// N(A) = 1 - Pi(complement of A).
inline Degree necessity_measure(std::span<const Degree> pi,
                                std::span<const std::size_t> subset) {
  std::vector<bool> in(pi.size(), false);
  for (std::size_t i : subset) {
    if (i >= pi.size())
      throw ValidationError("subset index " + std::to_string(i) + " out of range");
    in[i] = true;
  }
  Degree m = 0.0;
  for (std::size_t i = 0; i < pi.size(); ++i)
    if (!in[i] && pi[i] > m) m = pi[i];
  return 1.0 - m;
}

inline Degree necessity_measure(const PossibilityDistribution& pi,
                                std::span<const std::size_t> subset) {
  return necessity_measure(std::span<const Degree>(pi.degrees), subset);
}

/// Index of the unique maximal degree, or nullopt when >= 2 labels tie at the
/// maximum (the ambiguous outcome, counted as a misclassification by the
/// evaluation protocol).
inline std::optional<std::size_t> unique_argmax(std::span<const Degree> degrees) {
  std::size_t best = 0;
  bool tie = false;
  for (std::size_t i = 1; i < degrees.size(); ++i) {
    if (degrees[i] > degrees[best]) {
      best = i;
      tie = false;
    } else if (degrees[i] == degrees[best]) {
      tie = true;
    }
  }
  if (tie) return std::nullopt;
  return best;
}

}  // namespace pirules
