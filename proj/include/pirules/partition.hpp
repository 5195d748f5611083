#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "pirules/domain.hpp"
#include "pirules/indexset.hpp"

namespace pirules {

/// Sign tuple mu = (t_1,...,t_n): bit j true means t_j = +j (the cell lies in
/// the conclusion Q_j), false means t_j = -j.
struct SignTuple {
  std::vector<bool> positive;

  std::size_t size() const noexcept { return positive.size(); }
  bool operator==(const SignTuple&) const = default;

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < positive.size(); ++i) {
      if (i) s += ",";
      if (!positive[i]) s += "-";
      s += std::to_string(i + 1);
    }
    return s + ")";
  }
};

/// 1 + sum over negative signs of 2^(i-1). Strictly increasing along the
/// canonical tuple order. Throws for more than 62 rules; compare with
/// psi_less there instead of materializing the integer.
inline std::uint64_t psi_index(const SignTuple& mu) {
  if (mu.size() > 62)
    throw ValidationError("psi_index overflows for more than 62 rules; use psi_less");
  std::uint64_t k = 1;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (!mu.positive[i]) k += std::uint64_t{1} << i;
  return k;
}

/// Order predicate equivalent to psi_index comparison for any rule count:
/// most significant sign bit first, positive before negative.
inline bool psi_less(const SignTuple& a, const SignTuple& b) {
  if (a.size() != b.size())
    throw ValidationError("psi_less: tuples of different lengths");
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a.positive[i] != b.positive[i]) return a.positive[i];
  }
  return false;
}

/// Ordered index of the non-empty partition cells of the output domain,
/// built from the rule conclusions. Tuples are kept in ascending psi order;
/// cell k holds the domain indices of sigma(mu_k). top(j)/bot(j) split the
/// tuple indices by the sign of rule j.
class PartitionIndex {
 public:
  PartitionIndex() = default;

  std::size_t omega() const noexcept { return tuples_.size(); }
  std::size_t rule_count() const noexcept { return rule_count_; }
  std::size_t domain_size() const noexcept { return domain_size_; }

  const std::vector<SignTuple>& tuples() const noexcept { return tuples_; }
  const std::vector<IndexSet>& cells() const noexcept { return cells_; }
  const SignTuple& tuple(std::size_t k) const { return tuples_.at(k); }
  const IndexSet& cell(std::size_t k) const { return cells_.at(k); }

  const std::vector<std::size_t>& top(std::size_t j) const { return top_.at(j); }
  const std::vector<std::size_t>& bot(std::size_t j) const { return bot_.at(j); }

  /// Cell-intersection operations spent during construction; bounded by
  /// 3 * |D_b| * n / 2.
  std::uint64_t intersection_ops() const noexcept { return intersection_ops_; }

  std::string dump(const Domain& output_domain) const {
    std::ostringstream os;
    for (std::size_t k = 0; k < tuples_.size(); ++k) {
      os << tuples_[k].to_string() << " -> {";
      bool first = true;
      for (std::size_t i : cells_[k].indices()) {
        if (!first) os << ", ";
        os << output_domain.label(i);
        first = false;
      }
      os << "}\n";
    }
    return os.str();
  }

  friend PartitionIndex build_partition(const std::vector<IndexSet>& conclusions,
                                        std::size_t domain_size);

 private:
  std::vector<SignTuple> tuples_;
  std::vector<IndexSet> cells_;
  std::vector<std::vector<std::size_t>> top_, bot_;
  std::size_t rule_count_ = 0;
  std::size_t domain_size_ = 0;
  std::uint64_t intersection_ops_ = 0;
};

/// Incremental construction: at step i each surviving tuple is extended by +i
/// when its cell meets Q_i and by -i when it meets the complement. 2^i tuples
/// are never materialized.
inline PartitionIndex build_partition(const std::vector<IndexSet>& conclusions,
                                      std::size_t domain_size) {
  if (conclusions.empty()) throw ValidationError("partition needs at least one rule");
  PartitionIndex p;
  p.rule_count_ = conclusions.size();
  p.domain_size_ = domain_size;

  for (std::size_t i = 0; i < conclusions.size(); ++i) {
    if (conclusions[i].universe_size() != domain_size)
      throw ValidationError("conclusion " + std::to_string(i + 1) +
                            " is over the wrong domain");
    if (conclusions[i].none())
      throw ValidationError("rule " + std::to_string(i + 1) + " has an empty conclusion");
  }

  // Step 1.
  const IndexSet& q1 = conclusions[0];
  IndexSet not_q1 = q1.complement();
  ++p.intersection_ops_;
  p.tuples_.push_back({{true}});
  p.cells_.push_back(q1);
  if (not_q1.any()) {
    p.tuples_.push_back({{false}});
    p.cells_.push_back(not_q1);
  }

  // Steps 2..n: positive extensions first (they keep the psi index), then
  // negative ones, each group in parent order.
  for (std::size_t i = 1; i < conclusions.size(); ++i) {
    const IndexSet& qi = conclusions[i];
    std::vector<SignTuple> pos_tuples, neg_tuples;
    std::vector<IndexSet> pos_cells, neg_cells;
    for (std::size_t k = 0; k < p.tuples_.size(); ++k) {
      IndexSet inter = p.cells_[k] & qi;
      ++p.intersection_ops_;
      if (inter.none()) {
        neg_tuples.push_back(p.tuples_[k]);
        neg_tuples.back().positive.push_back(false);
        neg_cells.push_back(p.cells_[k]);
      } else if (inter == p.cells_[k]) {
        pos_tuples.push_back(p.tuples_[k]);
        pos_tuples.back().positive.push_back(true);
        pos_cells.push_back(std::move(inter));
      } else {
        IndexSet rest = p.cells_[k].minus(qi);
        ++p.intersection_ops_;
        pos_tuples.push_back(p.tuples_[k]);
        pos_tuples.back().positive.push_back(true);
        pos_cells.push_back(std::move(inter));
        neg_tuples.push_back(std::move(p.tuples_[k]));
        neg_tuples.back().positive.push_back(false);
        neg_cells.push_back(std::move(rest));
      }
    }
    p.tuples_ = std::move(pos_tuples);
    p.tuples_.insert(p.tuples_.end(), std::make_move_iterator(neg_tuples.begin()),
                     std::make_move_iterator(neg_tuples.end()));
    p.cells_ = std::move(pos_cells);
    p.cells_.insert(p.cells_.end(), std::make_move_iterator(neg_cells.begin()),
                    std::make_move_iterator(neg_cells.end()));
  }

  p.top_.assign(p.rule_count_, {});
  p.bot_.assign(p.rule_count_, {});
  for (std::size_t k = 0; k < p.tuples_.size(); ++k)
    for (std::size_t j = 0; j < p.rule_count_; ++j)
      (p.tuples_[k].positive[j] ? p.top_[j] : p.bot_[j]).push_back(k);
  return p;
}

}  // namespace pirules
