#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "pirules/errors.hpp"

namespace pirules {

/// Finite labeled value domain of an attribute. Labels are distinct, size >= 1.
class Domain {
 public:
  explicit Domain(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw ValidationError("domain must have at least one label");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      auto [it, inserted] = index_.emplace(labels_[i], i);
      if (!inserted)
        throw ValidationError("duplicate domain label '" + labels_[i] + "'");
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool contains(const std::string& label) const { return index_.count(label) != 0; }

  std::size_t index_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end())
      throw ValidationError("unknown label '" + label + "'");
    return it->second;
  }

  bool operator==(const Domain& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Attribute id -> Domain table, insertion ordered. Rule sets of one cascade
/// share a table so that attributes naming the same concept share one
/// distribution slot.
class AttributeTable {
 public:
  void add(const std::string& name, Domain domain) {
    if (index_.count(name))
      throw ValidationError("attribute '" + name + "' declared twice");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(domain));
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const Domain& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw ValidationError("undeclared attribute '" + name + "'");
    return entries_[it->second].second;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::pair<std::string, Domain>>& entries() const noexcept {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, Domain>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using AttributeTablePtr = std::shared_ptr<const AttributeTable>;

}  // namespace pirules
