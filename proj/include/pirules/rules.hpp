#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "pirules/degrees.hpp"
#include "pirules/domain.hpp"
#include "pirules/partition.hpp"

namespace pirules {

/// "a(x) in P": a non-empty subset of one attribute's domain.
struct Proposition {
  std::string attribute;
  std::vector<std::size_t> values;
};

/// "if p_1 and ... and p_k then b(x) in Q", certain to degree 1-r; the
/// converse rule is certain to degree 1-s.
struct Rule {
  std::vector<Proposition> premise;
  std::vector<std::size_t> conclusion;
  Degree s = 0.0;
  Degree r = 0.0;
};

/// n rules sharing one output attribute, with the partition of the output
/// domain derived from their conclusions. Immutable after construction apart
/// from the rule parameters.
class RuleSet {
 public:
  RuleSet(std::string name, std::string output_attribute, AttributeTablePtr attrs,
          std::vector<Rule> rules, std::string tau_group = "")
      : name_(std::move(name)),
        output_attribute_(std::move(output_attribute)),
        tau_group_(tau_group.empty() ? name_ : std::move(tau_group)),
        attrs_(std::move(attrs)),
        rules_(std::move(rules)) {
    if (!attrs_) throw ValidationError("rule set '" + name_ + "' has no attribute table");
    const Domain& out = attrs_->at(output_attribute_);
    if (rules_.empty())
      throw ValidationError("rule set '" + name_ + "' has no rules");
    std::vector<IndexSet> conclusions;
    conclusions.reserve(rules_.size());
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      const Rule& rule = rules_[i];
      if (rule.premise.empty())
        throw ValidationError("rule " + std::to_string(i + 1) + " of '" + name_ +
                              "' has an empty premise");
      for (const Proposition& prop : rule.premise) {
        const Domain& dom = attrs_->at(prop.attribute);
        if (prop.values.empty())
          throw ValidationError("rule " + std::to_string(i + 1) + " of '" + name_ +
                                "' has an empty proposition over '" + prop.attribute + "'");
        for (std::size_t v : prop.values)
          if (v >= dom.size())
            throw ValidationError("rule " + std::to_string(i + 1) + " of '" + name_ +
                                  "': value index out of domain '" + prop.attribute + "'");
      }
      if (rule.conclusion.empty())
        throw ValidationError("rule " + std::to_string(i + 1) + " of '" + name_ +
                              "' has an empty conclusion");
      require_degree(rule.s, "rule parameter s");
      require_degree(rule.r, "rule parameter r");
      conclusions.push_back(make_index_set(out.size(), rule.conclusion));
    }
    partition_ = build_partition(conclusions, out.size());
  }

  const std::string& name() const noexcept { return name_; }
  const std::string& output_attribute() const noexcept { return output_attribute_; }
  const std::string& tau_group() const noexcept { return tau_group_; }
  const AttributeTable& attributes() const noexcept { return *attrs_; }
  AttributeTablePtr attributes_ptr() const noexcept { return attrs_; }
  const Domain& output_domain() const { return attrs_->at(output_attribute_); }
  const std::vector<Rule>& rules() const noexcept { return rules_; }
  std::size_t size() const noexcept { return rules_.size(); }
  const PartitionIndex& partition() const noexcept { return partition_; }

  void set_parameters(const std::vector<std::pair<Degree, Degree>>& params) {
    if (params.size() != rules_.size())
      throw ValidationError("parameter count mismatch for rule set '" + name_ + "'");
    for (std::size_t i = 0; i < rules_.size(); ++i) {
      require_degree(params[i].first, "rule parameter s");
      require_degree(params[i].second, "rule parameter r");
      rules_[i].s = params[i].first;
      rules_[i].r = params[i].second;
    }
  }

  void zero_parameters() {
    for (Rule& rule : rules_) rule.s = rule.r = 0.0;
  }

  /// Attribute names referenced by the premises, in first-use order.
  std::vector<std::string> premise_attributes() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const Rule& rule : rules_)
      for (const Proposition& prop : rule.premise)
        if (seen.insert(prop.attribute).second) out.push_back(prop.attribute);
    return out;
  }

 private:
  std::string name_;
  std::string output_attribute_;
  std::string tau_group_;
  AttributeTablePtr attrs_;
  std::vector<Rule> rules_;
  PartitionIndex partition_;
};

/// Ordered chain of rule sets over one shared attribute table. A premise
/// attribute is either an external input or the output of an earlier set.
class Cascade {
 public:
  Cascade(AttributeTablePtr attrs, std::vector<RuleSet> sets)
      : attrs_(std::move(attrs)), sets_(std::move(sets)) {
    if (sets_.empty()) throw ValidationError("cascade has no rule sets");
    std::set<std::string> outputs_so_far;
    std::set<std::string> names;
    for (const RuleSet& set : sets_) {
      if (!names.insert(set.name()).second)
        throw ValidationError("duplicate rule set name '" + set.name() + "'");
      if (set.attributes_ptr() != attrs_)
        throw ValidationError("rule set '" + set.name() +
                              "' does not share the cascade attribute table");
      for (const std::string& attr : set.premise_attributes())
        if (!outputs_so_far.count(attr)) external_inputs_.insert(attr);
      if (!outputs_so_far.insert(set.output_attribute()).second)
        throw ValidationError("two rule sets share the output attribute '" +
                              set.output_attribute() + "'");
      if (external_inputs_.count(set.output_attribute()))
        throw ValidationError("output attribute '" + set.output_attribute() +
                              "' is consumed before it is produced");
    }
    std::set<std::string> consumed;
    for (const RuleSet& set : sets_)
      for (const std::string& attr : set.premise_attributes()) consumed.insert(attr);
    for (const RuleSet& set : sets_)
      if (!consumed.count(set.output_attribute()))
        final_outputs_.push_back(set.output_attribute());
  }

  const AttributeTable& attributes() const noexcept { return *attrs_; }
  AttributeTablePtr attributes_ptr() const noexcept { return attrs_; }
  const std::vector<RuleSet>& sets() const noexcept { return sets_; }
  std::vector<RuleSet>& sets() noexcept { return sets_; }

  const RuleSet& set(const std::string& name) const {
    for (const RuleSet& s : sets_)
      if (s.name() == name) return s;
    throw ValidationError("no rule set named '" + name + "'");
  }

  /// Output attributes no later set consumes, in cascade order.
  const std::vector<std::string>& final_outputs() const noexcept { return final_outputs_; }

  const std::set<std::string>& external_inputs() const noexcept { return external_inputs_; }

  bool is_external_input(const std::string& attr) const {
    return external_inputs_.count(attr) != 0;
  }

 private:
  AttributeTablePtr attrs_;
  std::vector<RuleSet> sets_;
  std::set<std::string> external_inputs_;
  std::vector<std::string> final_outputs_;
};

}  // namespace pirules
