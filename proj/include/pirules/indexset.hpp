#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pirules/errors.hpp"

namespace pirules {

/// Fixed-universe bitset over domain indices. Intersection tests are bitwise
/// AND plus an any-bit check, which keeps the partition construction's
/// operation count observable.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::size_t universe)
      : size_(universe), words_((universe + 63) / 64, 0) {}

  static IndexSet full(std::size_t universe) {
    IndexSet s(universe);
    for (auto& w : s.words_) w = ~std::uint64_t{0};
    s.trim();
    return s;
  }

  std::size_t universe_size() const noexcept { return size_; }

  void set(std::size_t i) {
    if (i >= size_) throw ValidationError("index " + std::to_string(i) + " out of universe");
    words_[i >> 6] |= std::uint64_t{1} << (i & 63);
  }

  bool test(std::size_t i) const {
    if (i >= size_) return false;
    return (words_[i >> 6] >> (i & 63)) & 1;
  }

  bool any() const noexcept {
    for (auto w : words_)
      if (w) return true;
    return false;
  }
  bool none() const noexcept { return !any(); }

  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }

  IndexSet operator&(const IndexSet& o) const {
    IndexSet r(size_);
    for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] = words_[k] & o.words_[k];
    return r;
  }

  /// this \ o
  IndexSet minus(const IndexSet& o) const {
    IndexSet r(size_);
    for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] = words_[k] & ~o.words_[k];
    return r;
  }

  IndexSet complement() const {
    IndexSet r(size_);
    for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] = ~words_[k];
    r.trim();
    return r;
  }

  bool intersects(const IndexSet& o) const noexcept {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & o.words_[k]) return true;
    return false;
  }

  bool is_subset_of(const IndexSet& o) const noexcept {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~o.words_[k]) return false;
    return true;
  }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size_; ++i)
      if (test(i)) out.push_back(i);
    return out;
  }

  bool operator==(const IndexSet&) const = default;

 private:
  void trim() {
    if (size_ % 64 != 0 && !words_.empty())
      words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

inline IndexSet make_index_set(std::size_t universe, const std::vector<std::size_t>& indices) {
  IndexSet s(universe);
  for (std::size_t i : indices) s.set(i);
  return s;
}

}  // namespace pirules
