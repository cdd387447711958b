#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cellplan/errors.hpp"

namespace cellplan {

/// Fixed-size bitset over grid cells. Word-wise union/difference counting is the
/// inner loop of the placement heuristics.
class CellBitset {
 public:
  CellBitset() = default;
  explicit CellBitset(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }

  void set(std::size_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

  std::size_t count() const {
    std::size_t n = 0;
    for (const std::uint64_t w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  /// |this \ other|
  std::size_t count_and_not(const CellBitset& other) const {
    check_same_size(other);
    std::size_t n = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) {
      n += static_cast<std::size_t>(std::popcount(words_[k] & ~other.words_[k]));
    }
    return n;
  }

  std::size_t count_and(const CellBitset& other) const {
    check_same_size(other);
    std::size_t n = 0;
    for (std::size_t k = 0; k < words_.size(); ++k) {
      n += static_cast<std::size_t>(std::popcount(words_[k] & other.words_[k]));
    }
    return n;
  }

  CellBitset& operator|=(const CellBitset& other) {
    check_same_size(other);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] |= other.words_[k];
    return *this;
  }

  CellBitset& operator&=(const CellBitset& other) {
    check_same_size(other);
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= other.words_[k];
    return *this;
  }

  bool any() const {
    for (const std::uint64_t w : words_) {
      if (w != 0) return true;
    }
    return false;
  }

  friend bool operator==(const CellBitset& a, const CellBitset& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

 private:
  void check_same_size(const CellBitset& other) const {
    if (size_ != other.size_) {
      throw GridMismatchError("bitset size mismatch: " + std::to_string(size_) + " vs " +
                              std::to_string(other.size_));
    }
  }

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace cellplan
