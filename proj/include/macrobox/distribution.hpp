#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "macrobox/boxes.hpp"
#include "macrobox/error.hpp"
#include "macrobox/rational.hpp"

namespace macrobox {

/// Exact (possibly signed) distribution over `slots` binary outcomes.
/// Entry index: slot 0 is the most significant bit, bit 0 means +1, so the
/// natural index order is lexicographic with "+" before "-".
class Distribution {
 public:
  Distribution() = default;
  explicit Distribution(std::size_t slots) : slots_(slots) {
    if (slots > 30) throw DomainError("distribution over " + std::to_string(slots) + " slots is too large");
    p_.assign(std::size_t{1} << slots, Rational(0));
  }

  std::size_t slots() const { return slots_; }
  std::size_t size() const { return p_.size(); }

  const Rational& operator[](std::size_t idx) const { return p_[idx]; }
  Rational& operator[](std::size_t idx) { return p_[idx]; }

  const Rational& at(std::span<const Outcome> outcomes) const { return p_[index_of(outcomes)]; }
  const Rational& at(std::initializer_list<Outcome> outcomes) const {
    return at(std::span<const Outcome>(outcomes.begin(), outcomes.size()));
  }

  std::size_t index_of(std::span<const Outcome> outcomes) const {
    if (outcomes.size() != slots_)
      throw DomainError("expected " + std::to_string(slots_) + " outcomes, got " + std::to_string(outcomes.size()));
    std::size_t idx = 0;
    for (Outcome o : outcomes) idx = (idx << 1) | static_cast<std::size_t>(outcome_index(o));
    return idx;
  }

  /// Outcome of `slot` in entry `idx`.
  Outcome outcome(std::size_t idx, std::size_t slot) const {
    return outcome_from_index(static_cast<int>((idx >> (slots_ - 1 - slot)) & 1U));
  }

  /// Bit mask selecting `slot` inside an entry index.
  std::size_t slot_bit(std::size_t slot) const { return std::size_t{1} << (slots_ - 1 - slot); }

  Rational sum() const {
    Rational s;
    for (const auto& v : p_) s += v;
    return s;
  }

  /// Sum over entries of p times the product of all slot outcomes.
  Rational correlator() const {
    Rational c;
    for (std::size_t idx = 0; idx < p_.size(); ++idx) {
      if (p_[idx].is_zero()) continue;
      if (std::popcount(idx) % 2 == 0)
        c += p_[idx];
      else
        c -= p_[idx];
    }
    return c;
  }

  /// Marginal over `keep`, in the order given (slots may be reordered).
  Distribution marginal(std::span<const std::size_t> keep) const {
    Distribution out(keep.size());
    for (std::size_t s : keep)
      if (s >= slots_) throw DomainError("marginal slot " + std::to_string(s) + " out of range");
    for (std::size_t idx = 0; idx < p_.size(); ++idx) {
      if (p_[idx].is_zero()) continue;
      std::size_t o = 0;
      for (std::size_t s : keep) o = (o << 1) | ((idx >> (slots_ - 1 - s)) & 1U);
      out.p_[o] += p_[idx];
    }
    return out;
  }

  /// Event label such as "(+,-;+,-)"; a ';' separates the first `split` slots.
  std::string label(std::size_t idx, std::size_t split) const {
    std::string s = "(";
    for (std::size_t t = 0; t < slots_; ++t) {
      if (t > 0) s += (t == split) ? ';' : ',';
      s += outcome(idx, t) == Outcome::Plus ? '+' : '-';
    }
    return s + ")";
  }

  /// this += weight * other
  void add_scaled(const Distribution& other, const Rational& weight) {
    if (other.slots_ != slots_) throw DomainError("distribution shape mismatch");
    for (std::size_t idx = 0; idx < p_.size(); ++idx)
      if (!other.p_[idx].is_zero()) p_[idx] += weight * other.p_[idx];
  }

  const std::vector<Rational>& values() const { return p_; }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::size_t slots_ = 0;
  std::vector<Rational> p_{Rational(1)};
};

}  // namespace macrobox
