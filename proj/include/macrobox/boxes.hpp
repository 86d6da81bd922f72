#pragma once

#include <array>
#include <cstdlib>
#include <cstddef>
#include <string>
#include <vector>

#include "macrobox/error.hpp"
#include "macrobox/rational.hpp"

namespace macrobox {

/// Binary measurement outcome. Index 0 is +1 and index 1 is -1, so tables
/// enumerate "+" before "-".
enum class Outcome : int { Plus = 1, Minus = -1 };

constexpr int value(Outcome o) { return static_cast<int>(o); }
constexpr int outcome_index(Outcome o) { return o == Outcome::Plus ? 0 : 1; }
constexpr Outcome outcome_from_index(int bit) { return bit == 0 ? Outcome::Plus : Outcome::Minus; }
constexpr std::array<Outcome, 2> kOutcomes{Outcome::Plus, Outcome::Minus};

inline Outcome outcome_from_int(int v) {
  if (v == 1) return Outcome::Plus;
  if (v == -1) return Outcome::Minus;
  throw DomainError("outcome must be +1 or -1, got " + std::to_string(v));
}

enum class Side { Alice, Bob };

inline const char* side_name(Side s) { return s == Side::Alice ? "A" : "B"; }

/// One violated constraint. `where` names the offending indices; `residual`
/// is the signed amount by which the constraint fails.
struct Violation {
  enum class Kind { Normalization, Nonnegativity, NoSignalling };
  Kind kind;
  std::string where;
  Rational residual;
  std::size_t occurrences = 1;
};

inline const char* kind_name(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::Normalization: return "normalization";
    case Violation::Kind::Nonnegativity: return "nonnegativity";
    case Violation::Kind::NoSignalling: return "no-signalling";
  }
  return "?";
}

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::size_t count(Violation::Kind k) const {
    std::size_t n = 0;
    for (const auto& v : violations) n += v.kind == k;
    return n;
  }
};

/// Probability table p(x, y | i, j) of a single bipartite box.
class PairBox {
 public:
  PairBox(int settings_a, int settings_b) : s_a_(settings_a), s_b_(settings_b) {
    if (settings_a < 1 || settings_b < 1) throw DomainError("a box needs at least one setting per side");
    table_.assign(static_cast<std::size_t>(settings_a * settings_b * 4), Rational(0));
  }

  int settings_a() const { return s_a_; }
  int settings_b() const { return s_b_; }

  const Rational& operator()(int i, int j, Outcome x, Outcome y) const { return table_[index(i, j, x, y)]; }
  Rational& operator()(int i, int j, Outcome x, Outcome y) { return table_[index(i, j, x, y)]; }

  /// p(x | i), taken at Bob setting j.
  Rational alice_marginal(int i, Outcome x, int j = 0) const {
    return (*this)(i, j, x, Outcome::Plus) + (*this)(i, j, x, Outcome::Minus);
  }
  /// p(y | j), taken at Alice setting i.
  Rational bob_marginal(int j, Outcome y, int i = 0) const {
    return (*this)(i, j, Outcome::Plus, y) + (*this)(i, j, Outcome::Minus, y);
  }

  void check_settings(int i, int j) const {
    if (i < 0 || i >= s_a_ || j < 0 || j >= s_b_)
      throw DomainError("setting pair (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
  }

  friend bool operator==(const PairBox&, const PairBox&) = default;

 private:
  std::size_t index(int i, int j, Outcome x, Outcome y) const {
    check_settings(i, j);
    return static_cast<std::size_t>(((i * s_b_ + j) * 2 + outcome_index(x)) * 2 + outcome_index(y));
  }

  int s_a_;
  int s_b_;
  std::vector<Rational> table_;
};

inline int parity_sign(int i, int j) { return (i * j) % 2 == 0 ? 1 : -1; }

/// p(x,y|i,j) = |x + (-1)^{ij} y| / 4.
inline PairBox make_pr_box() {
  PairBox box(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (Outcome x : kOutcomes)
        for (Outcome y : kOutcomes) box(i, j, x, y) = Rational(std::abs(value(x) + parity_sign(i, j) * value(y)), 4);
  return box;
}

/// Noisy PR box p(x,y|i,j) = (1 + E (-1)^{ij} x y) / 4, E in [-1, 1].
inline PairBox make_isotropic_box(const Rational& visibility) {
  if (visibility < Rational(-1) || visibility > Rational(1))
    throw DomainError("isotropic visibility " + visibility.str() + " outside [-1, 1]");
  PairBox box(2, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (Outcome x : kOutcomes)
        for (Outcome y : kOutcomes)
          box(i, j, x, y) = (Rational(1) + visibility * Rational(parity_sign(i, j) * value(x) * value(y))) / Rational(4);
  return box;
}

/// Local deterministic vertex: Alice answers x_i, Bob answers y_j.
inline PairBox make_deterministic_box(Outcome x0, Outcome x1, Outcome y0, Outcome y1) {
  PairBox box(2, 2);
  const std::array<Outcome, 2> xs{x0, x1}, ys{y0, y1};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) box(i, j, xs[i], ys[j]) = Rational(1);
  return box;
}

/// <a_i b_j> = sum_{x,y} x y p(x,y|i,j).
inline Rational pair_correlation(const PairBox& box, int i, int j) {
  box.check_settings(i, j);
  Rational c;
  for (Outcome x : kOutcomes)
    for (Outcome y : kOutcomes) c += Rational(value(x) * value(y)) * box(i, j, x, y);
  return c;
}

inline ValidationReport validate_pairbox(const PairBox& box) {
  ValidationReport report;
  auto sign = [](Outcome o) { return o == Outcome::Plus ? "+" : "-"; };
  for (int i = 0; i < box.settings_a(); ++i) {
    for (int j = 0; j < box.settings_b(); ++j) {
      Rational total;
      for (Outcome x : kOutcomes) {
        for (Outcome y : kOutcomes) {
          const Rational& p = box(i, j, x, y);
          total += p;
          if (p.sign() < 0)
            report.violations.push_back({Violation::Kind::Nonnegativity,
                                         "p(" + std::string(sign(x)) + "," + sign(y) + "|" + std::to_string(i) + "," +
                                             std::to_string(j) + ")",
                                         p});
        }
      }
      if (total != Rational(1))
        report.violations.push_back({Violation::Kind::Normalization,
                                     "settings (" + std::to_string(i) + "," + std::to_string(j) + ")",
                                     total - Rational(1)});
    }
  }
  // Alice's marginal must not depend on j; Bob's must not depend on i.
  for (int i = 0; i < box.settings_a(); ++i)
    for (int j = 1; j < box.settings_b(); ++j) {
      Rational r = box.alice_marginal(i, Outcome::Plus, j) - box.alice_marginal(i, Outcome::Plus, 0);
      Rational r2 = box.alice_marginal(i, Outcome::Minus, j) - box.alice_marginal(i, Outcome::Minus, 0);
      if (!r.is_zero() || !r2.is_zero())
        report.violations.push_back({Violation::Kind::NoSignalling,
                                     "p(x|i=" + std::to_string(i) + ") differs between j=0 and j=" + std::to_string(j),
                                     r.is_zero() ? r2 : r});
    }
  for (int j = 0; j < box.settings_b(); ++j)
    for (int i = 1; i < box.settings_a(); ++i) {
      Rational r = box.bob_marginal(j, Outcome::Plus, i) - box.bob_marginal(j, Outcome::Plus, 0);
      Rational r2 = box.bob_marginal(j, Outcome::Minus, i) - box.bob_marginal(j, Outcome::Minus, 0);
      if (!r.is_zero() || !r2.is_zero())
        report.violations.push_back({Violation::Kind::NoSignalling,
                                     "p(y|j=" + std::to_string(j) + ") differs between i=0 and i=" + std::to_string(i),
                                     r.is_zero() ? r2 : r});
    }
  return report;
}

/// <a0b0> + <a0b1> + <a1b0> - <a1b1>.
inline Rational chsh_value(const PairBox& box) {
  if (box.settings_a() != 2 || box.settings_b() != 2)
    throw DomainError("CHSH needs exactly two settings per side");
  return pair_correlation(box, 0, 0) + pair_correlation(box, 0, 1) + pair_correlation(box, 1, 0) -
         pair_correlation(box, 1, 1);
}

}  // namespace macrobox
