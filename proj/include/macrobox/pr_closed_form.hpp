#pragma once

// Closed-form values for N independent PR boxes. These are evaluated
// independently of the symmetrization machinery and used to cross-check it.

#include <array>
#include <string>

#include "macrobox/boxes.hpp"
#include "macrobox/distribution.hpp"
#include "macrobox/error.hpp"
#include "macrobox/rational.hpp"
#include "macrobox/symmetry.hpp"

namespace macrobox::pr {

inline void require_positive(int n) {
  if (n < 1) throw DomainError("N must be >= 1");
}

/// p_eff(x_i; y_j) = 1/4 + (|x + (-1)^{ij} y| - 1) / (4N).
inline Rational effective_probability(int n, int i, int j, Outcome x, Outcome y) {
  require_positive(n);
  return Rational(1, 4) + Rational(std::abs(value(x) + parity_sign(i, j) * value(y)) - 1, 4 * n);
}

inline Rational omega_plus(int n) {
  require_positive(n);
  return Rational(n + 2, 16 * n);
}
inline Rational omega_minus(int n) {
  require_positive(n);
  return Rational(n - 2, 16 * n);
}

/// The eight (x0,x1;y0,y1) events carrying omega_+ in the averages JPD.
inline bool is_omega_plus_event(Outcome x0, Outcome x1, Outcome y0, Outcome y1) {
  using enum Outcome;
  static constexpr std::array<std::array<Outcome, 4>, 8> events{{
      {Plus, Plus, Plus, Plus},
      {Plus, Plus, Plus, Minus},
      {Plus, Minus, Plus, Plus},
      {Plus, Minus, Minus, Plus},
      {Minus, Plus, Plus, Minus},
      {Minus, Plus, Minus, Minus},
      {Minus, Minus, Minus, Plus},
      {Minus, Minus, Minus, Minus},
  }};
  for (const auto& e : events)
    if (e[0] == x0 && e[1] == x1 && e[2] == y0 && e[3] == y1) return true;
  return false;
}

/// Averages JPD assembled from omega_+/omega_-. Defined for every N >= 1;
/// negative (and flagged invalid) at N = 1.
inline SymmetricJPD averages_jpd(int n) {
  SymmetricJPD jpd;
  jpd.schema.alice = {{0, 1}, {1, 1}};
  jpd.schema.bob = {{0, 1}, {1, 1}};
  jpd.dist = Distribution(4);
  for (std::size_t idx = 0; idx < jpd.dist.size(); ++idx) {
    const auto& d = jpd.dist;
    jpd.dist[idx] = is_omega_plus_event(d.outcome(idx, 0), d.outcome(idx, 1), d.outcome(idx, 2), d.outcome(idx, 3))
                        ? omega_plus(n)
                        : omega_minus(n);
  }
  jpd.valid = all_nonnegative(jpd.dist);
  return jpd;
}

enum class QuadClass { Alpha, Beta, Gamma, Delta };

inline Rational quad_value(int n, QuadClass c) {
  if (n < 2) throw DomainError("two-pair effective values need N >= 2");
  const std::int64_t den = 16LL * n * (n - 1);
  switch (c) {
    case QuadClass::Alpha: return Rational(static_cast<std::int64_t>(n) * (n - 1) + 2, den);
    case QuadClass::Beta: return Rational(static_cast<std::int64_t>(n - 2) * (n - 3), den);
    case QuadClass::Gamma: return Rational(static_cast<std::int64_t>(n) * (n + 3) - 2, den);
    case QuadClass::Delta: return Rational(static_cast<std::int64_t>(n + 1) * (n - 2), den);
  }
  return Rational(0);
}

/// Event class of (x, x'; y, y') at settings (i, j). At (1,1) the beta and
/// gamma events trade places.
inline QuadClass quad_class(int i, int j, Outcome x, Outcome xp, Outcome y, Outcome yp) {
  if (x != xp && y != yp) return QuadClass::Alpha;
  if (x == xp && y == yp) {
    const bool aligned = x == y;
    const bool anti = parity_sign(i, j) < 0;
    return aligned != anti ? QuadClass::Gamma : QuadClass::Beta;
  }
  return QuadClass::Delta;
}

/// <a a' b b'>_eff = 1 - 16 delta = 2 / (N (N - 1)).
inline Rational quad_correlator(int n) {
  if (n < 2) throw DomainError("two-pair effective values need N >= 2");
  return Rational(2, static_cast<std::int64_t>(n) * (n - 1));
}

}  // namespace macrobox::pr
