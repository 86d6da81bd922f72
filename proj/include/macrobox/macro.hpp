#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "macrobox/boxes.hpp"
#include "macrobox/ensemble.hpp"
#include "macrobox/error.hpp"
#include "macrobox/jacobi.hpp"
#include "macrobox/rational.hpp"
#include "macrobox/symmetry.hpp"

namespace macrobox {

/// A_i = sum_k a_i^{(k)} or B_j = sum_l b_j^{(l)}.
struct MacroObservable {
  Side side;
  int setting;
};

/// Exact joint distribution of (A_i, B_j); both range over N, N-2, ..., -N.
class MacroDistribution {
 public:
  explicit MacroDistribution(int n) : n_(n), p_(static_cast<std::size_t>((n + 1) * (n + 1)), Rational(0)) {}

  int pairs() const { return n_; }

  /// Probability of A = x, B = y; zero for values off the lattice.
  Rational at(int x, int y) const {
    if (!on_lattice(x) || !on_lattice(y)) return Rational(0);
    return p_[cell(x, y)];
  }
  void add(int x, int y, const Rational& p) { p_[cell(x, y)] += p; }

  bool on_lattice(int v) const { return v >= -n_ && v <= n_ && (n_ - v) % 2 == 0; }

  /// <A^a B^b>.
  Rational moment(int a_power, int b_power) const {
    Rational m;
    for (int x = -n_; x <= n_; x += 2)
      for (int y = -n_; y <= n_; y += 2) {
        const Rational& p = p_[cell(x, y)];
        if (p.is_zero()) continue;
        m += p * Rational(ipow(x, a_power) * ipow(y, b_power));
      }
    return m;
  }

  Rational sum() const {
    Rational s;
    for (const auto& v : p_) s += v;
    return s;
  }

 private:
  static std::int64_t ipow(std::int64_t base, int e) {
    std::int64_t r = 1;
    for (int t = 0; t < e; ++t) r *= base;
    return r;
  }
  std::size_t cell(int x, int y) const {
    return static_cast<std::size_t>(((n_ - x) / 2) * (n_ + 1) + (n_ - y) / 2);
  }

  int n_;
  std::vector<Rational> p_;
};

namespace detail {

inline Rational pair_marginal_correlator(const EnsembleModel& model, ParticleSetting a, ParticleSetting b) {
  return marginal(model, {a, b}).correlator();
}

inline void require_agreement(const Rational& direct, const Rational& other, const std::string& what) {
  if (direct != other)
    throw ConsistencyError(what + ": microscopic sum " + direct.str() + " != effective form " + other.str());
}

inline void check_setting(const EnsembleModel& model, Side side, int s) {
  if (s < 0 || s >= model.settings(side))
    throw DomainError(std::string("setting ") + std::to_string(s) + " out of range for side " + side_name(side));
}

}  // namespace detail

/// <A_i> (or <B_j>) as sum_k <a_i^{(k)}>, checked against N <a_i>_eff.
inline Rational macro_mean(const EnsembleModel& model, Side side, int setting) {
  detail::check_setting(model, side, setting);
  const int n = model.pairs();
  Rational direct;
  for (int k = 0; k < n; ++k) direct += marginal(model, {{side, k, setting}}).correlator();
  const Rational eff = Rational(n) * (side == Side::Alice ? effective_correlator(model, setting, 0, 1, 0)
                                                          : effective_correlator(model, 0, setting, 0, 1));
  detail::require_agreement(direct, eff, std::string("<") + side_name(side) + std::to_string(setting) + ">");
  return direct;
}

/// <A_i B_j> = sum_{k,l} <a_i^{(k)} b_j^{(l)}>, checked against N^2 <a_i b_j>_eff.
inline Rational macro_correlation(const EnsembleModel& model, int i, int j) {
  detail::check_setting(model, Side::Alice, i);
  detail::check_setting(model, Side::Bob, j);
  const int n = model.pairs();
  Rational direct;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      direct += detail::pair_marginal_correlator(model, {Side::Alice, k, i}, {Side::Bob, l, j});
  const int ai[] = {i}, bj[] = {j};
  const Rational eff = Rational(n) * Rational(n) * symmetrized_marginal(model, ai, bj).correlator();
  detail::require_agreement(direct, eff, "<A" + std::to_string(i) + "B" + std::to_string(j) + ">");
  return direct;
}

/// <A_i^2> = N + sum_{k != l} <a_i^{(k)} a_i^{(l)}>, checked against
/// N (1 + (N-1) <a_i a'_i>_eff).
inline Rational macro_local_second_moment(const EnsembleModel& model, Side side, int setting) {
  detail::check_setting(model, side, setting);
  const int n = model.pairs();
  Rational direct(n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      if (k != l) direct += detail::pair_marginal_correlator(model, {side, k, setting}, {side, l, setting});
  Rational eff(n);
  if (n >= 2) {
    const Rational same = side == Side::Alice ? effective_correlator(model, setting, 0, 2, 0)
                                              : effective_correlator(model, 0, setting, 0, 2);
    eff = Rational(n) * (Rational(1) + Rational(n - 1) * same);
  }
  detail::require_agreement(direct, eff, std::string("<") + side_name(side) + std::to_string(setting) + "^2>");
  return direct;
}

/// <(A_i B_j)^2> from the four-index microscopic expansion, checked (N >= 2)
/// against N^2 (N-1) (1/(N-1) + <aa'>_eff + <bb'>_eff + (N-1) <aa'bb'>_eff).
inline Rational macro_joint_second_moment(const EnsembleModel& model, int i, int j) {
  detail::check_setting(model, Side::Alice, i);
  detail::check_setting(model, Side::Bob, j);
  const int n = model.pairs();
  Rational aa, bb, aabb;
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      if (k == l) continue;
      aa += detail::pair_marginal_correlator(model, {Side::Alice, k, i}, {Side::Alice, l, i});
      bb += detail::pair_marginal_correlator(model, {Side::Bob, k, j}, {Side::Bob, l, j});
      for (int m = 0; m < n; ++m)
        for (int q = 0; q < n; ++q) {
          if (m == q) continue;
          aabb += marginal(model, {{Side::Alice, k, i}, {Side::Alice, l, i}, {Side::Bob, m, j}, {Side::Bob, q, j}})
                      .correlator();
        }
    }
  const Rational nn(n);
  const Rational direct = nn * nn + nn * aa + nn * bb + aabb;
  if (n >= 2) {
    const Rational nm1(n - 1);
    const Rational eff = nn * nn * nm1 *
                         (Rational(1) / nm1 + effective_correlator(model, i, j, 2, 0) +
                          effective_correlator(model, i, j, 0, 2) + nm1 * effective_correlator(model, i, j, 2, 2));
    detail::require_agreement(direct, eff, "<(A" + std::to_string(i) + "B" + std::to_string(j) + ")^2>");
  }
  return direct;
}

/// Oracle: exact distribution of (A_i, B_j) by enumerating all 4^N outcome
/// tuples at uniform settings.
inline MacroDistribution macro_distribution_bruteforce(const EnsembleModel& model, int i, int j,
                                                       const DeskBound& bound = {}) {
  detail::check_setting(model, Side::Alice, i);
  detail::check_setting(model, Side::Bob, j);
  const int n = model.pairs();
  bound.check(n, "brute-force macroscopic distribution");
  MacroDistribution dist(n);
  if (const PairBox* box = model.pair_box()) {
    std::function<void(int, int, int, const Rational&)> rec = [&](int k, int x_sum, int y_sum, const Rational& p) {
      if (k == n) {
        dist.add(x_sum, y_sum, p);
        return;
      }
      for (Outcome x : kOutcomes)
        for (Outcome y : kOutcomes) {
          const Rational& f = (*box)(i, j, x, y);
          if (f.is_zero()) continue;
          rec(k + 1, x_sum + value(x), y_sum + value(y), p * f);
        }
    };
    rec(0, 0, 0, Rational(1));
    return dist;
  }
  const auto& entries = model.explicit_table()->entries;
  const std::uint64_t sidx = model.settings_index(SettingAssignment::uniform(n, i, j));
  for (auto it = entries.lower_bound({sidx, 0}); it != entries.end() && it->first.first == sidx; ++it) {
    const OutcomeAssignment o = model.outcomes_from_index(it->first.second);
    int x_sum = 0, y_sum = 0;
    for (int k = 0; k < n; ++k) {
      x_sum += value(o.alice[static_cast<std::size_t>(k)]);
      y_sum += value(o.bob[static_cast<std::size_t>(k)]);
    }
    dist.add(x_sum, y_sum, it->second);
  }
  return dist;
}

/// c(k, r, N): number of length-k sequences over N symbols in which exactly
/// r symbols occur an odd number of times, for r = 0..k.
inline std::vector<Rational> parity_counts(int k, int n) {
  if (k < 0 || n < 1) throw DomainError("parity counts need k >= 0 and N >= 1");
  std::vector<Rational> count(static_cast<std::size_t>(k + 2), Rational(0));
  count[0] = Rational(1);
  for (int t = 0; t < k; ++t) {
    std::vector<Rational> next(count.size(), Rational(0));
    for (int o = 0; o <= k; ++o) {
      // Append a symbol not yet odd (o-1 -> o) or one of the odd ones (o+1 -> o).
      if (o >= 1 && n - o + 1 > 0) next[static_cast<std::size_t>(o)] += count[static_cast<std::size_t>(o - 1)] * Rational(n - o + 1);
      next[static_cast<std::size_t>(o)] += count[static_cast<std::size_t>(o + 1)] * Rational(o + 1);
    }
    count.swap(next);
  }
  count.pop_back();
  return count;
}

/// <(A_i B_j)^k> = sum_{r,s} c(k,r,N) c(k,s,N) E_eff(r,s). Relies on +-1
/// outcomes, which the Outcome type guarantees.
inline Rational macro_moment_general(const EnsembleModel& model, int i, int j, int k) {
  detail::check_setting(model, Side::Alice, i);
  detail::check_setting(model, Side::Bob, j);
  if (k < 0) throw DomainError("moment order must be >= 0");
  const int n = model.pairs();
  const auto c = parity_counts(k, n);
  Rational total;
  for (int r = 0; r <= std::min(k, n); ++r) {
    if (c[static_cast<std::size_t>(r)].is_zero()) continue;
    for (int s = 0; s <= std::min(k, n); ++s) {
      if (c[static_cast<std::size_t>(s)].is_zero()) continue;
      total += c[static_cast<std::size_t>(r)] * c[static_cast<std::size_t>(s)] * effective_correlator(model, i, j, r, s);
    }
  }
  return total;
}

struct MomentValue {
  Rational value;
  std::string path;
};

struct Fluctuation {
  Rational squared;
  double value = 0.0;
};

/// Averages, second moments and fluctuations for one setting pair.
struct MomentReport {
  int pairs = 0;
  int i = 0;
  int j = 0;
  MomentValue mean_a, mean_b, correlation, a_squared, b_squared, ab_squared;
  Fluctuation delta_a, delta_b, delta_ab;
};

struct MomentOptions {
  /// Also compare against the brute-force distribution when N <= this.
  int oracle_max_n = 6;
  DeskBound bound{};
};

inline Fluctuation make_fluctuation(const Rational& second, const Rational& first) {
  Fluctuation f{second - first * first, 0.0};
  if (f.squared.sign() < 0) throw ConsistencyError("negative squared fluctuation " + f.squared.str());
  f.value = std::sqrt(f.squared.to_double());
  return f;
}

inline MomentReport moment_report(const EnsembleModel& model, int i, int j, const MomentOptions& options = {}) {
  MomentReport rep;
  rep.pairs = model.pairs();
  rep.i = i;
  rep.j = j;
  const std::string two_path = "microscopic=effective";
  const bool oracle = model.pairs() <= options.oracle_max_n && model.pairs() <= options.bound.max_n;
  const std::string path = oracle ? two_path + "=bruteforce" : two_path;
  rep.mean_a = {macro_mean(model, Side::Alice, i), path};
  rep.mean_b = {macro_mean(model, Side::Bob, j), path};
  rep.correlation = {macro_correlation(model, i, j), path};
  rep.a_squared = {macro_local_second_moment(model, Side::Alice, i), path};
  rep.b_squared = {macro_local_second_moment(model, Side::Bob, j), path};
  rep.ab_squared = {macro_joint_second_moment(model, i, j), model.pairs() >= 2 ? path : std::string("microscopic")};
  if (oracle) {
    const MacroDistribution dist = macro_distribution_bruteforce(model, i, j, options.bound);
    auto cmp = [](const Rational& a, const Rational& b, const std::string& what) {
      if (a != b) throw ConsistencyError(what + ": moment " + a.str() + " != brute force " + b.str());
    };
    cmp(rep.mean_a.value, dist.moment(1, 0), "<A>");
    cmp(rep.mean_b.value, dist.moment(0, 1), "<B>");
    cmp(rep.correlation.value, dist.moment(1, 1), "<AB>");
    cmp(rep.a_squared.value, dist.moment(2, 0), "<A^2>");
    cmp(rep.b_squared.value, dist.moment(0, 2), "<B^2>");
    cmp(rep.ab_squared.value, dist.moment(2, 2), "<(AB)^2>");
    if (model.pairs() < 2) rep.ab_squared.path = "microscopic=bruteforce";
  }
  rep.delta_a = make_fluctuation(rep.a_squared.value, rep.mean_a.value);
  rep.delta_b = make_fluctuation(rep.b_squared.value, rep.mean_b.value);
  rep.delta_ab = make_fluctuation(rep.ab_squared.value, rep.correlation.value);
  return rep;
}

/// <(B_0 + B_1)^2> given Alice measured `alice_setting` on every pair, under
/// the extension that assigns both b_0 and b_1 their values determined by
/// Alice's outcome. Only defined when those conditionals are deterministic.
inline Rational rohrlich_conditional_variance(const EnsembleModel& model, int alice_setting) {
  const PairBox* box = model.pair_box();
  if (box == nullptr)
    throw UnsupportedError("value-assignment extension", "the B0+B1 extension needs an independent-pairs model");
  if (box->settings_b() != 2) throw DomainError("B0+B1 needs exactly two Bob settings");
  detail::check_setting(model, Side::Alice, alice_setting);

  // Distribution of s = y0 + y1 for one pair, keyed by s.
  std::map<int, Rational> single;
  for (Outcome x : kOutcomes) {
    const Rational px = box->alice_marginal(alice_setting, x, 0);
    if (px.is_zero()) continue;
    int s = 0;
    for (int j = 0; j < 2; ++j) {
      if (box->alice_marginal(alice_setting, x, j) != px)
        throw UnsupportedError("no-signalling", "Alice's marginal depends on Bob's setting");
      int determined = 0;
      int support = 0;
      for (Outcome y : kOutcomes)
        if (!(*box)(alice_setting, j, x, y).is_zero()) {
          ++support;
          determined = value(y);
        }
      if (support != 1)
        throw UnsupportedError("value-assignment extension",
                               "Bob's outcome at setting " + std::to_string(j) +
                                   " is not determined by Alice's outcome; the B0+B1 extension is undefined");
      s += determined;
    }
    single[s] += px;
  }

  std::map<int, Rational> total{{0, Rational(1)}};
  for (int k = 0; k < model.pairs(); ++k) {
    std::map<int, Rational> next;
    for (const auto& [acc, p] : total)
      for (const auto& [s, q] : single) next[acc + s] += p * q;
    total.swap(next);
  }
  Rational second;
  for (const auto& [v, p] : total) second += p * Rational(static_cast<std::int64_t>(v) * v);

  Rational mean_s, mean_s2;
  for (const auto& [s, q] : single) {
    mean_s += q * Rational(s);
    mean_s2 += q * Rational(s * s);
  }
  const Rational n(model.pairs());
  const Rational closed = n * mean_s2 + n * (n - Rational(1)) * mean_s * mean_s;
  if (closed != second) throw ConsistencyError("<(B0+B1)^2>: convolution " + second.str() + " != " + closed.str());
  return second;
}

/// Correlation matrix in the basis (A0, A1, B0, B1).
struct GisinMatrix {
  int pairs = 0;
  std::array<std::array<Rational, 4>, 4> entries;
  std::array<double, 4> eigenvalues{};
};

/// Diagonal from the local second moments, A-B blocks from the macroscopic
/// correlations, and <A0 A1> = N^2 <a0 a1>_eff, <B0 B1> = N^2 <b0 b1>_eff
/// read off the fluctuations JPD.
inline GisinMatrix gisin_matrix(const EnsembleModel& model) {
  if (model.settings_a() != 2 || model.settings_b() != 2)
    throw DomainError("the correlation matrix needs two settings per side");
  if (model.pairs() < 4) throw DomainError("the correlation matrix needs N >= 4 (fluctuations JPD)");
  const int n = model.pairs();
  const Rational n2 = Rational(n) * Rational(n);
  GisinMatrix g;
  g.pairs = n;
  const SymmetricJPD jpd = jpd_fluctuations(model);
  const Rational a01 = n2 * jpd_marginal(jpd, {{Side::Alice, 0, 0}, {Side::Alice, 1, 0}}).correlator();
  const Rational b01 = n2 * jpd_marginal(jpd, {{Side::Bob, 0, 0}, {Side::Bob, 1, 0}}).correlator();
  auto& e = g.entries;
  e[0][0] = macro_local_second_moment(model, Side::Alice, 0);
  e[1][1] = macro_local_second_moment(model, Side::Alice, 1);
  e[2][2] = macro_local_second_moment(model, Side::Bob, 0);
  e[3][3] = macro_local_second_moment(model, Side::Bob, 1);
  e[0][1] = e[1][0] = a01;
  e[2][3] = e[3][2] = b01;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const Rational c = macro_correlation(model, i, j);
      e[static_cast<std::size_t>(i)][static_cast<std::size_t>(2 + j)] = c;
      e[static_cast<std::size_t>(2 + j)][static_cast<std::size_t>(i)] = c;
    }
  SquareMatrix<4> m{};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) m[r][c] = e[r][c].to_double();
  g.eigenvalues = jacobi_eigenvalues<4>(m);
  return g;
}

}  // namespace macrobox
