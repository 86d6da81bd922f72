#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "macrobox/boxes.hpp"
#include "macrobox/distribution.hpp"
#include "macrobox/ensemble.hpp"
#include "macrobox/error.hpp"
#include "macrobox/rational.hpp"

namespace macrobox {

/// How symmetrized sums over ordered distinct particle tuples are evaluated.
///
/// `Enumerate` visits every tuple and works for any model. `Auto` uses the
/// same route for explicit tables, but for independent pairs groups tuples by
/// coincidence class (which Alice slot shares a pair with which Bob slot):
/// every tuple in a class has the same marginal and the class size is
/// (N)_a (N-a)_{b-m} for m coinciding slots, so the cost no longer grows with N.
enum class Symmetrization { Auto, Enumerate };

namespace detail {

inline void for_each_distinct_tuple(int n, std::size_t len, const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> tuple;
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::function<void()> rec = [&]() {
    if (tuple.size() == len) {
      fn(tuple);
      return;
    }
    for (int k = 0; k < n; ++k) {
      if (used[static_cast<std::size_t>(k)]) continue;
      used[static_cast<std::size_t>(k)] = true;
      tuple.push_back(k);
      rec();
      tuple.pop_back();
      used[static_cast<std::size_t>(k)] = false;
    }
  };
  rec();
}

inline MarginalSpec make_spec(std::span<const int> alice_particles, std::span<const int> alice_settings,
                              std::span<const int> bob_particles, std::span<const int> bob_settings) {
  MarginalSpec spec;
  for (std::size_t t = 0; t < alice_particles.size(); ++t)
    spec.push_back({Side::Alice, alice_particles[t], alice_settings[t]});
  for (std::size_t t = 0; t < bob_particles.size(); ++t) spec.push_back({Side::Bob, bob_particles[t], bob_settings[t]});
  return spec;
}

}  // namespace detail

/// Average of the marginal over Alice slots (settings `alice_settings`) and
/// Bob slots (settings `bob_settings`), taken over all ordered tuples of
/// distinct Alice particles and distinct Bob particles. Slot order of the
/// result: Alice slots, then Bob slots.
inline Distribution symmetrized_marginal(const EnsembleModel& model, std::span<const int> alice_settings,
                                         std::span<const int> bob_settings,
                                         Symmetrization method = Symmetrization::Auto) {
  const int n = model.pairs();
  const auto a = alice_settings.size();
  const auto b = bob_settings.size();
  if (a > static_cast<std::size_t>(n) || b > static_cast<std::size_t>(n))
    throw DomainError("symmetrization over " + std::to_string(a) + "+" + std::to_string(b) +
                      " distinct particles needs N >= " + std::to_string(std::max(a, b)) + ", got N=" +
                      std::to_string(n));
  Distribution acc(a + b);
  const Rational tuples = falling_factorial(n, static_cast<std::int64_t>(a)) *
                          falling_factorial(n, static_cast<std::int64_t>(b));

  if (method == Symmetrization::Auto && model.pair_box() != nullptr) {
    // match[t] = Bob slot sharing a pair with Alice slot t, or -1.
    std::vector<int> match(a, -1);
    std::vector<bool> bob_taken(b, false);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t t, std::size_t matched) {
      if (t == a) {
        const auto unmatched = static_cast<std::int64_t>(b - matched);
        Rational count = falling_factorial(n, static_cast<std::int64_t>(a)) *
                         falling_factorial(n - static_cast<std::int64_t>(a), unmatched);
        if (count.is_zero()) return;
        std::vector<int> alice_particles(a), bob_particles(b, -1);
        for (std::size_t s = 0; s < a; ++s) {
          alice_particles[s] = static_cast<int>(s);
          if (match[s] >= 0) bob_particles[static_cast<std::size_t>(match[s])] = static_cast<int>(s);
        }
        int fresh = static_cast<int>(a);
        for (auto& p : bob_particles)
          if (p < 0) p = fresh++;
        acc.add_scaled(marginal(model, detail::make_spec(alice_particles, alice_settings, bob_particles, bob_settings)),
                       count);
        return;
      }
      match[t] = -1;
      rec(t + 1, matched);
      for (std::size_t s = 0; s < b; ++s) {
        if (bob_taken[s]) continue;
        bob_taken[s] = true;
        match[t] = static_cast<int>(s);
        rec(t + 1, matched + 1);
        bob_taken[s] = false;
      }
      match[t] = -1;
    };
    rec(0, 0);
  } else {
    detail::for_each_distinct_tuple(n, a, [&](const std::vector<int>& alice_particles) {
      detail::for_each_distinct_tuple(n, b, [&](const std::vector<int>& bob_particles) {
        acc.add_scaled(marginal(model, detail::make_spec(alice_particles, alice_settings, bob_particles, bob_settings)),
                       Rational(1));
      });
    });
  }
  Distribution out(a + b);
  out.add_scaled(acc, Rational(1) / tuples);
  return out;
}

/// p(x_i; y_j)_eff = (1/N^2) sum_{k,l} p(x_i^{(k)}; y_j^{(l)}), returned as a box.
inline PairBox effective_pair(const EnsembleModel& model, Symmetrization method = Symmetrization::Auto) {
  PairBox out(model.settings_a(), model.settings_b());
  for (int i = 0; i < model.settings_a(); ++i) {
    for (int j = 0; j < model.settings_b(); ++j) {
      const int ai[] = {i}, bj[] = {j};
      Distribution d = symmetrized_marginal(model, ai, bj, method);
      for (Outcome x : kOutcomes)
        for (Outcome y : kOutcomes) out(i, j, x, y) = d.at({x, y});
    }
  }
  return out;
}

/// p(x_i, x'_i; y_j, y'_j)_eff for every setting pair.
class EffectiveQuadDist {
 public:
  EffectiveQuadDist(int s_a, int s_b) : s_a_(s_a), s_b_(s_b), dists_(static_cast<std::size_t>(s_a * s_b)) {}

  int settings_a() const { return s_a_; }
  int settings_b() const { return s_b_; }

  /// Slots (x, x', y, y').
  const Distribution& at(int i, int j) const { return dists_.at(static_cast<std::size_t>(i * s_b_ + j)); }
  Distribution& at(int i, int j) { return dists_.at(static_cast<std::size_t>(i * s_b_ + j)); }

 private:
  int s_a_;
  int s_b_;
  std::vector<Distribution> dists_;
};

inline EffectiveQuadDist effective_quad(const EnsembleModel& model, Symmetrization method = Symmetrization::Auto) {
  if (model.pairs() < 2) throw DomainError("effective two-pair distribution needs N >= 2");
  EffectiveQuadDist out(model.settings_a(), model.settings_b());
  for (int i = 0; i < model.settings_a(); ++i)
    for (int j = 0; j < model.settings_b(); ++j) {
      const int ai[] = {i, i}, bj[] = {j, j};
      out.at(i, j) = symmetrized_marginal(model, ai, bj, method);
    }
  return out;
}

/// Average of <a^{(k_1)}...a^{(k_r)} b^{(l_1)}...b^{(l_s)}> over distinct
/// Alice particles at setting i and distinct Bob particles at setting j.
inline Rational effective_correlator(const EnsembleModel& model, int i, int j, int r, int s,
                                     Symmetrization method = Symmetrization::Auto) {
  if (r < 0 || s < 0 || r > model.pairs() || s > model.pairs())
    throw DomainError("correlator order (" + std::to_string(r) + "," + std::to_string(s) + ") exceeds N=" +
                      std::to_string(model.pairs()));
  if (i < 0 || i >= model.settings_a() || j < 0 || j >= model.settings_b())
    throw DomainError("setting out of range");
  if (r == 0 && s == 0) return Rational(1);
  std::vector<int> ai(static_cast<std::size_t>(r), i), bj(static_cast<std::size_t>(s), j);
  return symmetrized_marginal(model, ai, bj, method).correlator();
}

/// Labels one slot of a symmetric JPD: `copy`-th copy of `setting` on `side`.
struct SlotId {
  Side side;
  int setting;
  int copy = 0;
};

struct SlotGroup {
  int setting;
  int copies;
};

/// Layout of a symmetric JPD: Alice groups then Bob groups, each group a run
/// of `copies` slots measured at `setting`.
struct SlotSchema {
  std::vector<SlotGroup> alice;
  std::vector<SlotGroup> bob;

  std::size_t alice_slots() const {
    std::size_t n = 0;
    for (const auto& g : alice) n += static_cast<std::size_t>(g.copies);
    return n;
  }
  std::size_t total_slots() const {
    std::size_t n = alice_slots();
    for (const auto& g : bob) n += static_cast<std::size_t>(g.copies);
    return n;
  }

  std::size_t position(const SlotId& id) const {
    std::size_t base = id.side == Side::Alice ? 0 : alice_slots();
    for (const auto& g : id.side == Side::Alice ? alice : bob) {
      if (g.setting == id.setting) {
        if (id.copy < 0 || id.copy >= g.copies) break;
        return base + static_cast<std::size_t>(id.copy);
      }
      base += static_cast<std::size_t>(g.copies);
    }
    throw DomainError(std::string("unknown slot ") + side_name(id.side) + " setting " + std::to_string(id.setting) +
                      " copy " + std::to_string(id.copy));
  }

  std::vector<int> settings(Side side) const {
    std::vector<int> out;
    for (const auto& g : side == Side::Alice ? alice : bob)
      for (int c = 0; c < g.copies; ++c) out.push_back(g.setting);
    return out;
  }

  friend bool operator==(const SlotSchema& a, const SlotSchema& b) {
    auto eq = [](const std::vector<SlotGroup>& x, const std::vector<SlotGroup>& y) {
      if (x.size() != y.size()) return false;
      for (std::size_t t = 0; t < x.size(); ++t)
        if (x[t].setting != y[t].setting || x[t].copies != y[t].copies) return false;
      return true;
    };
    return eq(a.alice, b.alice) && eq(a.bob, b.bob);
  }
};

/// Symmetrized joint distribution over every slot of `schema`. Entries may be
/// negative when produced by a closed form outside its range; `valid` is
/// true iff all entries are nonnegative.
struct SymmetricJPD {
  SlotSchema schema;
  Distribution dist;
  bool valid = false;
};

inline bool all_nonnegative(const Distribution& d) {
  for (const auto& v : d.values())
    if (v.sign() < 0) return false;
  return true;
}

/// JPD over k copies of every setting on each side. Needs k*s_A distinct
/// Alice particles and k*s_B distinct Bob particles.
inline SymmetricJPD jpd_general(const EnsembleModel& model, int copies, Symmetrization method = Symmetrization::Auto) {
  if (copies < 1) throw DomainError("copies must be >= 1");
  const int need_a = copies * model.settings_a();
  const int need_b = copies * model.settings_b();
  if (model.pairs() < need_a || model.pairs() < need_b)
    throw DomainError("a JPD with k=" + std::to_string(copies) + " copies needs k*s_A=" + std::to_string(need_a) +
                      " and k*s_B=" + std::to_string(need_b) + " particles per side, got N=" +
                      std::to_string(model.pairs()));
  SymmetricJPD jpd;
  for (int i = 0; i < model.settings_a(); ++i) jpd.schema.alice.push_back({i, copies});
  for (int j = 0; j < model.settings_b(); ++j) jpd.schema.bob.push_back({j, copies});
  jpd.dist = symmetrized_marginal(model, jpd.schema.settings(Side::Alice), jpd.schema.settings(Side::Bob), method);
  jpd.valid = all_nonnegative(jpd.dist);
  return jpd;
}

/// p(x_0, x_1; y_0, y_1)_sym.
inline SymmetricJPD jpd_averages(const EnsembleModel& model, Symmetrization method = Symmetrization::Auto) {
  if (model.pairs() < 2)
    throw DomainError("the averages JPD needs N >= 2 (two distinct particles per side); use the closed form for N=1");
  return jpd_general(model, 1, method);
}

/// p(x_0, x'_0, x_1, x'_1; y_0, y'_0, y_1, y'_1)_sym.
inline SymmetricJPD jpd_fluctuations(const EnsembleModel& model, Symmetrization method = Symmetrization::Auto) {
  if (model.pairs() < 4) throw DomainError("the fluctuations JPD needs N >= 4 (four distinct particles per side)");
  return jpd_general(model, 2, method);
}

inline Distribution jpd_marginal(const SymmetricJPD& jpd, std::span<const SlotId> slots) {
  std::vector<std::size_t> keep;
  for (const auto& id : slots) keep.push_back(jpd.schema.position(id));
  return jpd.dist.marginal(keep);
}

inline Distribution jpd_marginal(const SymmetricJPD& jpd, std::initializer_list<SlotId> slots) {
  return jpd_marginal(jpd, std::span<const SlotId>(slots.begin(), slots.size()));
}

struct JpdValidity {
  bool normalized = false;
  Rational total;
  std::vector<std::pair<std::size_t, Rational>> negative_entries;

  bool valid() const { return normalized && negative_entries.empty(); }
};

inline JpdValidity jpd_validity(const SymmetricJPD& jpd) {
  JpdValidity v;
  v.total = jpd.dist.sum();
  v.normalized = v.total == Rational(1);
  for (std::size_t idx = 0; idx < jpd.dist.size(); ++idx)
    if (jpd.dist[idx].sign() < 0) v.negative_entries.emplace_back(idx, jpd.dist[idx]);
  return v;
}

}  // namespace macrobox
