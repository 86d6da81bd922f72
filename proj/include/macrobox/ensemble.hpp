#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "macrobox/boxes.hpp"
#include "macrobox/distribution.hpp"
#include "macrobox/error.hpp"
#include "macrobox/rational.hpp"

namespace macrobox {

/// Upper limit on N for operations that enumerate the full 4^N outcome space.
struct DeskBound {
  int max_n = 12;
  bool allow_large = false;

  void check(int n, const std::string& operation) const {
    if (!allow_large && n > max_n)
      throw DeskBoundError(operation + " enumerates O(4^N s^N) terms; N=" + std::to_string(n) +
                           " exceeds the desk bound " + std::to_string(max_n) +
                           " (raise MACROBOX_MAX_N or pass --allow-large)");
  }

  /// Default bound, overridden by the MACROBOX_MAX_N environment variable.
  static DeskBound from_env() {
    DeskBound bound;
    if (const char* env = std::getenv("MACROBOX_MAX_N")) {
      char* end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 1) throw DomainError(std::string("invalid MACROBOX_MAX_N '") + env + "'");
      bound.max_n = static_cast<int>(v);
    }
    return bound;
  }
};

/// Per-particle settings i_1..i_N (Alice) and j_1..j_N (Bob).
struct SettingAssignment {
  std::vector<int> alice;
  std::vector<int> bob;

  static SettingAssignment uniform(int n, int i, int j) {
    return {std::vector<int>(static_cast<std::size_t>(n), i), std::vector<int>(static_cast<std::size_t>(n), j)};
  }
};

struct OutcomeAssignment {
  std::vector<Outcome> alice;
  std::vector<Outcome> bob;
};

/// A particle on one side measured at a given setting. Particles are
/// numbered 0..N-1 on each side; particle k of Alice and particle k of Bob
/// form pair k.
struct ParticleSetting {
  Side side;
  int particle;
  int setting;
};

/// Ordered list of particles to keep in a marginal; the order fixes the slot
/// order of the resulting Distribution.
using MarginalSpec = std::vector<ParticleSetting>;

/// One entry of an explicitly supplied joint table.
struct JointEntry {
  SettingAssignment settings;
  OutcomeAssignment outcomes;
  Rational p;
};

/// Microscopic model of N pairs. Either N independent copies of one box or
/// an explicit joint table over all setting and outcome assignments.
class EnsembleModel {
 public:
  struct IndependentPairs {
    PairBox box;
  };
  struct ExplicitJoint {
    // (setting index, outcome index) -> probability; omitted keys are zero.
    std::map<std::pair<std::uint64_t, std::uint64_t>, Rational> entries;
  };

  int pairs() const { return n_; }
  int settings_a() const { return s_a_; }
  int settings_b() const { return s_b_; }
  int settings(Side side) const { return side == Side::Alice ? s_a_ : s_b_; }

  /// The shared box of an independent-pairs model, otherwise nullptr.
  const PairBox* pair_box() const {
    const auto* ip = std::get_if<IndependentPairs>(&kind_);
    return ip ? &ip->box : nullptr;
  }
  const ExplicitJoint* explicit_table() const { return std::get_if<ExplicitJoint>(&kind_); }

  std::uint64_t setting_assignments() const { return setting_count_; }

  std::uint64_t settings_index(const SettingAssignment& s) const {
    check_dims(s.alice.size(), s.bob.size());
    std::uint64_t idx = 0;
    for (int k = n_ - 1; k >= 0; --k) {
      int b = s.bob[static_cast<std::size_t>(k)];
      if (b < 0 || b >= s_b_) throw DomainError("Bob setting " + std::to_string(b) + " out of range");
      idx = idx * static_cast<std::uint64_t>(s_b_) + static_cast<std::uint64_t>(b);
    }
    for (int k = n_ - 1; k >= 0; --k) {
      int a = s.alice[static_cast<std::size_t>(k)];
      if (a < 0 || a >= s_a_) throw DomainError("Alice setting " + std::to_string(a) + " out of range");
      idx = idx * static_cast<std::uint64_t>(s_a_) + static_cast<std::uint64_t>(a);
    }
    return idx;
  }

  SettingAssignment settings_from_index(std::uint64_t idx) const {
    SettingAssignment s{std::vector<int>(static_cast<std::size_t>(n_)), std::vector<int>(static_cast<std::size_t>(n_))};
    for (int k = 0; k < n_; ++k) {
      s.alice[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::uint64_t>(s_a_));
      idx /= static_cast<std::uint64_t>(s_a_);
    }
    for (int k = 0; k < n_; ++k) {
      s.bob[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::uint64_t>(s_b_));
      idx /= static_cast<std::uint64_t>(s_b_);
    }
    return s;
  }

  /// Bit k is Alice's particle k, bit N+k is Bob's particle k; a set bit is -1.
  std::uint64_t outcome_index(const OutcomeAssignment& o) const {
    check_dims(o.alice.size(), o.bob.size());
    std::uint64_t idx = 0;
    for (int k = 0; k < n_; ++k) {
      if (o.alice[static_cast<std::size_t>(k)] == Outcome::Minus) idx |= std::uint64_t{1} << k;
      if (o.bob[static_cast<std::size_t>(k)] == Outcome::Minus) idx |= std::uint64_t{1} << (n_ + k);
    }
    return idx;
  }

  OutcomeAssignment outcomes_from_index(std::uint64_t idx) const {
    OutcomeAssignment o;
    for (int k = 0; k < n_; ++k) o.alice.push_back(outcome_from_index(static_cast<int>((idx >> k) & 1U)));
    for (int k = 0; k < n_; ++k) o.bob.push_back(outcome_from_index(static_cast<int>((idx >> (n_ + k)) & 1U)));
    return o;
  }

  friend EnsembleModel independent_pairs(const PairBox& box, int n);
  friend EnsembleModel explicit_joint(int n, int s_a, int s_b, const std::vector<JointEntry>& entries);

 private:
  EnsembleModel(int n, int s_a, int s_b, std::variant<IndependentPairs, ExplicitJoint> kind)
      : n_(n), s_a_(s_a), s_b_(s_b), kind_(std::move(kind)) {
    long double count = 1;
    for (int k = 0; k < n; ++k) count *= static_cast<long double>(s_a) * static_cast<long double>(s_b);
    setting_count_ = count < 1.8e19L ? static_cast<std::uint64_t>(count) : std::numeric_limits<std::uint64_t>::max();
  }

  void check_dims(std::size_t a, std::size_t b) const {
    if (a != static_cast<std::size_t>(n_) || b != static_cast<std::size_t>(n_))
      throw DomainError("assignment has " + std::to_string(a) + "+" + std::to_string(b) + " entries, model has N=" +
                        std::to_string(n_));
  }

  int n_;
  int s_a_;
  int s_b_;
  std::uint64_t setting_count_ = 0;
  std::variant<IndependentPairs, ExplicitJoint> kind_;
};

/// N independent copies of `box`. The box must be normalized and
/// nonnegative; signalling boxes are accepted and reported by
/// check_no_signalling.
inline EnsembleModel independent_pairs(const PairBox& box, int n) {
  if (n < 1) throw DomainError("an ensemble needs N >= 1 pairs, got N=" + std::to_string(n));
  for (const auto& v : validate_pairbox(box).violations)
    if (v.kind != Violation::Kind::NoSignalling)
      throw ConstructionError(std::string("pair box fails ") + kind_name(v.kind) + " at " + v.where);
  return EnsembleModel(n, box.settings_a(), box.settings_b(), EnsembleModel::IndependentPairs{box});
}

inline std::string describe(const SettingAssignment& s) {
  std::string out = "(";
  for (std::size_t k = 0; k < s.alice.size(); ++k) out += (k ? "," : "") + std::to_string(s.alice[k]);
  out += ";";
  for (std::size_t k = 0; k < s.bob.size(); ++k) out += (k ? "," : "") + std::to_string(s.bob[k]);
  return out + ")";
}

/// Wraps an arbitrary joint table. Every setting assignment must carry a
/// normalized nonnegative outcome distribution; omitted entries are zero.
inline EnsembleModel explicit_joint(int n, int s_a, int s_b, const std::vector<JointEntry>& entries) {
  if (n < 1) throw DomainError("an ensemble needs N >= 1 pairs, got N=" + std::to_string(n));
  if (s_a < 1 || s_b < 1) throw DomainError("setting counts must be positive");
  if (2 * n > 62) throw DomainError("explicit joint tables support at most N=31");
  if (entries.empty()) throw ConstructionError("explicit joint table is empty");
  EnsembleModel::ExplicitJoint table;
  EnsembleModel model(n, s_a, s_b, EnsembleModel::ExplicitJoint{});
  for (const auto& e : entries) {
    auto key = std::make_pair(model.settings_index(e.settings), model.outcome_index(e.outcomes));
    if (e.p.sign() < 0)
      throw ConstructionError("negative probability " + e.p.str() + " at settings " + describe(e.settings));
    if (!table.entries.emplace(key, e.p).second)
      throw ConstructionError("duplicate entry at settings " + describe(e.settings));
  }
  for (std::uint64_t sidx = 0; sidx < model.setting_assignments(); ++sidx) {
    Rational total;
    for (auto it = table.entries.lower_bound({sidx, 0}); it != table.entries.end() && it->first.first == sidx; ++it)
      total += it->second;
    if (total != Rational(1))
      throw ConstructionError("outcome distribution for settings " + describe(model.settings_from_index(sidx)) +
                              " sums to " + total.str());
  }
  return EnsembleModel(n, s_a, s_b, std::move(table));
}

/// p(x_{i_1}^{(1)}, ..., x_{i_N}^{(N)}; y_{j_1}^{(1)}, ..., y_{j_N}^{(N)}).
inline Rational joint_probability(const EnsembleModel& model, const SettingAssignment& s, const OutcomeAssignment& o) {
  if (const PairBox* box = model.pair_box()) {
    std::uint64_t check = model.settings_index(s);
    (void)check;
    if (o.alice.size() != s.alice.size() || o.bob.size() != s.bob.size())
      throw DomainError("outcome and setting assignments differ in length");
    Rational p(1);
    for (std::size_t k = 0; k < s.alice.size(); ++k) {
      p *= (*box)(s.alice[k], s.bob[k], o.alice[k], o.bob[k]);
      if (p.is_zero()) break;
    }
    return p;
  }
  const auto& entries = model.explicit_table()->entries;
  auto it = entries.find({model.settings_index(s), model.outcome_index(o)});
  return it == entries.end() ? Rational(0) : it->second;
}

namespace detail {

inline void validate_spec(const EnsembleModel& model, const MarginalSpec& spec) {
  std::set<std::pair<int, int>> seen;
  for (const auto& ps : spec) {
    if (ps.particle < 0 || ps.particle >= model.pairs())
      throw DomainError(std::string("particle ") + side_name(ps.side) + std::to_string(ps.particle) +
                        " out of range for N=" + std::to_string(model.pairs()));
    if (ps.setting < 0 || ps.setting >= model.settings(ps.side))
      throw DomainError(std::string("setting ") + std::to_string(ps.setting) + " out of range for side " +
                        side_name(ps.side));
    if (!seen.emplace(ps.side == Side::Alice ? 0 : 1, ps.particle).second)
      throw DomainError(std::string("particle ") + side_name(ps.side) + std::to_string(ps.particle) +
                        " listed twice in marginal");
  }
}

/// Marginal of an independent-pairs model with unlisted partners at the
/// given completion settings. Built as a tensor product of per-pair factors.
inline Distribution factorized_marginal(const PairBox& box, const MarginalSpec& spec, int completion_a,
                                        int completion_b) {
  const std::size_t m = spec.size();
  // pair -> (alice slot, bob slot)
  std::map<int, std::pair<int, int>> by_pair;
  for (std::size_t t = 0; t < m; ++t) {
    auto& entry = by_pair.try_emplace(spec[t].particle, -1, -1).first->second;
    (spec[t].side == Side::Alice ? entry.first : entry.second) = static_cast<int>(t);
  }
  Distribution out(m);
  std::vector<std::pair<std::size_t, Rational>> partial{{0, Rational(1)}};
  std::vector<std::pair<std::size_t, Rational>> next;
  for (const auto& [pair, slots] : by_pair) {
    auto [ta, tb] = slots;
    next.clear();
    for (Outcome x : kOutcomes) {
      for (Outcome y : kOutcomes) {
        if (ta < 0 && x == Outcome::Minus) continue;
        if (tb < 0 && y == Outcome::Minus) continue;
        Rational f;
        std::size_t bits = 0;
        if (ta >= 0 && tb >= 0) {
          f = box(spec[static_cast<std::size_t>(ta)].setting, spec[static_cast<std::size_t>(tb)].setting, x, y);
        } else if (ta >= 0) {
          f = box.alice_marginal(spec[static_cast<std::size_t>(ta)].setting, x, completion_b);
        } else {
          f = box.bob_marginal(spec[static_cast<std::size_t>(tb)].setting, y, completion_a);
        }
        if (f.is_zero()) continue;
        if (ta >= 0 && x == Outcome::Minus) bits |= out.slot_bit(static_cast<std::size_t>(ta));
        if (tb >= 0 && y == Outcome::Minus) bits |= out.slot_bit(static_cast<std::size_t>(tb));
        for (const auto& [idx, v] : partial) next.emplace_back(idx | bits, v * f);
      }
    }
    partial.swap(next);
  }
  for (auto& [idx, v] : partial) out[idx] += v;
  return out;
}

inline Distribution explicit_marginal(const EnsembleModel& model, const MarginalSpec& spec, int completion_a,
                                      int completion_b) {
  const int n = model.pairs();
  SettingAssignment s = SettingAssignment::uniform(n, completion_a, completion_b);
  std::vector<int> bit_of_slot;
  for (const auto& ps : spec) {
    (ps.side == Side::Alice ? s.alice : s.bob)[static_cast<std::size_t>(ps.particle)] = ps.setting;
    bit_of_slot.push_back(ps.side == Side::Alice ? ps.particle : n + ps.particle);
  }
  Distribution out(spec.size());
  const auto& entries = model.explicit_table()->entries;
  std::uint64_t sidx = model.settings_index(s);
  for (auto it = entries.lower_bound({sidx, 0}); it != entries.end() && it->first.first == sidx; ++it) {
    std::size_t o = 0;
    for (int bit : bit_of_slot) o = (o << 1) | ((it->first.second >> bit) & 1U);
    out[o] += it->second;
  }
  return out;
}

}  // namespace detail

/// Exact marginal over the listed particles. Unlisted particles are summed
/// out under two distinct setting completions (all-lowest and all-highest
/// setting); a disagreement raises SignallingError.
inline Distribution marginal(const EnsembleModel& model, const MarginalSpec& spec) {
  detail::validate_spec(model, spec);
  auto compute = [&](int ca, int cb) {
    if (const PairBox* box = model.pair_box()) return detail::factorized_marginal(*box, spec, ca, cb);
    return detail::explicit_marginal(model, spec, ca, cb);
  };
  const int last_a = model.settings_a() - 1;
  const int last_b = model.settings_b() - 1;
  Distribution first = compute(0, 0);
  if (last_a == 0 && last_b == 0) return first;
  if (spec.size() == 2 * static_cast<std::size_t>(model.pairs())) return first;
  Distribution second = compute(last_a, last_b);
  if (first != second) {
    std::size_t idx = 0;
    while (first[idx] == second[idx]) ++idx;
    std::string listed;
    for (const auto& ps : spec)
      listed += std::string(listed.empty() ? "" : ",") + side_name(ps.side) + std::to_string(ps.particle) + "@" +
                std::to_string(ps.setting);
    throw SignallingError("marginal {" + listed + "} at " + first.label(idx, spec.size()) +
                              " depends on the settings of unlisted particles: " + first[idx].str() + " vs " +
                              second[idx].str(),
                          first[idx].str(), second[idx].str());
  }
  return first;
}

struct NoSignallingOptions {
  bool exhaustive = false;
  DeskBound bound{};
};

/// Compares, for every particle and every pair of its settings, the joint
/// marginal of all other particles. Violations are grouped per
/// (particle, setting pair); `occurrences` counts failing contexts.
///
/// Independent-pairs models reduce exactly to the single-box check unless
/// `exhaustive` is set. The exhaustive route costs
/// O(2N * s^2 * s^(2N-1) * 4^N) joint-probability evaluations.
inline ValidationReport check_no_signalling(const EnsembleModel& model, const NoSignallingOptions& options = {}) {
  ValidationReport report;
  const int n = model.pairs();
  if (const PairBox* box = model.pair_box(); box && !options.exhaustive) {
    // A box-level violation p(x|i) depending on j is signalling from each
    // Bob particle to its partner, and vice versa.
    for (const auto& v : validate_pairbox(*box).violations) {
      if (v.kind != Violation::Kind::NoSignalling) continue;
      const bool alice_marginal = v.where.rfind("p(x", 0) == 0;
      for (int k = 0; k < n; ++k)
        report.violations.push_back({Violation::Kind::NoSignalling,
                                     std::string("particle ") + (alice_marginal ? "B" : "A") + std::to_string(k) +
                                         ": " + v.where,
                                     v.residual});
    }
    return report;
  }
  options.bound.check(n, "exhaustive no-signalling check");
  const std::uint64_t outcome_count = std::uint64_t{1} << (2 * n);
  for (int p = 0; p < 2 * n; ++p) {
    const Side side = p < n ? Side::Alice : Side::Bob;
    const int particle = p < n ? p : p - n;
    const int s_count = model.settings(side);
    for (int s1 = 0; s1 < s_count; ++s1) {
      for (int s2 = s1 + 1; s2 < s_count; ++s2) {
        std::optional<Violation> grouped;
        for (std::uint64_t sidx = 0; sidx < model.setting_assignments(); ++sidx) {
          SettingAssignment ctx = model.settings_from_index(sidx);
          auto& slot = (side == Side::Alice ? ctx.alice : ctx.bob)[static_cast<std::size_t>(particle)];
          if (slot != s1) continue;
          SettingAssignment other = ctx;
          (side == Side::Alice ? other.alice : other.bob)[static_cast<std::size_t>(particle)] = s2;
          for (std::uint64_t oidx = 0; oidx < outcome_count; ++oidx) {
            if ((oidx >> p) & 1U) continue;
            OutcomeAssignment plus = model.outcomes_from_index(oidx);
            OutcomeAssignment minus = model.outcomes_from_index(oidx | (std::uint64_t{1} << p));
            Rational lhs = joint_probability(model, ctx, plus) + joint_probability(model, ctx, minus);
            Rational rhs = joint_probability(model, other, plus) + joint_probability(model, other, minus);
            if (lhs == rhs) continue;
            if (!grouped) {
              grouped = Violation{Violation::Kind::NoSignalling,
                                  std::string("particle ") + side_name(side) + std::to_string(particle) + " setting " +
                                      std::to_string(s1) + " vs " + std::to_string(s2) + " in context " +
                                      describe(ctx),
                                  lhs - rhs, 0};
            }
            ++grouped->occurrences;
            break;
          }
        }
        if (grouped) report.violations.push_back(*grouped);
      }
    }
  }
  return report;
}

}  // namespace macrobox
