#include <gtest/gtest.h>

#include <random>

#include "macrobox/pr_closed_form.hpp"
#include "macrobox/symmetry.hpp"
#include "oracle.hpp"

using namespace macrobox;
using O = Outcome;

namespace {

EnsembleModel pr_model(int n) { return independent_pairs(make_pr_box(), n); }

void expect_same(const Distribution& d, const std::vector<Rational>& ref) {
  ASSERT_EQ(d.size(), ref.size());
  for (std::size_t idx = 0; idx < ref.size(); ++idx) EXPECT_EQ(d[idx], ref[idx]) << "entry " << idx;
}

}  // namespace

TEST(EffectivePair, PrExamples) {
  const PairBox eff = effective_pair(pr_model(2));
  EXPECT_EQ(eff(0, 0, O::Plus, O::Plus), Rational(3, 8));
  EXPECT_EQ(eff(0, 0, O::Plus, O::Minus), Rational(1, 8));
  EXPECT_EQ(eff(1, 1, O::Plus, O::Minus), Rational(3, 8));
  EXPECT_EQ(effective_pair(pr_model(1)), make_pr_box());
}

TEST(EffectivePair, PrClosedForm) {
  for (int n = 1; n <= 10; ++n) {
    const PairBox eff = effective_pair(pr_model(n));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (O x : kOutcomes)
          for (O y : kOutcomes) EXPECT_EQ(eff(i, j, x, y), pr::effective_probability(n, i, j, x, y));
    EXPECT_TRUE(validate_pairbox(eff).ok());
    EXPECT_EQ(chsh_value(eff), Rational(4, n));
  }
}

TEST(EffectivePair, IsotropicMixingIdentity) {
  // Uniform marginals make the effective box isotropic with E/N.
  for (const Rational& e : {Rational(0), Rational(1, 2), Rational(3, 4), Rational(-1)})
    for (int n = 1; n <= 6; ++n) EXPECT_EQ(effective_pair(independent_pairs(make_isotropic_box(e), n)), make_isotropic_box(e / Rational(n)));
}

TEST(EffectivePair, DeterministicBoxIsFixed) {
  const PairBox det = make_deterministic_box(O::Plus, O::Minus, O::Minus, O::Plus);
  EXPECT_EQ(effective_pair(independent_pairs(det, 5)), det);
}

TEST(Symmetrize, AutoEnumerateAndOracleAgree) {
  std::mt19937 rng(3);
  const std::vector<std::pair<std::vector<int>, std::vector<int>>> shapes{
      {{0}, {1}}, {{0, 1}, {1}}, {{1, 1}, {0, 0}}, {{0, 1}, {0, 1}}, {{0, 0, 1}, {1}}, {{}, {0, 1}}};
  for (int trial = 0; trial < 6; ++trial) {
    const PairBox box = oracle::random_box(rng);
    for (int n = 3; n <= 4; ++n) {
      const auto m = independent_pairs(box, n);
      for (const auto& [sa, sb] : shapes) {
        const Distribution fast = symmetrized_marginal(m, sa, sb);
        EXPECT_EQ(fast, symmetrized_marginal(m, sa, sb, Symmetrization::Enumerate));
        expect_same(fast, oracle::symmetrized(box, n, sa, sb));
        EXPECT_EQ(fast.sum(), Rational(1));
      }
    }
  }
}

TEST(Symmetrize, TooManySlots) {
  const std::vector<int> three{0, 0, 0}, one{0};
  EXPECT_THROW(symmetrized_marginal(pr_model(2), three, one), DomainError);
}

TEST(Symmetrize, SlotPermutationInvariance) {
  const auto m = independent_pairs(make_isotropic_box(Rational(3, 4)), 5);
  const std::vector<int> sa{0, 1, 1}, sb{1, 0};
  const Distribution d = symmetrized_marginal(m, sa, sb);
  // Swapping the two setting-1 Alice slots leaves the distribution unchanged.
  const std::vector<std::size_t> order{0, 2, 1, 3, 4};
  EXPECT_EQ(d.marginal(order), d);
  // Reordering Alice slots with different settings permutes the result.
  const std::vector<int> sa_perm{1, 0, 1};
  const std::vector<std::size_t> back{1, 0, 2, 3, 4};
  EXPECT_EQ(symmetrized_marginal(m, sa_perm, sb).marginal(back), d);
}

TEST(EffectiveQuad, PrExamplesAtN3) {
  const auto quad = effective_quad(pr_model(3));
  const Distribution& d = quad.at(0, 0);
  EXPECT_EQ(d.at({O::Plus, O::Minus, O::Plus, O::Minus}), Rational(1, 12));
  EXPECT_EQ(d.at({O::Plus, O::Plus, O::Minus, O::Minus}), Rational(0));
  EXPECT_EQ(d.at({O::Plus, O::Plus, O::Plus, O::Plus}), Rational(1, 6));
  EXPECT_EQ(d.at({O::Plus, O::Plus, O::Plus, O::Minus}), Rational(1, 24));
  EXPECT_EQ(quad.at(1, 1).at({O::Plus, O::Plus, O::Plus, O::Plus}), Rational(0));
}

TEST(EffectiveQuad, PrClosedForms) {
  for (int n = 2; n <= 8; ++n) {
    const auto quad = effective_quad(pr_model(n));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const Distribution& d = quad.at(i, j);
        for (std::size_t idx = 0; idx < 16; ++idx) {
          const auto c = pr::quad_class(i, j, d.outcome(idx, 0), d.outcome(idx, 1), d.outcome(idx, 2), d.outcome(idx, 3));
          EXPECT_EQ(d[idx], pr::quad_value(n, c)) << "N=" << n << " " << d.label(idx, 2);
        }
        EXPECT_EQ(d.correlator(), pr::quad_correlator(n));
      }
  }
}

TEST(EffectiveQuad, SwapSymmetryAndSingleMarginals) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = independent_pairs(oracle::random_box(rng), 4);
    const auto quad = effective_quad(m);
    const PairBox eff = effective_pair(m);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const Distribution& d = quad.at(i, j);
        const std::vector<std::size_t> swap_a{1, 0, 2, 3}, swap_b{0, 1, 3, 2};
        EXPECT_EQ(d.marginal(swap_a), d);
        EXPECT_EQ(d.marginal(swap_b), d);
        const std::vector<std::size_t> first{0, 2}, cross{1, 2};
        for (const auto& keep : {first, cross}) {
          const Distribution pair = d.marginal(keep);
          for (O x : kOutcomes)
            for (O y : kOutcomes) EXPECT_EQ(pair.at({x, y}), eff(i, j, x, y));
        }
      }
  }
}

TEST(EffectiveCorrelator, MatchesQuadAndPair) {
  const auto m = pr_model(6);
  EXPECT_EQ(effective_correlator(m, 1, 1, 0, 0), Rational(1));
  EXPECT_EQ(effective_correlator(m, 0, 0, 1, 1), Rational(1, 6));
  EXPECT_EQ(effective_correlator(m, 1, 1, 1, 1), Rational(-1, 6));
  EXPECT_EQ(effective_correlator(m, 0, 1, 2, 2), pr::quad_correlator(6));
  EXPECT_EQ(effective_correlator(m, 0, 0, 1, 0), Rational(0));
  EXPECT_THROW(effective_correlator(m, 0, 0, 7, 0), DomainError);
}

TEST(JpdAverages, PrClosedForm) {
  for (int n = 2; n <= 8; ++n) {
    const auto jpd = jpd_averages(pr_model(n));
    const auto closed = pr::averages_jpd(n);
    EXPECT_EQ(jpd.dist, closed.dist) << "N=" << n;
    EXPECT_TRUE(jpd.schema == closed.schema);
    EXPECT_TRUE(jpd.valid);
    int plus = 0;
    for (const auto& v : jpd.dist.values()) plus += v == pr::omega_plus(n) ? 1 : 0;
    EXPECT_EQ(plus, 8);
  }
}

TEST(JpdAverages, PrPairMarginals) {
  for (int n = 2; n <= 6; ++n) {
    const auto jpd = jpd_averages(pr_model(n));
    const Distribution d = jpd_marginal(jpd, {{Side::Alice, 1}, {Side::Bob, 1}});
    EXPECT_EQ(d.at({O::Plus, O::Minus}), Rational(n + 1, 4 * n));
    EXPECT_EQ(d.at({O::Plus, O::Plus}), Rational(n - 1, 4 * n));
    const Distribution e = jpd_marginal(jpd, {{Side::Alice, 0}, {Side::Bob, 1}});
    EXPECT_EQ(e.at({O::Minus, O::Minus}), Rational(n + 1, 4 * n));
  }
}

TEST(JpdAverages, ClosedFormAtN1IsInvalid) {
  const auto jpd = pr::averages_jpd(1);
  EXPECT_FALSE(jpd.valid);
  EXPECT_EQ(jpd.dist.at({O::Plus, O::Plus, O::Minus, O::Minus}), Rational(-1, 16));
  const auto v = jpd_validity(jpd);
  EXPECT_TRUE(v.normalized);
  EXPECT_EQ(v.negative_entries.size(), 8U);
  EXPECT_THROW(jpd_averages(pr_model(1)), DomainError);
}

TEST(JpdAverages, MarginalIdentityForBuiltins) {
  for (const PairBox& box : oracle::builtin_boxes())
    for (int n = 2; n <= 5; ++n) {
      const auto m = independent_pairs(box, n);
      const auto jpd = jpd_averages(m);
      const PairBox eff = effective_pair(m);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const Distribution d = jpd_marginal(jpd, {{Side::Alice, i}, {Side::Bob, j}});
          for (O x : kOutcomes)
            for (O y : kOutcomes) EXPECT_EQ(d.at({x, y}), eff(i, j, x, y));
        }
    }
}

TEST(JpdGeneral, K1IsAverages) {
  const auto m = independent_pairs(make_isotropic_box(Rational(1, 2)), 4);
  const auto a = jpd_general(m, 1);
  const auto b = jpd_averages(m);
  EXPECT_EQ(a.dist, b.dist);
  EXPECT_TRUE(a.schema == b.schema);
}

TEST(JpdGeneral, K2IsFluctuations) {
  const auto m = pr_model(4);
  EXPECT_EQ(jpd_general(m, 2).dist, jpd_fluctuations(m).dist);
  try {
    jpd_general(pr_model(5), 3);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("k*s_A=6"), std::string::npos) << e.what();
  }
}

TEST(JpdGeneral, K3ReducesToQuad) {
  const auto m = pr_model(6);
  const auto jpd = jpd_general(m, 3);
  EXPECT_EQ(jpd.dist.size(), std::size_t{1} << 12);
  EXPECT_EQ(jpd.dist.sum(), Rational(1));
  const auto quad = effective_quad(m);
  const Distribution d = jpd_marginal(jpd, {{Side::Alice, 1, 0}, {Side::Alice, 1, 2}, {Side::Bob, 0, 1}, {Side::Bob, 0, 0}});
  EXPECT_EQ(d, quad.at(1, 0));
}

TEST(JpdFluctuations, PrMarginalsAndValidity) {
  for (int n = 4; n <= 6; ++n) {
    const auto jpd = jpd_fluctuations(pr_model(n));
    EXPECT_TRUE(jpd_validity(jpd).valid());
    EXPECT_TRUE(jpd.valid);
    const auto quad = effective_quad(pr_model(n));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        EXPECT_EQ(jpd_marginal(jpd, {{Side::Alice, i, 0}, {Side::Alice, i, 1}, {Side::Bob, j, 0}, {Side::Bob, j, 1}}),
                  quad.at(i, j));
  }
  EXPECT_THROW(jpd_fluctuations(pr_model(3)), DomainError);
}

TEST(JpdFluctuations, SlotCopiesAreExchangeable) {
  const auto jpd = jpd_fluctuations(independent_pairs(make_isotropic_box(Rational(3, 4)), 4));
  const std::vector<std::size_t> swapped{1, 0, 2, 3, 4, 5, 7, 6};
  EXPECT_EQ(jpd.dist.marginal(swapped), jpd.dist);
}

TEST(SlotSchema, PositionLookup) {
  SlotSchema s{{{0, 2}, {1, 2}}, {{0, 2}, {1, 2}}};
  EXPECT_EQ(s.total_slots(), 8U);
  EXPECT_EQ(s.position({Side::Alice, 1, 1}), 3U);
  EXPECT_EQ(s.position({Side::Bob, 0, 0}), 4U);
  EXPECT_THROW(s.position({Side::Bob, 2, 0}), DomainError);
  EXPECT_THROW(s.position({Side::Alice, 0, 2}), DomainError);
}

TEST(ExplicitModel, SymmetrizationMatchesIndependentPairs) {
  const auto m = independent_pairs(make_isotropic_box(Rational(1, 2)), 2);
  std::vector<JointEntry> entries;
  for (std::uint64_t s = 0; s < m.setting_assignments(); ++s)
    for (std::uint64_t o = 0; o < 16; ++o) {
      const auto sa = m.settings_from_index(s);
      const auto oa = m.outcomes_from_index(o);
      Rational p = joint_probability(m, sa, oa);
      if (!p.is_zero()) entries.push_back({sa, oa, p});
    }
  const auto ex = explicit_joint(2, 2, 2, entries);
  EXPECT_EQ(effective_pair(ex), effective_pair(m));
  EXPECT_EQ(jpd_averages(ex).dist, jpd_averages(m).dist);
}
