#include <gtest/gtest.h>

#include "macrobox/io.hpp"

using namespace macrobox;
using O = Outcome;

TEST(PairBoxJson, RoundTrip) {
  for (const PairBox& box : {make_pr_box(), make_isotropic_box(Rational(3, 4)),
                             make_deterministic_box(O::Plus, O::Minus, O::Minus, O::Plus)}) {
    const io::Json j = io::to_json(box);
    EXPECT_EQ(io::pairbox_from_json(j), box);
    EXPECT_EQ(io::pairbox_from_json(io::Json::parse(j.dump())), box);
  }
}

TEST(PairBoxJson, RejectsMalformed) {
  EXPECT_THROW(io::pairbox_from_json(io::Json::parse(R"({"s_a":2,"s_b":2})")), DomainError);
  EXPECT_THROW(io::pairbox_from_json(io::Json::parse(R"({"s_a":2,"s_b":2,"table":[[0,0,1,1,0.5]]})")), DomainError);
  EXPECT_THROW(io::pairbox_from_json(io::Json::parse(R"({"s_a":2,"s_b":2,"table":[[0,0,2,1,"1/2"]]})")), DomainError);
}

TEST(JpdJson, ByteIdenticalRoundTrip) {
  const auto jpd = jpd_averages(independent_pairs(make_pr_box(), 3));
  const std::string once = io::to_json(jpd).dump(2);
  const auto back = io::jpd_from_json(io::Json::parse(once));
  EXPECT_EQ(back.dist, jpd.dist);
  EXPECT_TRUE(back.schema == jpd.schema);
  EXPECT_EQ(io::to_json(back).dump(2), once);
}

TEST(JpdJson, LabelsUseSideSeparator) {
  const auto jpd = jpd_averages(independent_pairs(make_pr_box(), 2));
  const io::Json j = io::to_json(jpd);
  EXPECT_EQ(j["entries"][0]["outcomes"], "(+,+;+,+)");
  EXPECT_EQ(j["entries"][0]["p"], "1/8");
  EXPECT_EQ(j["entries"][3]["outcomes"], "(+,+;-,-)");
  EXPECT_EQ(j["entries"][3]["p"], "0/1");
  EXPECT_EQ(io::parse_label("(-,+;+,-)", 4, 2), 9U);
  EXPECT_THROW(io::parse_label("(-,+,+,-)", 4, 2), DomainError);
  EXPECT_THROW(io::parse_label("(-,+;+)", 4, 2), DomainError);
}

TEST(DistributionCsv, HeaderAndOrder) {
  const auto d = macro_distribution_bruteforce(independent_pairs(make_pr_box(), 1), 0, 0);
  EXPECT_EQ(io::to_csv(d), "X,Y,p\n-1,-1,1/2\n-1,1,0/1\n1,-1,0/1\n1,1,1/2\n");
}

TEST(ModelJson, ExplicitTableRoundTrip) {
  const auto m = independent_pairs(make_isotropic_box(Rational(1, 2)), 2);
  const io::Json j = io::to_json(m);
  const auto ex = io::model_from_json(j, 2);
  ASSERT_NE(ex.explicit_table(), nullptr);
  EXPECT_EQ(effective_pair(ex), effective_pair(m));
  EXPECT_EQ(io::to_json(ex).dump(), j.dump());
  EXPECT_THROW(io::model_from_json(j, 3), DomainError);
}

TEST(ModelJson, PairBoxDocumentIsReplicated) {
  const auto m = io::model_from_json(io::to_json(make_pr_box()), 4);
  ASSERT_NE(m.pair_box(), nullptr);
  EXPECT_EQ(m.pairs(), 4);
  EXPECT_THROW(io::model_from_json(io::Json::parse("{}"), 4), DomainError);
}

TEST(ReportJson, GisinEigenvaluesUseTwelveDigits) {
  const auto g = gisin_matrix(independent_pairs(make_pr_box(), 4));
  const io::Json j = io::to_json(g);
  EXPECT_EQ(j["eigenvalues"][0], "-1.65685424949");
  EXPECT_EQ(j["matrix"][0][2], "4/1");
}
