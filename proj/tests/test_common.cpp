#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "editorch/common.hpp"
#include "editorch/vocab.hpp"

using namespace editorch;

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Seeds, DeriveIsOrderSensitiveAndStable) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  EXPECT_NE(derive_seed_str(7, "train"), derive_seed_str(7, "test"));
}

TEST(Rng, UniformRangeAndReproducibility) {
  Rng a(42), b(42);
  double sum = 0;
  for (int i = 0; i < 10000; ++i) {
    const double u = a.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    EXPECT_EQ(u, b.uniform());
    sum += u;
  }
  EXPECT_NEAR(sum / 10000, 0.5, 0.02);
}

TEST(Rng, BernoulliEdgesAndBelow) {
  Rng r(3);
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(r.bernoulli(1.0));
    EXPECT_FALSE(r.bernoulli(0.0));
    EXPECT_LT(r.below(7), 7u);
  }
  EXPECT_EQ(r.below(0), 0u);
}

TEST(Rng, LogisticIsSymmetric) {
  Rng r(9);
  double sum = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) sum += r.logistic();
  EXPECT_NEAR(sum / n, 0.0, 0.05);
}

TEST(CanonicalDump, SortedCompact) {
  const json j = json::parse(R"({"b":1,"a":{"d":[1,2],"c":true}})");
  EXPECT_EQ(canonical_dump(j), R"({"a":{"c":true,"d":[1,2]},"b":1})");
}

TEST(ErrorType, CarriesCodeAndPath) {
  const Error e(ErrorCode::Schema, "bad", "arguments.region_number");
  EXPECT_EQ(e.code(), ErrorCode::Schema);
  EXPECT_EQ(e.path(), "arguments.region_number");
  EXPECT_NE(std::string(e.what()).find("arguments.region_number"), std::string::npos);
}

TEST(Vocabulary, SizesAndUniqueness) {
  const auto& v = Vocabulary::plan();
  EXPECT_EQ(vocab::verbs().size(), 10u);
  EXPECT_EQ(vocab::relations().size(), 6u);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_TRUE(seen.insert(v.token(static_cast<TokenId>(i))).second);
  EXPECT_EQ(v.size(), 91u);
  EXPECT_EQ(v.token(v.id("lamp")), "lamp");
  EXPECT_FALSE(v.find("unicorn").has_value());
  EXPECT_THROW(v.id("unicorn"), Error);
  for (auto t : vocab::labels()) EXPECT_LE(t.size(), 64u);
}
