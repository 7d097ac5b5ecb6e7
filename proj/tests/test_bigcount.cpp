// Exact/log-domain count representation and its demotion contract.
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <branchsim/bigcount.hpp>

namespace branchsim {
namespace {

TEST(BigCount, ExactAccumulation) {
  BigCount c;
  EXPECT_TRUE(c.is_zero());
  for (int i = 0; i < 1000; ++i) c += BigCount(3);
  ASSERT_TRUE(c.is_exact());
  EXPECT_EQ(c.exact_value(), 3000);
  EXPECT_EQ(c.to_string(), "3000");
  EXPECT_NEAR(c.log_value(), std::log(3000.0), 1e-14);
}

TEST(BigCount, MersenneGrowthStaysExact) {
  // counts 2^J - 1 via doubling-plus-one, as the engines produce them.
  BigCount c(1);
  for (int j = 2; j <= 200; ++j) c = c + c + BigCount(1);
  ASSERT_TRUE(c.is_exact());
  EXPECT_EQ(c.exact_value(), (BigInt(1) << 200) - 1);
  EXPECT_NEAR(c.log_value(), 200.0 * std::numbers::ln2, 1e-10);
}

TEST(BigCount, DemotionAgreesWithExactWithinTolerance) {
  BigCount small(200, /*bit_budget=*/8);  // 200 < 2^8: still exact
  ASSERT_TRUE(small.is_exact());
  const double before = small.log_value();
  small += BigCount(100);  // 300 needs 9 bits: demoted
  EXPECT_FALSE(small.is_exact());
  EXPECT_NEAR(small.log_value(), std::log(300.0), 1e-12 * std::abs(before) + 1e-12);
  EXPECT_NEAR(small.to_double(), 300.0, 300.0 * 1e-12);
  EXPECT_THROW(small.exact_value(), std::logic_error);
}

TEST(BigCount, LogDomainAddition) {
  const BigCount a = BigCount::from_log(std::log(1e200));
  BigCount b = a;
  b += a;
  EXPECT_NEAR(b.log_value(), std::log(2.0) + std::log(1e200), 1e-12);
  // exact + demoted goes through the log path.
  BigCount c(5);
  c += a;
  EXPECT_FALSE(c.is_exact());
  EXPECT_NEAR(c.log_value(), std::log(1e200), 1e-12);
}

TEST(BigCount, EqualityModes) {
  EXPECT_EQ(BigCount(42), BigCount(42));
  EXPECT_FALSE(BigCount(42) == BigCount(41));
  EXPECT_EQ(BigCount::from_log(1.5), BigCount::from_log(1.5));
}

TEST(BigCount, BigIntConstructorDemotesOversizedInput) {
  const BigInt huge = (BigInt(1) << 400) + 12345;
  const BigCount c(huge, /*bit_budget=*/256);
  EXPECT_FALSE(c.is_exact());
  EXPECT_NEAR(c.log_value(), 400.0 * std::numbers::ln2, 1e-9);
}

TEST(LogOfBigInt, LargeValuesUseTopBits) {
  EXPECT_NEAR(log_of_bigint(BigInt(7)), std::log(7.0), 1e-15);
  const BigInt n = (BigInt(3) << 1000);
  EXPECT_NEAR(log_of_bigint(n), std::log(3.0) + 1000.0 * std::numbers::ln2, 1e-9);
  EXPECT_THROW(log_of_bigint(BigInt(0)), std::domain_error);
}

}  // namespace
}  // namespace branchsim
