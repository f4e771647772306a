#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "tse/compression.hpp"
#include "tse/sim_models.hpp"

namespace {

using tse::CompressedVector;
using tse::FeatureKind;

CompressedVector alpha_of(std::vector<double> values) { return CompressedVector{std::move(values), 1000}; }

TEST(OrderStatistics, SortsAscending) {
  EXPECT_EQ(tse::order_statistics(std::vector{3.0, 1.0, 2.0}), (std::vector{1.0, 2.0, 3.0}));
  EXPECT_EQ(tse::order_statistics(std::vector{5.0}), (std::vector{5.0}));
  EXPECT_THROW(tse::order_statistics(std::vector<double>{}), tse::DomainError);
}

TEST(OrderStatistics, PermutationInvariant) {
  std::mt19937_64 rng(3);
  std::vector<double> y = tse::sample_weibull(257, {2.0, 3.0}, {1, 1});
  const auto reference = tse::order_statistics(y);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(y.begin(), y.end(), rng);
    EXPECT_EQ(tse::order_statistics(y), reference);
  }
}

TEST(SampleQuantile, Examples) {
  const std::vector<double> y{0.0, 10.0};
  EXPECT_EQ(tse::sample_quantile(y, 0.5), 5.0);
  EXPECT_EQ(tse::sample_quantile(y, 1.0), 10.0);

  std::vector<double> grid(101);
  std::iota(grid.begin(), grid.end(), 1.0);
  EXPECT_NEAR(tse::sample_quantile(grid, 0.3), 31.0, 1e-12);
  EXPECT_EQ(tse::sample_quantile(grid, 1.0), 101.0);
}

TEST(SampleQuantile, DomainErrors) {
  const std::vector<double> y{1.0, 2.0, 3.0};
  EXPECT_THROW(tse::sample_quantile(y, 0.0), tse::DomainError);
  EXPECT_THROW(tse::sample_quantile(y, 1.0 + 1e-12), tse::DomainError);
  EXPECT_THROW(tse::sample_quantile(std::vector{1.0}, 0.5), tse::DomainError);
}

TEST(Compress, ConstantData) {
  const std::vector<double> y(50, 4.25);
  const auto alpha = tse::compress(y, 7);
  EXPECT_EQ(alpha.values, std::vector<double>(7, 4.25));
  EXPECT_EQ(alpha.source_size, 50u);
}

TEST(Compress, RequiresMoreObservationsThanQuantiles) {
  EXPECT_THROW(tse::compress(std::vector<double>(10, 1.0), 10), tse::DomainError);
  EXPECT_THROW(tse::compress(std::vector<double>(10, 1.0), 0), tse::DomainError);
  EXPECT_NO_THROW(tse::compress(std::vector<double>(11, 1.0), 10));
}

TEST(Compress, AgreesWithSampleQuantileAtGrid) {
  for (std::size_t size : {11u, 12u, 101u, 1000u, 10007u}) {
    const auto y = tse::sample_weibull(size, {3.0, 1.3}, {4, size});
    const auto sorted = tse::order_statistics(y);
    const auto alpha = tse::compress(y, 10);
    for (std::size_t k = 1; k <= 10; ++k) {
      const double expected = tse::sample_quantile(sorted, static_cast<double>(k) / 10.0);
      EXPECT_NEAR(alpha.values[k - 1], expected, 1e-12 * std::abs(expected)) << "N=" << size << " k=" << k;
    }
    EXPECT_EQ(alpha.values.back(), sorted.back());
  }
}

TEST(Compress, MedianOfLargeSample) {
  const auto y = tse::sample_weibull(1'000'000, {2.0, 2.0}, {8, 0});
  const auto alpha = tse::compress(y, 10);
  EXPECT_NEAR(alpha.values[4] / 1.66511, 1.0, 0.01);
}

TEST(CompressProperty, PermutationInvariantAndMonotone) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t size = 20 + 37 * trial;
    auto y = tse::sample_weibull(size, {1.0 + trial, 0.5 + 0.3 * trial}, {99, static_cast<std::uint64_t>(trial)});
    const std::size_t n = 1 + trial % 12;
    const auto reference = tse::compress(y, n);
    EXPECT_TRUE(std::is_sorted(reference.values.begin(), reference.values.end()));
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
      std::shuffle(y.begin(), y.end(), rng);
      EXPECT_EQ(tse::compress(y, n).values, reference.values);
    }
  }
}

TEST(CompressProperty, ScaleEquivariance) {
  const auto y = tse::sample_weibull(5000, {2.0, 2.0}, {3, 3});
  const auto alpha = tse::compress(y, 10);
  const auto ratios = tse::feature_scale(alpha);

  // Power-of-two scaling commutes with rounding, so it is exact.
  std::vector<double> doubled(y);
  for (auto& v : doubled) v *= 4.0;
  const auto alpha4 = tse::compress(doubled, 10);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(alpha4.values[k], 4.0 * alpha.values[k]);

  for (double c : {0.37, 3.1, 17.0}) {
    std::vector<double> scaled(y);
    for (auto& v : scaled) v *= c;
    const auto alpha_c = tse::compress(scaled, 10);
    for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(alpha_c.values[k] / (c * alpha.values[k]), 1.0, 1e-12);
    const auto ratios_c = tse::feature_scale(alpha_c);
    for (std::size_t i = 10; i < ratios.size(); ++i) EXPECT_NEAR(ratios_c.values[i] / ratios.values[i], 1.0, 1e-12);
  }
}

TEST(CompressProperty, ConsistentForInteriorQuantiles) {
  for (auto [eta, gamma] : {std::pair{2.0, 2.0}, {4.0, 8.0}, {8.0, 2.0}, {20.0, 2.0}}) {
    const tse::WeibullParams params{eta, gamma};
    const auto y = tse::sample_weibull(100'000, params, {21, static_cast<std::uint64_t>(eta * 100 + gamma)});
    const auto alpha = tse::compress(y, 10);
    for (std::size_t k = 1; k <= 9; ++k) {
      const double exact = tse::weibull_quantile(k / 10.0, params);
      EXPECT_LE(std::abs(alpha.values[k - 1] - exact) / exact, 0.02) << "k=" << k;
    }
  }
}

TEST(FeatureScale, Examples) {
  const auto two = tse::feature_scale(alpha_of({1.5, 6.0}));
  EXPECT_EQ(two.kind, FeatureKind::Scale);
  EXPECT_EQ(two.values, (std::vector{1.5, 6.0, 4.0}));

  EXPECT_EQ(tse::feature_scale(alpha_of(std::vector<double>(6, 1.0))).values, std::vector<double>(11, 1.0));
  EXPECT_EQ(tse::feature_scale(alpha_of({1.0, 2.0, 4.0})).values, (std::vector{1.0, 2.0, 4.0, 2.0, 4.0}));
  EXPECT_THROW(tse::feature_scale(alpha_of({0.0, 2.0})), tse::DegenerateInputError);
}

TEST(FeatureShape, TwoQuantilesEnumerated) {
  const double a1 = 1.5;
  const double a2 = 4.0;
  const auto f = tse::feature_shape(alpha_of({a1, a2}));
  EXPECT_EQ(f.kind, FeatureKind::Shape);
  const std::vector<double> expected{1.0, a1, a2, a1 / a2, a1 * a1, a1 * a2, a1 * a1 / a2, a2 * a2, a1,
                                     a1 * a1 / (a2 * a2)};
  ASSERT_EQ(f.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(f.values[i], expected[i], 1e-15) << i;
}

TEST(FeatureShape, OnesAndLength) {
  EXPECT_EQ(tse::feature_shape(alpha_of(std::vector<double>(4, 1.0))).values, std::vector<double>(36, 1.0));
  std::vector<double> ten(10);
  std::iota(ten.begin(), ten.end(), 1.0);
  EXPECT_EQ(tse::feature_shape(alpha_of(ten)).size(), 210u);
  EXPECT_EQ(tse::shape_feature_count(10), 210u);
  EXPECT_EQ(tse::scale_feature_count(10), 19u);
  EXPECT_THROW(tse::feature_shape(alpha_of({1.0, 0.0})), tse::DegenerateInputError);
}

}  // namespace
