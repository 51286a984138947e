#include <gtest/gtest.h>

#include <cmath>

#include "dmra/moments.hpp"
#include "dmra/simulator.hpp"

using namespace dmra;

TEST(SampleSignal, Deterministic) {
  EXPECT_EQ(sample_signal(10, 42), sample_signal(10, 42));
  EXPECT_FALSE(sample_signal(10, 42) == sample_signal(10, 43));
  EXPECT_EQ(sample_signal(10, 1).size(), 10u);
  EXPECT_THROW(sample_signal(2, 1), InvalidArgument);
}

TEST(SampleSignal, MeanNearZero) {
  double total = 0.0;
  const int seeds = 2000;
  for (int s = 0; s < seeds; ++s) total += sample_signal(10, static_cast<std::uint64_t>(s)).values().mean();
  // mean of 2000 sample means, each with standard deviation 1/sqrt(10)
  EXPECT_LT(std::abs(total / seeds), 5.0 / std::sqrt(10.0 * seeds));
}

TEST(SampleDistribution, SimplexAndUniformMean) {
  const std::size_t L = 5;
  RealVector mean = RealVector::Zero(2 * L);
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    const auto rho = sample_distribution(L, static_cast<std::uint64_t>(s));
    const auto flat = rho.flat();
    ASSERT_NEAR(flat.sum(), 1.0, 1e-12);
    ASSERT_GE(flat.minCoeff(), 0.0);
    mean += flat;
  }
  mean /= draws;
  // Dirichlet(1,...,1) coordinate variance (K-1)/(K^2 (K+1)), K = 2L
  const double k = 2.0 * L;
  const double se = std::sqrt((k - 1) / (k * k * (k + 1)) / draws);
  for (Eigen::Index j = 0; j < mean.size(); ++j) EXPECT_NEAR(mean[j], 1.0 / k, 3.0 * se);
  EXPECT_EQ(sample_distribution(L, 3).flat(), sample_distribution(L, 3).flat());
}

TEST(Generate, Noiseless) {
  const Signal x{1, 2, 3, 4, 5};
  const auto rho = sample_distribution(5, 1);
  const auto obs = generate(x, rho, 300, 0.0, 9);
  obs.validate();
  ASSERT_TRUE(obs.true_elements);
  for (std::size_t i = 0; i < obs.n(); ++i) {
    const RealVector expected = apply((*obs.true_elements)[i], x).values();
    EXPECT_EQ(RealVector(obs.observations.row(static_cast<Eigen::Index>(i)).transpose()), expected);
  }
}

TEST(Generate, DeterministicAndReproducible) {
  const Signal x = sample_signal(8, 3);
  const auto rho = sample_distribution(8, 3);
  const auto a = generate(x, rho, 10000, 0.7, 5);
  const auto b = generate(x, rho, 10000, 0.7, 5);
  EXPECT_EQ(a.observations, b.observations);
  EXPECT_EQ(*a.true_elements, *b.true_elements);
  const auto c = generate(x, rho, 10000, 0.7, 6);
  EXPECT_NE(a.observations, c.observations);
  // a prefix of a larger draw is the smaller draw
  const auto small = generate(x, rho, 5000, 0.7, 5);
  EXPECT_EQ(small.observations, a.observations.topRows(5000));
}

TEST(Generate, PointMassIsRespected) {
  const Signal x{1, -2, 3, 0.5};
  const auto g = DihedralElement(4, 3, true);
  const auto obs = generate(x, GroupDistribution::point_mass(g), 100, 0.0, 1);
  for (const auto& e : *obs.true_elements) EXPECT_EQ(e, g);
}

TEST(Generate, ElementFrequencies) {
  const std::size_t L = 4;
  const auto rho = sample_distribution(L, 12);
  const auto obs = generate(sample_signal(L, 1), rho, 200000, 0.1, 13);
  RealVector counts = RealVector::Zero(2 * L);
  for (const auto& e : *obs.true_elements) counts[static_cast<Eigen::Index>(e.index())] += 1.0;
  counts /= static_cast<double>(obs.n());
  const auto flat = rho.flat();
  for (Eigen::Index j = 0; j < counts.size(); ++j) {
    EXPECT_NEAR(counts[j], flat[j], 5.0 * std::sqrt(flat[j] * (1 - flat[j]) / 200000.0));
  }
}

TEST(Generate, NoiseVariance) {
  const Signal x{0, 0, 0, 0, 0, 0};
  const auto obs = generate(x, GroupDistribution::uniform(6), 100000, 2.0, 77);
  const double var = obs.observations.array().square().mean();
  EXPECT_NEAR(var, 4.0, 0.05);
}

TEST(Generate, Validation) {
  const Signal x{1, 2, 3};
  EXPECT_THROW(generate(x, GroupDistribution::uniform(4), 10, 1.0, 1), InvalidArgument);
  EXPECT_THROW(generate(x, GroupDistribution::uniform(3), 0, 1.0, 1), InvalidArgument);
  EXPECT_THROW(generate(x, GroupDistribution::uniform(3), 10, -1.0, 1), InvalidArgument);
}

TEST(Snr, RoundTrip) {
  const Signal x = sample_signal(10, 4);
  for (double snr : {0.01, 1.0, 100.0}) EXPECT_NEAR(snr_of(x, sigma_for_snr(x, snr)), snr, 1e-12 * snr);
  ExperimentConfig cfg;
  cfg.snr = 2.0;
  EXPECT_NEAR(snr_of(x, cfg.sigma_for(x)), 2.0, 1e-12);
  cfg.sigma = 0.3;
  EXPECT_EQ(cfg.sigma_for(x), 0.3);
  EXPECT_THROW(ExperimentConfig{}.sigma_for(x), InvalidArgument);
}

TEST(DeriveSeed, Distinct) {
  EXPECT_NE(derive_seed(1, Stream::kSignal), derive_seed(1, Stream::kNoise));
  EXPECT_NE(derive_seed(1, Stream::kTrial, 0), derive_seed(1, Stream::kTrial, 1));
  EXPECT_EQ(derive_seed(5, Stream::kTrial, 3), derive_seed(5, Stream::kTrial, 3));
}
