#include <gtest/gtest.h>

#include <random>

#include "dmra/moments.hpp"
#include "dmra/simulator.hpp"
#include "oracles.hpp"

using namespace dmra;

namespace {

GroupDistribution random_rho(std::size_t L, std::mt19937_64& rng) {
  return GroupDistribution::from_flat(oracle::random_simplex(2 * L, rng));
}

ObservationMatrix rows_of(std::initializer_list<std::initializer_list<double>> rows) {
  ObservationMatrix y(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) y(i, j++) = v;
    ++i;
  }
  return y;
}

}  // namespace

TEST(Distribution, Validation) {
  EXPECT_THROW(GroupDistribution(RealVector::Constant(3, 0.2), RealVector::Constant(3, 0.2)), InvalidArgument);
  RealVector p = RealVector::Constant(3, 1.0 / 3.0);
  p[0] = -0.1;
  p[1] += 0.1;
  EXPECT_THROW(GroupDistribution(p, RealVector::Zero(3)), InvalidArgument);
  EXPECT_NO_THROW(GroupDistribution::uniform(5));
}

TEST(Distribution, TranslationMatchesMoments) {
  std::mt19937_64 rng(1);
  const std::size_t L = 6;
  const Signal x(oracle::random_vector(L, rng));
  const auto rho = random_rho(L, rng);
  const auto base = analytic_moments(x, rho);
  for (const auto& h : elements(L)) {
    const auto m = analytic_moments(apply(h, x), rho.translated(h));
    EXPECT_LT((m.m1 - base.m1).norm(), 1e-12);
    EXPECT_LT((m.m2 - base.m2).norm(), 1e-12);
  }
}

TEST(AnalyticM1, Examples) {
  const Signal x{1, 2, 3};
  EXPECT_LT((analytic_m1(x, GroupDistribution::point_mass(DihedralElement::identity(3))) - x.values()).norm(), 1e-15);
  EXPECT_LT((analytic_m1(x, GroupDistribution::uniform(3)) - RealVector::Constant(3, 2.0)).norm(), 1e-12);
  const RealVector shifted = analytic_m1(Signal{1, 0, 0}, GroupDistribution::point_mass(DihedralElement::r(3)));
  EXPECT_LT((shifted - RealVector::Unit(3, 1)).norm(), 1e-15);
}

TEST(AnalyticM2, Examples) {
  std::mt19937_64 rng(2);
  const Signal x(oracle::random_vector(5, rng));
  const auto id = GroupDistribution::point_mass(DihedralElement::identity(5));
  EXPECT_LT((analytic_m2(x, id, 0.0) - x.values() * x.values().transpose()).norm(), 1e-14);

  const Signal small{1, 0, 0};
  const auto uni = GroupDistribution::uniform(3);
  EXPECT_LT((analytic_m2(small, uni, 1.0) - oracle::brute_m2(small.values(), uni.flat(), 1.0)).norm(), 1e-12);

  const auto rho = random_rho(5, rng);
  EXPECT_LT((analytic_m2(x, rho, 2.0) - analytic_m2(x, rho, 0.0) - 4.0 * RealMatrix::Identity(5, 5)).norm(), 1e-12);
  EXPECT_THROW(analytic_m2(x, rho, -1.0), InvalidArgument);
  EXPECT_THROW(analytic_m1(Signal{1, 2, 3, 4}, GroupDistribution::uniform(3)), InvalidArgument);
}

TEST(AnalyticMoments, MatchOracleAndArePsd) {
  std::mt19937_64 rng(3);
  for (std::size_t L = 3; L <= 10; ++L) {
    for (int t = 0; t < 10; ++t) {
      const Signal x(oracle::random_vector(L, rng));
      const auto rho = random_rho(L, rng);
      const double sigma = std::abs(oracle::random_vector(1, rng)[0]);
      EXPECT_LT((analytic_m1(x, rho) - oracle::brute_m1(x.values(), rho.flat())).cwiseAbs().maxCoeff(), 1e-12);
      const RealMatrix m2 = analytic_m2(x, rho, sigma);
      EXPECT_LT((m2 - oracle::brute_m2(x.values(), rho.flat(), sigma)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT((m2 - m2.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      Eigen::SelfAdjointEigenSolver<RealMatrix> eig(analytic_m2(x, rho, 0.0));
      EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-12);
    }
  }
}

TEST(Empirical, Examples) {
  const auto one = rows_of({{1, 2, 3}});
  const auto m = empirical_moments(one);
  EXPECT_LT((m.m1 - RealVector(one.row(0).transpose())).norm(), 1e-15);
  EXPECT_LT((m.m2 - RealVector(one.row(0).transpose()) * one.row(0)).norm(), 1e-15);

  const auto copies = rows_of({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  const auto mc = empirical_moments(copies);
  EXPECT_LT((mc.m1 - m.m1).norm(), 1e-15);
  EXPECT_LT((mc.m2 - m.m2).norm(), 1e-14);

  const Signal x{0.5, -1, 2, 3};
  const auto obs = generate(x, GroupDistribution::point_mass(DihedralElement::identity(4)), 1000, 0.0, 7);
  const auto me = empirical_moments(obs.observations);
  EXPECT_LT((me.m1 - x.values()).norm(), 1e-13);
  EXPECT_LT((me.m2 - x.values() * x.values().transpose()).norm(), 1e-12);
  EXPECT_THROW(empirical_moments(ObservationMatrix(0, 3)), InvalidArgument);
}

TEST(Empirical, ConvergesToAnalytic) {
  std::mt19937_64 rng(4);
  const std::size_t L = 6;
  const Signal x(oracle::random_vector(L, rng));
  const auto rho = random_rho(L, rng);
  const auto obs = generate(x, rho, 200000, 0.5, 11);
  const auto m = empirical_moments(obs.observations);
  const auto exact = analytic_moments(x, rho, 0.5);
  EXPECT_LT((m.m1 - exact.m1).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT((m.m2 - exact.m2).cwiseAbs().maxCoeff(), 0.1);
  EXPECT_LT((m.m2 - m.m2.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sigma, Estimator) {
  const Signal x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::mt19937_64 rng(6);
  const auto rho = random_rho(10, rng);
  EXPECT_NEAR(estimate_sigma2(generate(x, rho, 500, 0.0, 1).observations), 0.0, 1e-12);
  EXPECT_NEAR(estimate_sigma2(generate(x, rho, 100000, 1.0, 2).observations), 1.0, 0.05);
  EXPECT_EQ(estimate_sigma2(rows_of({{1, 2, 3}, {1, 2, 3}})), 0.0);
  EXPECT_THROW(estimate_sigma2(rows_of({{1, 2, 3}})), InvalidArgument);
}

TEST(Debias, RoundTrip) {
  std::mt19937_64 rng(8);
  const Signal x(oracle::random_vector(5, rng));
  const auto rho = random_rho(5, rng);
  const auto noisy = analytic_moments(x, rho, 1.5);
  const auto clean = debias(noisy, 2.25);
  EXPECT_EQ(clean.sigma2, 0.0);
  EXPECT_LT((clean.m2 - analytic_m2(x, rho, 0.0)).norm(), 1e-12);
  const auto same = debias(clean, 0.0);
  EXPECT_EQ(same.m2, clean.m2);
  auto back = clean.m2;
  back.diagonal().array() += 2.25;
  EXPECT_LT((back - noisy.m2).cwiseAbs().maxCoeff(), 1e-15 * std::max(1.0, noisy.m2.cwiseAbs().maxCoeff()) * 4);
  EXPECT_THROW(debias(clean, -1.0), InvalidArgument);
}

TEST(FourierMoments, ClosedFormMatchesOracle) {
  std::mt19937_64 rng(10);
  for (std::size_t L : {3u, 4u, 7u, 10u}) {
    const Signal x(oracle::random_vector(L, rng));
    const auto rho = random_rho(L, rng);
    const auto table = fourier_moments(analytic_moments(x, rho));
    const auto xh = oracle::naive_dft(x.values());
    const auto Ll = static_cast<long long>(L);
    for (long long i = 0; i < Ll; ++i) {
      EXPECT_NEAR(std::abs(table.entry(i, -i) - Complex(std::norm(xh[i]), 0.0)), 0.0, 1e-10);
      for (long long j = 0; j < Ll; ++j) {
        const auto expected = oracle::fourier_entry(x.values(), rho.p(), rho.q(), i, j);
        EXPECT_NEAR(std::abs(table.entry(i, j) - expected), 0.0, 1e-10 * (1.0 + std::abs(expected)));
      }
    }
    EXPECT_LT((table.mhat1() - oracle::naive_dft(analytic_m1(x, rho))).norm(), 1e-10);
  }
}

TEST(FourierMoments, RejectsNoisyInput) {
  EXPECT_THROW(fourier_moments(analytic_moments(Signal{1, 2, 3}, GroupDistribution::uniform(3), 1.0)), InvalidArgument);
}

TEST(FourierMoments, AccessLogRecordsReads) {
  auto table = fourier_moments(analytic_moments(Signal{1, 2, 3, 4}, GroupDistribution::uniform(4)));
  AccessLog log;
  table.set_access_log(&log);
  table.entry(1, -1);
  table.entry(5, 2);
  EXPECT_EQ(log, (AccessLog{{1, 3}, {1, 2}}));
}
