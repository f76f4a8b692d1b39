#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <complex>
#include <random>

#include "cosq/channel_model.hpp"
#include "oracles.hpp"

namespace {

using cosq::ChannelSpec;

TEST(ChannelSpec, FactoriesAndValidation) {
  EXPECT_EQ(ChannelSpec::miso(2, 6.0), (ChannelSpec{2, 1, 6.0}));
  EXPECT_EQ(ChannelSpec::simo(3, 1.0).rank(), 1);
  EXPECT_TRUE(ChannelSpec::simo(3, 1.0).closed_form());
  EXPECT_FALSE(ChannelSpec::mimo(2, 2, 1.0).closed_form());
  EXPECT_THROW((ChannelSpec{0, 1, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((ChannelSpec{1, 1, 0.0}).validate(), std::invalid_argument);
  EXPECT_THROW((ChannelSpec{1, 1, NAN}).validate(), std::invalid_argument);
}

TEST(MutualInformation, SumsLogModes) {
  const std::vector<double> eig{2.0, 0.5};
  EXPECT_NEAR(cosq::mutual_information(eig, 10.0, 2), std::log(11.0) + std::log(3.5), 1e-14);
  EXPECT_EQ(cosq::mutual_information(eig, 0.0, 2), 0.0);
  EXPECT_THROW(cosq::mutual_information(eig, -1.0, 2), std::domain_error);
  EXPECT_THROW(cosq::mutual_information(std::vector<double>{-0.1}, 1.0, 1), std::domain_error);
}

TEST(InversionPower, SingleModeClosedForm) {
  const std::vector<double> eig{0.5};
  EXPECT_NEAR(cosq::inversion_power(eig, 4.0, 1), std::expm1(4.0) / 0.5, 1e-12);
  EXPECT_NEAR(cosq::inversion_power(eig, 6.0, 2), 2.0 * std::expm1(6.0) / 0.5, 1e-9);
}

TEST(InversionPower, RootOfMutualInformation) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> ex(1.0);
  std::uniform_int_distribution<int> modes(2, 4);
  for (int it = 0; it < 500; ++it) {
    std::vector<double> eig(modes(rng));
    for (double& e : eig) e = ex(rng);
    const int t = static_cast<int>(eig.size());
    const double rate = 0.5 + 5.0 * ex(rng);
    const double p = cosq::inversion_power(eig, rate, t);
    EXPECT_NEAR(cosq::mutual_information(eig, p, t), rate, 1e-12 * rate);
  }
}

TEST(InversionPower, DeepFadeAndBadRate) {
  EXPECT_THROW(cosq::inversion_power(std::vector<double>{0.0, 0.0}, 1.0, 2), cosq::DeepFadeError);
  EXPECT_THROW(cosq::inversion_power(std::vector<double>{1.0}, 0.0, 1), std::domain_error);
}

TEST(ClosedFormCurve, SisoAnchors) {
  const cosq::ClosedFormCurve c(ChannelSpec::siso(4.0));
  EXPECT_NEAR(c.success(1000.0), std::exp(-(std::exp(4.0) - 1.0) / 1000.0), 1e-15);
  EXPECT_NEAR(c.success(1000.0), 0.9478129, 5e-8);
  EXPECT_NEAR(c.outage(1000.0), 0.0521871, 5e-8);
  EXPECT_EQ(c.success(0.0), 0.0);
  EXPECT_THROW(c.success(-1.0), std::domain_error);
}

TEST(ClosedFormCurve, MisoMatchesQuadrature) {
  // 2x1 MISO, R = 6, 30 dB: F = Q(2, 2 (e^6 - 1) / 1000)
  const auto spec = ChannelSpec::miso(2, 6.0);
  const cosq::ClosedFormCurve c(spec);
  const oracle::QuadratureCurve q{spec};
  EXPECT_NEAR(c.outage(1000.0), q.outage(1000.0), 1e-12);
  EXPECT_NEAR(c.outage(1000.0), 0.192955, 5e-7);
  for (double p : {10.0, 100.0, 3000.0, 1e5}) EXPECT_NEAR(c.outage(p), q.outage(p), 1e-12);
}

TEST(ClosedFormCurve, SimoThresholdHasNoPowerSplit) {
  const cosq::ClosedFormCurve c(ChannelSpec::simo(2, 1.0));
  const double x = std::expm1(1.0) / 5.0;
  EXPECT_NEAR(c.success(5.0), std::exp(-x) * (1.0 + x), 1e-15);
}

TEST(ClosedFormCurve, RejectsMimo) { EXPECT_THROW(cosq::ClosedFormCurve(ChannelSpec::mimo(2, 2, 1.0)), std::domain_error); }

TEST(ClosedFormCurve, SuccessIncreasesWithPower) {
  for (const auto& spec : {ChannelSpec::siso(4.0), ChannelSpec::miso(3, 2.0), ChannelSpec::simo(4, 1.0)}) {
    const cosq::ClosedFormCurve c(spec);
    double prev = 0.0;
    for (double p = 1e-2; p < 1e7; p *= 1.5) {
      EXPECT_GE(c.success(p), prev);
      EXPECT_NEAR(c.success(p) + c.outage(p), 1.0, 1e-14);
      prev = c.success(p);
    }
  }
}

TEST(Density, FiniteDifferenceMatchesSisoDensity) {
  // d/dP exp(-1/P) = exp(-1/P) / P^2 for e^R - 1 = 1
  const double rate = std::log(2.0);
  for (double p : {0.3, 1.0, 4.0, 20.0}) {
    const double exact = std::exp(-1.0 / p) / (p * p);
    EXPECT_NEAR(cosq::outage_density(p, ChannelSpec::siso(rate), 1e-5 * p), exact, 1e-7 * exact);
  }
  EXPECT_THROW(cosq::outage_density(1.0, ChannelSpec::siso(rate), 2.0), std::domain_error);
}

TEST(CellMass, BothSidesAgree) {
  const cosq::ClosedFormCurve c(ChannelSpec::siso(4.0));
  EXPECT_NEAR(cosq::cell_mass(c, 10.0, 100.0), c.success(100.0) - c.success(10.0), 1e-15);
  EXPECT_NEAR(cosq::cell_mass(c, 1e5, 1e6), c.outage(1e5) - c.outage(1e6), 1e-18);
  EXPECT_EQ(cosq::cell_mass(c, 5.0, 5.0), 0.0);
  EXPECT_EQ(cosq::cell_mass(c, 0.0, 7.0), c.success(7.0));
}

TEST(Eigenvalues, JacobiMatchesEigenOnRandomHermitian) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int n : {2, 3, 4, 6}) {
    for (int it = 0; it < 20; ++it) {
      Eigen::MatrixXcd a(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
      const Eigen::MatrixXcd h = a * a.adjoint();
      std::vector<std::complex<double>> w(n * n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w[i * n + j] = h(i, j);
      const auto mine = cosq::hermitian_eigenvalues(w, n);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
      const auto ref = es.eigenvalues();
      for (int k = 0; k < n; ++k) EXPECT_NEAR(mine[k], ref(n - 1 - k), 1e-10 * ref(n - 1));
    }
  }
}

TEST(Eigenvalues, GramOfWideAndTallAgree) {
  auto rng = cosq::make_engine(5, cosq::Stream::channel);
  const auto spec = ChannelSpec::mimo(3, 2, 1.0);
  const auto h = cosq::sample_channel_matrix(spec, rng);
  const auto wide = cosq::gram_eigenvalues(h, 2, 3).eigenvalues;
  // transpose into a 3 x 2 channel: the nonzero spectrum is unchanged
  std::vector<std::complex<double>> ht(6);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 3; ++k) ht[k * 2 + i] = h[i * 3 + k];
  const auto tall = cosq::gram_eigenvalues(ht, 3, 2).eigenvalues;
  ASSERT_EQ(wide.size(), 2u);
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(wide[k], tall[k], 1e-12 * wide[0]);
}

TEST(MonteCarlo, RankOneAgreesWithClosedForm) {
  for (const auto& spec : {ChannelSpec::siso(4.0), ChannelSpec::miso(2, 6.0), ChannelSpec::simo(2, 2.0)}) {
    const cosq::ClosedFormCurve c(spec);
    for (double p : {30.0, 300.0, 3000.0}) {
      const auto mc = cosq::comp_outage_mc(p, spec, 400000, 9);
      EXPECT_NEAR(mc.value, c.success(p), 4.0 * mc.std_err + 1e-6) << "P=" << p;
    }
  }
}

TEST(MonteCarlo, MimoAgreesWithBruteForceMutualInformation) {
  // independent draw loop: outage iff log det(I + P/t H H^H) < R
  const auto spec = ChannelSpec::mimo(2, 2, 2.0);
  const double p = 10.0;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const int n = 300000;
  int ok = 0;
  for (int it = 0; it < n; ++it) {
    Eigen::Matrix2cd h;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) h(i, j) = {g(rng), g(rng)};
    const Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity() + (p / 2.0) * h * h.adjoint();
    if (std::log(m.determinant().real()) >= spec.rate) ++ok;
  }
  const double ref = static_cast<double>(ok) / n;
  const auto mc = cosq::comp_outage_mc(p, spec, 300000, 4);
  EXPECT_NEAR(mc.value, ref, 4.0 * std::sqrt(2.0) * mc.std_err);
}

TEST(MonteCarlo, DeterministicForSeed) {
  const auto spec = ChannelSpec::mimo(2, 3, 1.5);
  const auto a = cosq::comp_outage_mc(5.0, spec, 100000, 21);
  const auto b = cosq::comp_outage_mc(5.0, spec, 100000, 21);
  const auto c = cosq::comp_outage_mc(5.0, spec, 100000, 22);
  EXPECT_EQ(a.value, b.value);
  EXPECT_NE(a.value, c.value);
  EXPECT_THROW(cosq::comp_outage_mc(5.0, spec, 0, 1), std::invalid_argument);
}

TEST(MonteCarlo, ShardResultsIndependentOfWorkerCount) {
  auto fn = [](std::uint64_t shard) {
    auto rng = cosq::make_engine(99, cosq::Stream::channel, shard);
    return rng();
  };
  EXPECT_EQ(cosq::run_shards<std::uint64_t>(17, fn, 1), cosq::run_shards<std::uint64_t>(17, fn, 8));
}

TEST(EmpiricalCurve, StepFunctionOfDraws) {
  const auto spec = ChannelSpec::mimo(2, 2, 2.0);
  const cosq::EmpiricalCurve e(spec, 50000, 3);
  EXPECT_EQ(e.size(), 50000u);
  EXPECT_EQ(e.success(0.0), 0.0);
  EXPECT_EQ(e.success(1e300), 1.0);
  double prev = 0.0;
  for (double p = 0.1; p < 1e4; p *= 1.7) {
    EXPECT_GE(e.success(p), prev);
    EXPECT_DOUBLE_EQ(e.success(p) + e.outage(p), 1.0);
    prev = e.success(p);
  }
  const auto mc = cosq::comp_outage_mc(10.0, spec, 200000, 8);
  EXPECT_NEAR(e.success(10.0), mc.value, 5.0 * std::sqrt(mc.value * (1 - mc.value) / 50000.0));
}

TEST(OutageModel, PicksClosedFormWhenAvailable) {
  EXPECT_TRUE(cosq::OutageModel::for_spec(ChannelSpec::miso(2, 6.0)).closed_form());
  const auto m = cosq::OutageModel::for_spec(ChannelSpec::mimo(2, 2, 1.0), 10000, 1);
  EXPECT_FALSE(m.closed_form());
  EXPECT_GT(m.success(100.0), 0.9);
}

TEST(Diversity, MimoOutageFallsFasterThanSiso) {
  // 2x2 full diversity 4: a 10 dB step must cut outage far more than 10x
  const cosq::EmpiricalCurve e(ChannelSpec::mimo(2, 2, 1.0), 400000, 2);
  const double ratio = e.outage(3.0) / std::max(e.outage(30.0), 1.0 / 400000);
  EXPECT_GT(ratio, 100.0);
}

}  // namespace
