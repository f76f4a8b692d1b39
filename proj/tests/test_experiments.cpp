#include <gtest/gtest.h>

#include <random>

#include "cosq/experiments.hpp"

namespace {

using cosq::ChannelSpec;
using cosq::Scheme;

cosq::ExperimentTemplate siso_template(int K, double rho) {
  cosq::ExperimentTemplate tpl;
  tpl.spec = ChannelSpec::siso(4.0);
  tpl.K = K;
  tpl.rho = rho;
  return tpl;
}

TEST(Units, DecibelConversion) {
  EXPECT_DOUBLE_EQ(cosq::db_to_linear(0.0), 1.0);
  EXPECT_DOUBLE_EQ(cosq::db_to_linear(30.0), 1000.0);
  EXPECT_NEAR(cosq::db_to_linear(3.0), 1.9952623149688795, 1e-15);
}

TEST(Schemes, LabelsRoundTrip) {
  for (auto s : {Scheme::no_csit, Scheme::noiseless_feedback, Scheme::noisy_feedback, Scheme::identity_mapping_noisy})
    EXPECT_EQ(cosq::parse_scheme(cosq::scheme_label(s)), s);
  EXPECT_THROW(cosq::parse_scheme("perfect"), std::invalid_argument);
}

TEST(Sweep, RowsOrderingAndBudget) {
  const auto res = cosq::sweep_snr(siso_template(2, 0.1), {0.0, 10.0, 20.0},
                                   {Scheme::noisy_feedback, Scheme::no_csit, Scheme::noisy_feedback});
  ASSERT_EQ(res.rows.size(), 6u);
  EXPECT_EQ(res.rows[0].scheme, "no-csit");
  EXPECT_EQ(res.rows[3].scheme, "noisy-feedback");
  for (const auto& r : res.rows) EXPECT_LE(r.p_avg, cosq::db_to_linear(r.snr_db) * (1.0 + 1e-9));
  const auto noisy = cosq::rows_for(res, Scheme::noisy_feedback);
  const auto base = cosq::rows_for(res, Scheme::no_csit);
  for (std::size_t i = 0; i < noisy.size(); ++i) EXPECT_LE(noisy[i].p_out, base[i].p_out + 1e-12);
  EXPECT_EQ(res.meta.mapping, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(res.levels.size(), res.rows.size());
  EXPECT_TRUE(res.levels[0].empty());
}

TEST(Sweep, NoiselessBeatsNoisy) {
  const auto res = cosq::sweep_snr(siso_template(4, 0.1), {10.0, 20.0, 30.0},
                                   {Scheme::noiseless_feedback, Scheme::noisy_feedback});
  const auto clean = cosq::rows_for(res, Scheme::noiseless_feedback);
  const auto noisy = cosq::rows_for(res, Scheme::noisy_feedback);
  for (std::size_t i = 0; i < clean.size(); ++i) EXPECT_LE(clean[i].p_out, noisy[i].p_out * (1.0 + 1e-9));
}

TEST(Sweep, CrossChecksAttachSimulation) {
  cosq::SweepOptions sopt;
  sopt.simulate_at_db = {20.0};
  sopt.sim_trials = 200000;
  const auto res = cosq::sweep_snr(siso_template(2, 0.1), {10.0, 20.0}, {Scheme::noisy_feedback}, sopt);
  ASSERT_EQ(res.crosschecks.size(), 1u);
  const auto& c = res.crosschecks[0];
  EXPECT_EQ(c.snr_db, 20.0);
  EXPECT_LE(std::abs(c.report.p_out_hat - res.rows[1].p_out), 4.0 * c.report.p_out_stderr);
}

TEST(Sweep, GridErrors) {
  EXPECT_THROW(cosq::sweep_snr(siso_template(2, 0.1), {}, {Scheme::no_csit}), std::invalid_argument);
  EXPECT_THROW(cosq::sweep_snr(siso_template(2, 0.1), {10.0, 5.0}, {Scheme::no_csit}), std::invalid_argument);
  EXPECT_THROW(cosq::sweep_snr(siso_template(2, 0.1), {10.0}, {}), std::invalid_argument);
}

TEST(Diversity, ExactPowerLaw) {
  std::vector<cosq::SweepRow> rows;
  for (double db = 0.0; db <= 40.0; db += 5.0) rows.push_back({db, "x", 1, 0.0, std::pow(cosq::db_to_linear(db), -3.0), 0.0});
  const auto fit = cosq::estimate_diversity(rows, 0.0, 40.0);
  EXPECT_NEAR(fit.slope, 3.0, 1e-9);
  EXPECT_EQ(fit.points, 9u);
  EXPECT_NEAR(fit.residual, 0.0, 1e-9);
}

TEST(Diversity, Errors) {
  std::vector<cosq::SweepRow> rows{{0.0, "x", 1, 0.0, 0.5, 0.0}, {10.0, "x", 1, 0.0, 0.0, 0.0}, {20.0, "x", 1, 0.0, 0.1, 0.0}};
  EXPECT_THROW(cosq::estimate_diversity(rows, 0.0, 20.0), std::domain_error);
  EXPECT_THROW(cosq::estimate_diversity(rows, 15.0, 25.0), std::invalid_argument);
  EXPECT_THROW(cosq::estimate_diversity(rows, 20.0, 10.0), std::invalid_argument);
}

TEST(Diversity, NoCsitSlopeIsOne) {
  const auto res = cosq::sweep_snr(siso_template(1, 0.0), {30.0, 35.0, 40.0, 45.0, 50.0}, {Scheme::no_csit});
  const auto fit = cosq::estimate_diversity(cosq::rows_for(res, Scheme::no_csit), 30.0, 50.0);
  EXPECT_NEAR(fit.slope, 1.0, 0.02);
}

TEST(CodebookVsRho, RowsPerMappingAndEndpoints) {
  auto tpl = siso_template(2, 0.0);
  const double snr = 100.0;
  const auto rows = cosq::codebook_vs_rho(tpl, snr, {0.0, 0.25, 0.5}, true);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].mapping, "quasi-grey");
  EXPECT_EQ(rows[3].mapping, "identity");
  const auto clean = cosq::optimize_levels(cosq::DesignProblem::make(tpl.spec, 2, 0.0, snr));
  EXPECT_NEAR(rows[0].p_out, clean.p_out, 1e-12);
  for (double p : rows[2].levels) EXPECT_NEAR(p, snr, 0.05 * snr);
  EXPECT_THROW(cosq::codebook_vs_rho(tpl, snr, {}, false), std::invalid_argument);
  EXPECT_THROW(cosq::codebook_vs_rho(tpl, snr, {0.7}, false), std::domain_error);
}

TEST(Csv, RoundTripsExactly) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-300.0, 0.0);
  cosq::SweepResult res;
  for (int i = 0; i < 200; ++i) {
    const double p = std::pow(10.0, u(rng));
    res.rows.push_back({0.1 * i, i % 2 ? "no-csit" : "noisy-feedback", 1 + i % 5, 0.5 * p, p, 1.0 / p});
  }
  res.rows.push_back({-5.0, "no-csit", 1, 0.0, 4.9406564584124654e-324, 1e300});
  EXPECT_EQ(cosq::parse_sweep_csv(cosq::sweep_to_csv(res)), res.rows);
}

TEST(Csv, RoundTripsARealSweep) {
  const auto res = cosq::sweep_snr(siso_template(2, 0.1), {5.0, 15.0}, {Scheme::no_csit, Scheme::noisy_feedback});
  const auto csv = cosq::sweep_to_csv(res);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), cosq::kSweepCsvHeader);
  EXPECT_EQ(cosq::parse_sweep_csv(csv), res.rows);
}

TEST(Csv, RejectsMalformed) {
  EXPECT_THROW(cosq::parse_sweep_csv("snr,scheme\n"), std::invalid_argument);
  EXPECT_THROW(cosq::parse_sweep_csv("snr_db,scheme,k,rho,p_out,p_avg\n1,x,1,0,0.5\n"), std::invalid_argument);
  EXPECT_THROW(cosq::parse_sweep_csv("snr_db,scheme,k,rho,p_out,p_avg\n1,x,1,0,0.5,abc\n"), std::invalid_argument);
}

}  // namespace
