// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <cstdio>
#include <string>

#include "cosq/cosq.hpp"
#include "oracles.hpp"

namespace {

using namespace cosq;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& detail) { std::printf("              info  %s\n", detail.c_str()); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ChannelSpec kSiso = ChannelSpec::siso(4.0);

void transition_pattern() {
  constexpr double tol = 1e-15;
  const double a = 0.81, b = 0.01, c = 0.09;
  const double want[4][4] = {{a, b, c, c}, {b, a, c, c}, {c, c, a, b}, {c, c, b, a}};
  const auto tm = transition_matrix(BitMapping({0, 3, 2, 1}), 0.1);
  double worst = 0.0;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(tm.at(j, i) - want[j][i]));
  report(1, worst <= tol, fmt("K=4 [0 3 2 1] rho=0.1 max entry error %.3g (tol %.0e)", worst, tol));
}

void simulation_agreement() {
  constexpr double sigmas = 3.0;
  const PowerCodebook cb{{50.0, 200.0, 800.0, 3200.0}};
  const BitMapping m({0, 3, 2, 1});
  const auto e = evaluate_simplified(cb, transition_matrix(m, 0.1), ClosedFormCurve(kSiso));
  const auto s = simulate(cb.as_design(), m, 0.1, kSiso, 1000000, 1);
  const double zo = std::abs(s.p_out_hat - e.p_out) / s.p_out_stderr;
  const double za = std::abs(s.p_avg_hat - e.p_avg) / s.p_avg_stderr;
  report(2, zo <= sigmas && za <= sigmas,
         fmt("p_out %.6f vs %.6f (%.2f se), p_avg %.3f vs %.3f (%.2f se), 1e6 trials", s.p_out_hat, e.p_out, zo,
             s.p_avg_hat, e.p_avg, za));
}

void grid_oracle() {
  constexpr double rel = 0.01;
  const double snr = db_to_linear(20.0);
  bool ok = true;
  std::string detail;
  for (double rho : {0.0, 0.1}) {
    const auto res = optimize_levels(DesignProblem::make(kSiso, 2, rho, snr));
    const auto grid = oracle::grid_search_k2(snr, oracle::bsc_transitions({0, 1}, rho), oracle::SisoCurve{4.0});
    const double gap = (res.p_out - grid.p_out) / grid.p_out;
    ok = ok && gap <= rel;
    detail += fmt("rho=%.1f opt %.6f grid %.6f (rel %+.2e)  ", rho, res.p_out, grid.p_out, gap);
  }
  report(3, ok, detail);
}

void no_csit_anchor() {
  constexpr double tol = 1e-12;
  const double v = no_csit_baseline(kSiso, 1000.0);
  const double want = 1.0 - std::exp(-(std::exp(4.0) - 1.0) / 1000.0);
  report(4, std::abs(v - want) <= tol, fmt("%.12f vs %.12f", v, want));
}

bool structural(const DesignResult& r, double snr) {
  const auto& P = r.levels();
  constexpr double slack = 1e-9;
  if (!std::is_sorted(P.begin(), P.end())) return false;
  if (P.front() > snr * (1 + slack) || P.back() < snr * (1 - slack)) return false;
  if (P.size() >= 2 && !r.kkt.intermediate_index) return false;
  return r.p_avg <= snr * (1 + slack);
}

void never_inferior_and_invariants() {
  constexpr double tol = 1e-12;
  int points = 0, inferior = 0, broken = 0;
  double worst = -1.0;
  for (int K : {2, 4}) {
    for (int s = 0; s <= 8; ++s) {
      const double snr = db_to_linear(5.0 * s);
      const double base = no_csit_baseline(kSiso, snr);
      for (int q = 0; q <= 10; ++q) {
        const auto res = optimize_levels(DesignProblem::make(kSiso, K, 0.05 * q, snr));
        ++points;
        worst = std::max(worst, res.p_out - base);
        if (res.p_out > base + tol) ++inferior;
        if (!structural(res, snr)) ++broken;
      }
    }
  }
  report(5, inferior == 0, fmt("%d designs, %d above no-CSIT, max(p_out - no-CSIT) %.3g", points, inferior, worst));
  report(10, broken == 0, fmt("%d designs, %d violate ordering/bracketing/intermediate index/power", points, broken));
}

void half_crossover() {
  constexpr double rel = 1e-6;
  const double snr = db_to_linear(20.0);
  const double base = no_csit_baseline(kSiso, snr);
  bool ok = true;
  std::string detail;
  for (int K : {2, 4}) {
    const auto res = optimize_levels(DesignProblem::make(kSiso, K, 0.5, snr));
    const double d = std::abs(res.p_out - base) / base;
    ok = ok && d <= rel;
    detail += fmt("K=%d %.10f vs %.10f (rel %.2e)  ", K, res.p_out, base, d);
  }
  report(6, ok, detail);
}

double slope(int K, double rho, Scheme scheme, double lo, double hi) {
  ExperimentTemplate tpl;
  tpl.spec = kSiso;
  tpl.K = K;
  tpl.rho = rho;
  std::vector<double> grid;
  for (double db = lo; db <= hi + 1e-9; db += 2.5) grid.push_back(db);
  const auto res = sweep_snr(tpl, grid, {scheme});
  return estimate_diversity(rows_for(res, scheme), lo, hi).slope;
}

void diversity() {
  const double a = slope(1, 0.0, Scheme::no_csit, 30.0, 50.0);
  const double b = slope(2, 0.0, Scheme::noiseless_feedback, 25.0, 40.0);
  const double c = slope(4, 0.0, Scheme::noiseless_feedback, 30.0, 45.0);
  const double d = slope(4, 0.01, Scheme::noisy_feedback, 45.0, 60.0);
  const bool ok = a >= 0.9 && a <= 1.1 && b >= 1.7 && b <= 2.2 && c >= 3.0 && d >= 0.8 && d <= 1.2;
  report(7, ok,
         fmt("(a) no-CSIT %.3f in [0.9,1.1]  (b) K=2 %.3f in [1.7,2.2]  (c) K=4 %.3f >= 3.0  (d) K=4 rho=0.01 %.3f in "
             "[0.8,1.2]",
             a, b, c, d));
}

struct MergeCheck {
  bool spread_ok = true;
  bool mapping_ok = true;
  std::string detail;
};

MergeCheck merging_at(double db) {
  const double snr = db_to_linear(db);
  ExperimentTemplate tpl;
  tpl.spec = ChannelSpec::miso(2, 6.0);
  tpl.K = 4;
  const std::vector<double> rhos{0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  const auto rows = codebook_vs_rho(tpl, snr, rhos, true);
  MergeCheck out;
  out.detail = fmt("%g dB spread:", db);
  double prev = INFINITY;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const double s = rows[i].levels.back() - rows[i].levels.front();
    if (s > prev + 0.01 * snr) out.spread_ok = false;
    prev = s;
    out.detail += fmt(" %.4g", s);
  }
  const double grey = rows[2].p_out, ident = rows[rhos.size() + 2].p_out;
  out.mapping_ok = grey <= ident;
  out.detail += fmt("; rho=0.1 quasi-grey %.5g vs identity %.5g", grey, ident);
  return out;
}

void merging() {
  const auto stated = merging_at(20.0);
  report(8, stated.spread_ok && stated.mapping_ok, "MISO 2x1 R=6 K=4 " + stated.detail);
  for (double db : {30.0, 40.0}) {
    const auto m = merging_at(db);
    info(fmt("not counted: spread %s, mapping %s; ", m.spread_ok ? "monotone" : "non-monotone",
             m.mapping_ok ? "quasi-grey wins" : "identity wins") +
         m.detail);
  }
}

void boundary_collapse() {
  constexpr double limit = 0.05;
  const auto res = optimize_general(DesignProblem::make(kSiso, 2, 0.1, db_to_linear(40.0)));
  const double gap = *std::max_element(res.boundary_gaps.begin(), res.boundary_gaps.end());
  report(9, gap <= limit, fmt("max (Q_j - P_j)/P_j = %.4g (limit %.2f), p_out %.4g", gap, limit, res.p_out));
}

void quasi_grey() {
  bool ok = true;
  std::string detail;
  const auto k2 = search_quasi_grey(2, 0.1);
  const bool k2_ok = k2 && k2->codewords() == std::vector<std::uint32_t>{0, 1};
  ok = ok && k2_ok;
  detail += fmt("K=2 search %s;", k2_ok ? "[0 1]" : "wrong");
  for (int K : {3, 4}) {
    const auto m = *preset_mapping(K);
    for (double rho : {0.01, 0.1, 0.3}) {
      const auto r = is_quasi_grey(m, rho);
      ok = ok && r.pass;
      if (!r.pass) {
        const auto& v = r.violations.front();
        detail += fmt(" K=%d rho=%.2f fails %s (j=%d l=%d m=%d, %zu violations);", K, rho,
                      std::string(property_label(v.property)).c_str(), v.j, v.l, v.m, r.violations.size());
      } else {
        detail += fmt(" K=%d rho=%.2f ok;", K, rho);
      }
    }
  }
  const bool ident_fails = !is_quasi_grey(BitMapping::identity(4), 0.1).pass;
  ok = ok && ident_fails;
  detail += fmt(" identity K=4 %s", ident_fails ? "fails" : "passes");
  report(11, ok, detail);
}

}  // namespace

int main() {
  try {
    transition_pattern();
    simulation_agreement();
    grid_oracle();
    no_csit_anchor();
    never_inferior_and_invariants();
    half_crossover();
    diversity();
    merging();
    boundary_collapse();
    quasi_grey();
  } catch (const std::exception& e) {
    std::printf("aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
