#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cosq/codebook_optimizer.hpp"
#include "cosq/link_simulator.hpp"
#include "cosq/rng.hpp"

namespace cosq {

inline constexpr std::string_view kToolVersion = "1.0.0";

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

enum class Scheme { no_csit, noiseless_feedback, noisy_feedback, identity_mapping_noisy };

inline constexpr std::string_view scheme_label(Scheme s) {
  switch (s) {
    case Scheme::no_csit: return "no-csit";
    case Scheme::noiseless_feedback: return "noiseless-feedback";
    case Scheme::noisy_feedback: return "noisy-feedback";
    case Scheme::identity_mapping_noisy: return "identity-mapping-noisy";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view s) {
  for (auto v : {Scheme::no_csit, Scheme::noiseless_feedback, Scheme::noisy_feedback, Scheme::identity_mapping_noisy})
    if (scheme_label(v) == s) return v;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

/// Everything a sweep needs besides the SNR grid.
struct ExperimentTemplate {
  ChannelSpec spec;
  int K = 2;
  double rho = 0.0;
  std::optional<BitMapping> mapping;  // default_mapping(K) when empty
  DesignOptions options;
  bool general = false;  // optimize boundaries too
  TieRule ties = TieRule::toward_higher_power;

  BitMapping quasi_grey() const { return mapping ? *mapping : default_mapping(K); }
  DesignProblem problem(double at_rho, double snr, BitMapping m) const {
    auto pb = DesignProblem::make(spec, K, at_rho, snr, std::move(m));
    pb.ties = ties;
    return pb;
  }
};

struct SweepRow {
  double snr_db = 0.0;
  std::string scheme;
  int k = 1;
  double rho = 0.0;
  double p_out = 1.0;
  double p_avg = 0.0;
  bool operator==(const SweepRow&) const = default;
};

struct CrossCheck {
  double snr_db = 0.0;
  std::string scheme;
  SimReport report;
};

struct SweepMetadata {
  ChannelSpec spec;
  int k = 1;
  double rho = 0.0;
  std::vector<std::uint32_t> mapping;
  std::string generator{kGeneratorName};
  std::uint64_t seed = 0;
  std::string version{kToolVersion};
  std::vector<std::size_t> unconverged_rows;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepMetadata meta;
  std::vector<CrossCheck> crosschecks;
  std::vector<std::vector<double>> levels;  // optimized codebook per row (empty for no-csit)
};

struct SweepOptions {
  std::vector<double> simulate_at_db;  // attach simulator cross-checks at these grid points
  std::uint64_t sim_trials = 100000;
  std::uint64_t seed = 1;
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("SNR grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("SNR grid must be strictly increasing");
}

inline std::vector<double> rescale(const std::vector<double>& levels, double factor) {
  std::vector<double> out(levels);
  for (double& v : out) v *= factor;
  return out;
}

template <OutageCurve C>
DesignResult design_point(const ExperimentTemplate& tpl, const DesignProblem& pb, const C& curve,
                          const DesignOptions& opt) {
  return tpl.general ? optimize_general(pb, curve, opt) : optimize_levels(pb, curve, opt);
}

}  // namespace detail

/// Re-optimizes the codebook at every SNR point for every scheme. The design
/// at the previous grid point, rescaled, is added as a warm start.
template <OutageCurve C>
SweepResult sweep_snr(const ExperimentTemplate& tpl, const std::vector<double>& snr_db, const std::vector<Scheme>& schemes,
                      const C& curve, const SweepOptions& sopt = {}) {
  detail::check_grid(snr_db);
  if (schemes.empty()) throw std::invalid_argument("sweep_snr: no schemes");
  SweepResult out;
  out.meta.spec = tpl.spec;
  out.meta.k = tpl.K;
  out.meta.rho = tpl.rho;
  out.meta.mapping = tpl.quasi_grey().codewords();
  out.meta.seed = sopt.seed;

  std::vector<Scheme> ordered(schemes);
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  for (Scheme scheme : ordered) {
    std::vector<double> previous;
    double previous_snr = 0.0;
    for (double db : snr_db) {
      const double snr = db_to_linear(db);
      SweepRow row{db, std::string(scheme_label(scheme)), tpl.K, tpl.rho, 1.0, snr};
      std::optional<DesignProblem> pb;
      switch (scheme) {
        case Scheme::no_csit:
          row.k = 1;
          row.rho = 0.0;
          row.p_out = no_csit_baseline(curve, snr);
          break;
        case Scheme::noiseless_feedback:
          row.rho = 0.0;
          pb = tpl.problem(0.0, snr, tpl.quasi_grey());
          break;
        case Scheme::noisy_feedback:
          pb = tpl.problem(tpl.rho, snr, tpl.quasi_grey());
          break;
        case Scheme::identity_mapping_noisy:
          pb = tpl.problem(tpl.rho, snr, BitMapping::identity(tpl.K));
          break;
      }
      if (pb) {
        DesignOptions opt = tpl.options;
        if (!previous.empty()) opt.warm_starts.push_back(detail::rescale(previous, snr / previous_snr));
        const auto res = detail::design_point(tpl, *pb, curve, opt);
        row.p_out = res.p_out;
        row.p_avg = res.p_avg;
        if (!res.converged) out.meta.unconverged_rows.push_back(out.rows.size());
        previous = res.levels();
        previous_snr = snr;
        out.levels.push_back(res.levels());
        for (double at : sopt.simulate_at_db) {
          if (std::abs(at - db) > 1e-9) continue;
          out.crosschecks.push_back({db, row.scheme,
                                     simulate(res.design, pb->mapping, pb->rho, tpl.spec, sopt.sim_trials, sopt.seed,
                                              pb->ties)});
        }
      } else {
        out.levels.emplace_back();
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

inline SweepResult sweep_snr(const ExperimentTemplate& tpl, const std::vector<double>& snr_db,
                             const std::vector<Scheme>& schemes, const SweepOptions& sopt = {}) {
  return sweep_snr(tpl, snr_db, schemes,
                   OutageModel::for_spec(tpl.spec, tpl.options.mc_samples, tpl.options.mc_seed), sopt);
}

/// Rows of one scheme, in grid order.
inline std::vector<SweepRow> rows_for(const SweepResult& sweep, Scheme scheme) {
  std::vector<SweepRow> out;
  for (const auto& r : sweep.rows)
    if (r.scheme == scheme_label(scheme)) out.push_back(r);
  return out;
}

struct DiversityFit {
  double slope = 0.0;
  double window_lo_db = 0.0;
  double window_hi_db = 0.0;
  double residual = 0.0;  // RMS deviation from the fitted line
  std::size_t points = 0;
};

/// Least-squares slope of -log10(p_out) against log10(snr) over the window.
inline DiversityFit estimate_diversity(const std::vector<SweepRow>& curve, double lo_db, double hi_db) {
  if (!(hi_db > lo_db)) throw std::invalid_argument("estimate_diversity: empty window");
  std::vector<double> x, y;
  for (const auto& r : curve) {
    if (r.snr_db < lo_db - 1e-9 || r.snr_db > hi_db + 1e-9) continue;
    if (!(r.p_out > 0.0))
      throw std::domain_error("estimate_diversity: p_out = 0 inside the window; shrink the window");
    x.push_back(r.snr_db / 10.0);
    y.push_back(-std::log10(r.p_out));
  }
  if (x.size() < 3) throw std::invalid_argument("estimate_diversity: need at least 3 points in the window");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  DiversityFit fit;
  fit.slope = sxy / sxx;
  fit.window_lo_db = lo_db;
  fit.window_hi_db = hi_db;
  fit.points = x.size();
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (my + fit.slope * (x[i] - mx));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

struct CodebookRow {
  double rho = 0.0;
  std::string mapping;  // "quasi-grey" or "identity"
  std::vector<double> levels;
  double p_out = 1.0;
  double p_avg = 0.0;
};

/// Optimized levels across a crossover grid at the template's snr, for the
/// quasi-grey mapping and optionally the identity mapping.
template <OutageCurve C>
std::vector<CodebookRow> codebook_vs_rho(const ExperimentTemplate& tpl, double snr, const std::vector<double>& rho_grid,
                                         bool include_identity, const C& curve) {
  if (rho_grid.empty()) throw std::invalid_argument("codebook_vs_rho: empty rho grid");
  for (double rho : rho_grid) check_crossover(rho);
  std::vector<CodebookRow> out;
  std::vector<std::pair<std::string, BitMapping>> mappings{{"quasi-grey", tpl.quasi_grey()}};
  if (include_identity) mappings.emplace_back("identity", BitMapping::identity(tpl.K));
  for (const auto& [label, mapping] : mappings) {
    for (double rho : rho_grid) {
      const auto pb = tpl.problem(rho, snr, mapping);
      const auto res = detail::design_point(tpl, pb, curve, tpl.options);
      out.push_back({rho, label, res.levels(), res.p_out, res.p_avg});
    }
  }
  return out;
}

inline std::vector<CodebookRow> codebook_vs_rho(const ExperimentTemplate& tpl, double snr,
                                                const std::vector<double>& rho_grid, bool include_identity) {
  return codebook_vs_rho(tpl, snr, rho_grid, include_identity,
                         OutageModel::for_spec(tpl.spec, tpl.options.mc_samples, tpl.options.mc_seed));
}

// --- CSV ---------------------------------------------------------------------

inline constexpr std::string_view kSweepCsvHeader = "snr_db,scheme,k,rho,p_out,p_avg";

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sweep_to_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  for (const auto& r : sweep.rows)
    os << format_double(r.snr_db) << ',' << r.scheme << ',' << r.k << ',' << format_double(r.rho) << ','
       << format_double(r.p_out) << ',' << format_double(r.p_avg) << '\n';
  return os.str();
}

inline std::vector<SweepRow> parse_sweep_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || line != kSweepCsvHeader) throw std::invalid_argument("sweep CSV: bad header");
  std::vector<SweepRow> rows;
  auto number = [](const std::string& s) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
      throw std::invalid_argument("sweep CSV: bad number '" + s + "'");
    return v;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() != 6) throw std::invalid_argument("sweep CSV: expected 6 fields in '" + line + "'");
    rows.push_back({number(f[0]), f[1], static_cast<int>(number(f[2])), number(f[3]), number(f[4]), number(f[5])});
  }
  return rows;
}

}  // namespace cosq
