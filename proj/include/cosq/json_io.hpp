#pragma once

#include <nlohmann/json.hpp>

#include "cosq/experiments.hpp"

namespace cosq {

using json = nlohmann::ordered_json;

inline json to_json(const ChannelSpec& s) { return {{"t", s.t}, {"r", s.r}, {"rate", s.rate}}; }

inline json to_json(const BitMapping& m) { return m.codewords(); }

inline json to_json(const TransitionMatrix& tm) {
  json rows = json::array();
  for (int j = 0; j < tm.size(); ++j) {
    json row = json::array();
    for (int i = 0; i < tm.size(); ++i) row.push_back(tm.at(j, i));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const QuasiGreyReport& r) {
  json v = json::array();
  for (const auto& x : r.violations)
    v.push_back({{"property", property_label(x.property)}, {"j", x.j}, {"l", x.l}, {"m", x.m}});
  return {{"pass", r.pass}, {"violations", std::move(v)}};
}

inline json to_json(const KktReport& k) {
  json j{{"lambda_p", k.lambda_p},
         {"stationarity_residual", k.stationarity_residual},
         {"upper_active", k.upper_active},
         {"lower_active", k.lower_active},
         {"bound_multipliers", k.bound_multipliers},
         {"levels_bracket_snr", k.levels_bracket_snr}};
  j["intermediate_index"] = k.intermediate_index ? json(*k.intermediate_index) : json(nullptr);
  return j;
}

inline json to_json(const DesignResult& r) {
  return {{"general", r.general},
          {"levels", r.design.levels},
          {"boundaries", r.design.boundaries},
          {"p_out", r.p_out},
          {"p_avg", r.p_avg},
          {"converged", r.converged},
          {"starts_used", r.starts_used},
          {"boundary_gaps", r.boundary_gaps},
          {"kkt", to_json(r.kkt)}};
}

inline json to_json(const Evaluation& e) {
  return {{"p_out", e.p_out}, {"p_success", e.p_success}, {"p_avg", e.p_avg}};
}

inline json to_json(const SimReport& r) {
  return {{"p_out_hat", r.p_out_hat},
          {"p_out_stderr", r.p_out_stderr},
          {"p_avg_hat", r.p_avg_hat},
          {"p_avg_stderr", r.p_avg_stderr},
          {"index_histogram_tx", r.index_histogram_tx},
          {"index_histogram_rx", r.index_histogram_rx},
          {"n_trials", r.n_trials},
          {"seed", r.seed}};
}

inline json to_json(const DiversityFit& f) {
  return {{"slope", f.slope},
          {"window_lo_db", f.window_lo_db},
          {"window_hi_db", f.window_hi_db},
          {"residual", f.residual},
          {"points", f.points}};
}

inline json to_json(const SweepResult& s) {
  json rows = json::array();
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    const auto& r = s.rows[k];
    rows.push_back({{"snr_db", r.snr_db},
                    {"scheme", r.scheme},
                    {"k", r.k},
                    {"rho", r.rho},
                    {"p_out", r.p_out},
                    {"p_avg", r.p_avg},
                    {"levels", s.levels[k]}});
  }
  json checks = json::array();
  for (const auto& c : s.crosschecks)
    checks.push_back({{"snr_db", c.snr_db}, {"scheme", c.scheme}, {"simulation", to_json(c.report)}});
  return {{"channel", to_json(s.meta.spec)},
          {"k", s.meta.k},
          {"rho", s.meta.rho},
          {"mapping", s.meta.mapping},
          {"unconverged_rows", s.meta.unconverged_rows},
          {"rows", std::move(rows)},
          {"crosschecks", std::move(checks)}};
}

inline json to_json(const std::vector<CodebookRow>& table) {
  json out = json::array();
  for (const auto& r : table)
    out.push_back({{"rho", r.rho}, {"mapping", r.mapping}, {"levels", r.levels}, {"p_out", r.p_out}, {"p_avg", r.p_avg}});
  return out;
}

}  // namespace cosq
