#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cosq/json_io.hpp"

namespace cosq {

/// A malformed or inconsistent configuration; `field` is the dotted path of the offender.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct FeedbackConfig {
  int k = 2;
  double rho = 0.0;
  std::optional<BitMapping> mapping;  // quasi-grey default when empty
  TieRule ties = TieRule::toward_higher_power;
};

struct DesignConfig {
  double snr_db = 20.0;
  bool general = false;
  DesignOptions options;
  std::vector<double> rho_grid;  // non-empty: also tabulate levels across crossovers
  bool include_identity = false;
};

struct SweepConfig {
  std::vector<double> snr_db;
  std::vector<Scheme> schemes{Scheme::no_csit, Scheme::noiseless_feedback, Scheme::noisy_feedback};
  std::optional<std::pair<double, double>> diversity_window_db;
  std::vector<double> simulate_at_db;
  std::uint64_t sim_trials = 100000;
};

struct SimulateConfig {
  std::uint64_t trials = 1000000;
  std::optional<QuantizerDesign> design;  // the optimized design when empty
};

struct RunConfig {
  ChannelSpec channel;
  FeedbackConfig feedback;
  std::optional<DesignConfig> design;
  std::optional<SweepConfig> sweep;
  std::optional<SimulateConfig> simulate;
  std::uint64_t seed = 1;

  ExperimentTemplate experiment() const {
    ExperimentTemplate tpl;
    tpl.spec = channel;
    tpl.K = feedback.k;
    tpl.rho = feedback.rho;
    tpl.mapping = feedback.mapping;
    tpl.ties = feedback.ties;
    if (design) {
      tpl.options = design->options;
      tpl.general = design->general;
    } else {
      tpl.options.mc_seed = seed;
    }
    return tpl;
  }
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

inline bool nonnegative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Reads the members of one JSON object and rejects any member nobody asked for.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }
  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key), "missing required key");
    return obj_.at(key);
  }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) return required(key, fallback);
    const auto& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    return v.get<double>();
  }
  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
    if (!has(key)) return required(key, fallback);
    const auto& v = obj_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback, std::uint64_t min = 1) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!nonnegative_integer(v)) throw ConfigError(at(key), "expected a nonnegative integer");
    const auto n = v.get<std::uint64_t>();
    if (n < min) throw ConfigError(at(key), "must be >= " + std::to_string(min));
    return n;
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) return required(key, fallback);
    const auto& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key())) throw ConfigError(at(item.key()), "unknown key");
  }

 private:
  template <class T>
  T required(const std::string& key, const std::optional<T>& fallback) const {
    if (!fallback) throw ConfigError(at(key), "missing required key");
    return *fallback;
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline ChannelSpec parse_channel(Fields f) {
  const auto type = f.string("type");
  const double rate = f.number("rate");
  ChannelSpec spec;
  auto antennas = [&](const std::string& key) {
    const auto n = f.integer(key);
    if (n < 1 || n > 64) throw ConfigError(f.at(key), "antenna count must lie in [1, 64]");
    return static_cast<int>(n);
  };
  if (type == "siso") {
    spec = ChannelSpec::siso(rate);
  } else if (type == "miso") {
    spec = ChannelSpec::miso(antennas("t"), rate);
  } else if (type == "simo") {
    spec = ChannelSpec::simo(antennas("r"), rate);
  } else if (type == "mimo") {
    const int t = antennas("t");
    spec = ChannelSpec::mimo(t, antennas("r"), rate);
  } else {
    throw ConfigError(f.at("type"), "expected one of siso, miso, simo, mimo");
  }
  if (!(rate > 0.0)) throw ConfigError(f.at("rate"), "must be positive");
  f.finish();
  return spec;
}

inline FeedbackConfig parse_feedback(Fields f) {
  FeedbackConfig fb;
  const auto k = f.integer("k");
  if (k < 1 || k > 1024) throw ConfigError(f.at("k"), "must lie in [1, 1024]");
  fb.k = static_cast<int>(k);
  fb.rho = f.number("rho", 0.0);
  if (!(fb.rho >= 0.0 && fb.rho <= 0.5)) throw ConfigError(f.at("rho"), "must lie in [0, 0.5]");
  if (f.has("mapping")) {
    const auto& m = f.raw("mapping");
    if (m.is_string()) {
      const auto name = m.get<std::string>();
      if (name == "identity") {
        fb.mapping = BitMapping::identity(fb.k);
      } else if (name != "quasi-grey") {
        throw ConfigError(f.at("mapping"), "expected \"quasi-grey\", \"identity\" or an array of codewords");
      }
    } else if (m.is_array()) {
      std::vector<std::uint32_t> words;
      for (const auto& w : m) {
        if (!nonnegative_integer(w) || w.get<std::uint64_t>() > UINT32_MAX) throw ConfigError(f.at("mapping"), "codewords must be nonnegative integers");
        words.push_back(w.get<std::uint32_t>());
      }
      try {
        fb.mapping = BitMapping(std::move(words));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(f.at("mapping"), e.what());
      }
      if (fb.mapping->size() != fb.k) throw ConfigError(f.at("mapping"), "length differs from k");
    } else {
      throw ConfigError(f.at("mapping"), "expected a string or an array");
    }
  }
  const auto ties = f.string("ties", "higher-power");
  if (ties == "higher-power") {
    fb.ties = TieRule::toward_higher_power;
  } else if (ties == "lower-power") {
    fb.ties = TieRule::toward_lower_power;
  } else {
    throw ConfigError(f.at("ties"), "expected \"higher-power\" or \"lower-power\"");
  }
  f.finish();
  return fb;
}

inline DesignConfig parse_design(Fields f, std::uint64_t seed) {
  DesignConfig d;
  d.snr_db = f.number("snr_db", 20.0);
  d.general = f.boolean("general", false);
  const auto restarts = f.integer("restarts", 3);
  if (restarts < 0 || restarts > 100) throw ConfigError(f.at("restarts"), "must lie in [0, 100]");
  d.options.restarts = static_cast<int>(restarts);
  const auto iters = f.integer("max_iterations", d.options.simplex.max_iterations);
  if (iters < 1) throw ConfigError(f.at("max_iterations"), "must be >= 1");
  d.options.simplex.max_iterations = static_cast<int>(iters);
  d.options.mc_samples = f.count("mc_samples", d.options.mc_samples, 100);
  d.options.mc_seed = f.count("mc_seed", seed, 0);
  if (f.has("rho_grid")) {
    d.rho_grid = f.numbers("rho_grid");
    if (d.rho_grid.empty()) throw ConfigError(f.at("rho_grid"), "must not be empty");
    for (double r : d.rho_grid)
      if (!(r >= 0.0 && r <= 0.5)) throw ConfigError(f.at("rho_grid"), "values must lie in [0, 0.5]");
  }
  d.include_identity = f.boolean("include_identity", false);
  f.finish();
  return d;
}

inline SweepConfig parse_sweep(Fields f) {
  SweepConfig s;
  const auto& grid = f.raw("snr_db");
  if (grid.is_array()) {
    s.snr_db = f.numbers("snr_db");
  } else if (grid.is_object()) {
    Fields g(grid, f.at("snr_db"));
    const double start = g.number("start");
    const double stop = g.number("stop");
    const double step = g.number("step");
    g.finish();
    if (!(step > 0.0)) throw ConfigError(g.at("step"), "must be positive");
    if (!(stop >= start)) throw ConfigError(g.at("stop"), "must be >= start");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) s.snr_db.push_back(start + step * static_cast<double>(i));
  } else {
    throw ConfigError(f.at("snr_db"), "expected an array or {start, stop, step}");
  }
  try {
    detail::check_grid(s.snr_db);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(f.at("snr_db"), e.what());
  }
  if (f.has("schemes")) {
    const auto& v = f.raw("schemes");
    if (!v.is_array() || v.empty()) throw ConfigError(f.at("schemes"), "expected a nonempty array of scheme names");
    s.schemes.clear();
    for (const auto& name : v) {
      if (!name.is_string()) throw ConfigError(f.at("schemes"), "expected scheme names");
      try {
        s.schemes.push_back(parse_scheme(name.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(f.at("schemes"), e.what());
      }
    }
  }
  if (f.has("diversity_window_db")) {
    const auto w = f.numbers("diversity_window_db");
    if (w.size() != 2 || !(w[1] > w[0])) throw ConfigError(f.at("diversity_window_db"), "expected [lo, hi] with lo < hi");
    s.diversity_window_db = std::pair{w[0], w[1]};
  }
  if (f.has("simulate_at_db")) s.simulate_at_db = f.numbers("simulate_at_db");
  s.sim_trials = f.count("sim_trials", s.sim_trials);
  f.finish();
  return s;
}

inline SimulateConfig parse_simulate(Fields f) {
  SimulateConfig s;
  s.trials = f.count("trials", s.trials);
  if (f.has("levels")) {
    QuantizerDesign d;
    d.levels = f.numbers("levels");
    d.boundaries = f.has("boundaries") ? f.numbers("boundaries") : d.levels;
    try {
      d.validate();
    } catch (const std::domain_error& e) {
      throw ConfigError(f.at("levels"), e.what());
    }
    s.design = std::move(d);
  } else if (f.has("boundaries")) {
    throw ConfigError(f.at("boundaries"), "given without levels");
  }
  f.finish();
  return s;
}

}  // namespace detail

/// Strict parse: unknown keys, wrong types and out-of-range values raise ConfigError.
inline RunConfig parse_config(const json& doc) {
  detail::Fields root(doc, "");
  RunConfig cfg;
  cfg.seed = root.count("seed", 1, 0);
  if (!root.has("channel")) throw ConfigError("channel", "missing required section");
  cfg.channel = detail::parse_channel(detail::Fields(root.raw("channel"), "channel"));
  if (!root.has("feedback")) throw ConfigError("feedback", "missing required section");
  cfg.feedback = detail::parse_feedback(detail::Fields(root.raw("feedback"), "feedback"));
  if (root.has("design")) cfg.design = detail::parse_design(detail::Fields(root.raw("design"), "design"), cfg.seed);
  if (root.has("sweep")) cfg.sweep = detail::parse_sweep(detail::Fields(root.raw("sweep"), "sweep"));
  if (root.has("simulate")) cfg.simulate = detail::parse_simulate(detail::Fields(root.raw("simulate"), "simulate"));
  root.finish();
  if (!cfg.design && !cfg.sweep && !cfg.simulate)
    throw ConfigError("<root>", "nothing to run: give at least one of design, sweep, simulate");
  if (cfg.simulate && !cfg.simulate->design && !cfg.design)
    throw ConfigError("simulate", "needs explicit levels or a design section");
  if (cfg.simulate && cfg.simulate->design && cfg.simulate->design->size() != cfg.feedback.k)
    throw ConfigError("simulate.levels", "length differs from feedback.k");
  return cfg;
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<document>", "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Files written by one run, name -> contents, in write order.
struct RunOutput {
  std::vector<std::pair<std::string, std::string>> files;
};

/// Executes every section of the config. Deterministic: identical config
/// bytes and seed give byte-identical outputs.
inline RunOutput execute(const RunConfig& cfg, std::string_view config_text) {
  RunOutput out;
  const auto tpl = cfg.experiment();
  const auto curve = OutageModel::for_spec(tpl.spec, tpl.options.mc_samples, tpl.options.mc_seed);
  const auto mapping = tpl.quasi_grey();
  auto dump = [](const json& j) { return j.dump(2) + "\n"; };

  std::optional<DesignResult> designed;
  if (cfg.design) {
    const double snr = db_to_linear(cfg.design->snr_db);
    const auto pb = tpl.problem(cfg.feedback.rho, snr, mapping);
    designed = detail::design_point(tpl, pb, curve, tpl.options);
    json j{{"channel", to_json(cfg.channel)},
           {"k", cfg.feedback.k},
           {"rho", cfg.feedback.rho},
           {"mapping", to_json(mapping)},
           {"snr_db", cfg.design->snr_db},
           {"no_csit_p_out", no_csit_baseline(curve, snr)},
           {"design", to_json(*designed)}};
    out.files.emplace_back("design.json", dump(j));
    if (!cfg.design->rho_grid.empty()) {
      const auto table = codebook_vs_rho(tpl, snr, cfg.design->rho_grid, cfg.design->include_identity, curve);
      out.files.emplace_back("codebook_vs_rho.json", dump(to_json(table)));
    }
  }
  if (cfg.simulate) {
    const auto design = cfg.simulate->design ? *cfg.simulate->design : designed->design;
    const auto rep = simulate(design, mapping, cfg.feedback.rho, cfg.channel, cfg.simulate->trials, cfg.seed,
                              cfg.feedback.ties);
    const auto analytic = evaluate_general(design, transition_matrix(mapping, cfg.feedback.rho, cfg.feedback.ties), curve);
    json j{{"levels", design.levels},
           {"boundaries", design.boundaries},
           {"analytic", to_json(analytic)},
           {"simulation", to_json(rep)}};
    out.files.emplace_back("simulate.json", dump(j));
  }
  if (cfg.sweep) {
    SweepOptions sopt;
    sopt.seed = cfg.seed;
    sopt.sim_trials = cfg.sweep->sim_trials;
    sopt.simulate_at_db = cfg.sweep->simulate_at_db;
    const auto sweep = sweep_snr(tpl, cfg.sweep->snr_db, cfg.sweep->schemes, curve, sopt);
    out.files.emplace_back("sweep.csv", sweep_to_csv(sweep));
    out.files.emplace_back("sweep.json", dump(to_json(sweep)));
    if (cfg.sweep->diversity_window_db) {
      const auto [lo, hi] = *cfg.sweep->diversity_window_db;
      json fits = json::object();
      for (Scheme s : cfg.sweep->schemes) fits[std::string(scheme_label(s))] = to_json(estimate_diversity(rows_for(sweep, s), lo, hi));
      out.files.emplace_back("diversity.json", dump(fits));
    }
  }

  json manifest{{"tool", "cosq"},
                {"version", kToolVersion},
                {"generator", kGeneratorName},
                {"seed", cfg.seed},
                {"mc_seed", tpl.options.mc_seed},
                {"config_hash", "fnv1a64:" + hex64(fnv1a64(config_text))}};
  json files = json::array();
  for (const auto& [name, body] : out.files) files.push_back({{"name", name}, {"fnv1a64", hex64(fnv1a64(body))}});
  manifest["outputs"] = std::move(files);
  out.files.emplace_back("manifest.json", dump(manifest));
  return out;
}

inline void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, body] : out.files) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << body;
  }
}

/// Runs a config file and writes its artifacts into out_dir. Returns 0 on
/// success, 2 for a configuration error and 3 for a numerical failure; the
/// reason goes to `err`.
inline int run_config(const std::filesystem::path& path, const std::filesystem::path& out_dir, std::ostream& err) {
  try {
    const auto text = read_file(path);
    const auto cfg = parse_config(parse_json_text(text));
    write_outputs(execute(cfg, text), out_dir);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace cosq
