// Command-line front end: every subcommand turns its flags into a config
// document, so flags and --config files go through the same validation.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cosq/cosq.hpp"

namespace {

using cosq::json;

struct Shared {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::uint64_t> trials;
  std::optional<double> snr_db;
  std::optional<int> k;
  std::optional<double> rho;
  std::string channel;
  std::optional<int> t;
  std::optional<int> r;
  std::optional<double> rate;
  std::string mapping;
  std::string ties;
};

void add_shared(CLI::App* app, Shared& s) {
  app->add_option("--config", s.config, "JSON config used as the base document");
  app->add_option("--seed", s.seed, "master seed");
  app->add_option("--out", s.out, "output directory (default: print to stdout)");
  app->add_option("--trials", s.trials, "Monte Carlo trials");
  app->add_option("--snr-db", s.snr_db, "design SNR in dB");
  app->add_option("--k", s.k, "number of feedback indices");
  app->add_option("--rho", s.rho, "feedback bit crossover probability");
  app->add_option("--channel", s.channel, "channel type")->check(CLI::IsMember({"siso", "miso", "simo", "mimo"}));
  app->add_option("--t", s.t, "transmit antennas");
  app->add_option("--r", s.r, "receive antennas");
  app->add_option("--rate", s.rate, "target rate in nats per channel use");
  app->add_option("--mapping", s.mapping, "quasi-grey, identity or comma-separated codewords");
  app->add_option("--ties", s.ties, "demapping tie rule")->check(CLI::IsMember({"higher-power", "lower-power"}));
}

std::vector<double> parse_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string cell; std::getline(ss, cell, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw cosq::ConfigError(field, "bad number '" + cell + "'");
    }
  }
  if (out.empty()) throw cosq::ConfigError(field, "empty list");
  return out;
}

json base_document(const Shared& s) {
  json doc = s.config.empty() ? json::object() : cosq::parse_json_text(cosq::read_file(s.config));
  if (!doc.is_object()) throw cosq::ConfigError("<root>", "expected an object");
  if (!doc.contains("channel")) doc["channel"] = {{"type", "siso"}, {"rate", 4.0}};
  if (!s.channel.empty()) {
    json ch{{"type", s.channel}};
    if (doc["channel"].is_object() && doc["channel"].contains("rate")) ch["rate"] = doc["channel"]["rate"];
    doc["channel"] = ch;
  }
  if (s.t) doc["channel"]["t"] = *s.t;
  if (s.r) doc["channel"]["r"] = *s.r;
  if (s.rate) doc["channel"]["rate"] = *s.rate;
  if (!doc.contains("feedback")) doc["feedback"] = {{"k", 2}};
  if (s.k) doc["feedback"]["k"] = *s.k;
  if (s.rho) doc["feedback"]["rho"] = *s.rho;
  if (!s.ties.empty()) doc["feedback"]["ties"] = s.ties;
  if (!s.mapping.empty()) {
    if (s.mapping == "quasi-grey" || s.mapping == "identity") {
      doc["feedback"]["mapping"] = s.mapping;
    } else {
      json words = json::array();
      for (double w : parse_list(s.mapping, "feedback.mapping")) {
        if (w < 0 || w != static_cast<double>(static_cast<std::uint32_t>(w)))
          throw cosq::ConfigError("feedback.mapping", "codewords must be nonnegative integers");
        words.push_back(static_cast<std::uint32_t>(w));
      }
      doc["feedback"]["mapping"] = words;
    }
  }
  if (s.seed) doc["seed"] = *s.seed;
  return doc;
}

json& section(json& doc, const char* name) {
  if (!doc.contains(name)) doc[name] = json::object();
  return doc[name];
}

void keep_only(json& doc, std::initializer_list<const char*> sections) {
  for (const char* name : {"design", "sweep", "simulate"}) {
    bool keep = false;
    for (const char* k : sections) keep = keep || std::string(k) == name;
    if (!keep) doc.erase(name);
  }
}

int finish(const json& doc, const Shared& s, const std::string& primary) {
  const auto text = doc.dump(2) + "\n";
  const auto cfg = cosq::parse_config(doc);
  const auto out = cosq::execute(cfg, text);
  if (!s.out.empty()) {
    cosq::write_outputs(out, s.out);
    std::cerr << "wrote " << out.files.size() << " files to " << s.out << '\n';
  } else {
    for (const auto& [name, body] : out.files)
      if (name == primary) std::cout << body;
  }
  return cosq::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power-control codebook design over noisy quantized feedback"};
  app.set_version_flag("--version", std::string(cosq::kToolVersion));
  app.require_subcommand(1);

  Shared s;
  bool general = false;
  auto* design = app.add_subcommand("design", "optimize a power codebook");
  add_shared(design, s);
  design->add_flag("--general", general, "optimize cell boundaries as well as levels");

  std::string levels, boundaries;
  auto* evaluate = app.add_subcommand("evaluate", "outage and average power of a given codebook");
  add_shared(evaluate, s);
  evaluate->add_option("--levels", levels, "comma-separated power levels")->required();
  evaluate->add_option("--boundaries", boundaries, "comma-separated cell boundaries (default: the levels)");

  auto* simulate = app.add_subcommand("simulate", "closed-loop Monte Carlo of a codebook");
  add_shared(simulate, s);
  simulate->add_option("--levels", levels, "comma-separated levels (default: optimize first)");
  simulate->add_option("--boundaries", boundaries, "comma-separated cell boundaries");

  double from_db = 0.0, to_db = 40.0, step_db = 5.0;
  std::vector<std::string> schemes;
  std::vector<double> window;
  auto* sweep = app.add_subcommand("sweep", "outage versus SNR for several schemes");
  add_shared(sweep, s);
  auto add_grid = [&](CLI::App* sub) {
    sub->add_option("--from-db", from_db, "first SNR point");
    sub->add_option("--to-db", to_db, "last SNR point");
    sub->add_option("--step-db", step_db, "SNR step");
    sub->add_option("--schemes", schemes, "no-csit noiseless-feedback noisy-feedback identity-mapping-noisy");
  };
  add_grid(sweep);

  auto* mapsearch = app.add_subcommand("mapsearch", "search for or check a quasi-grey bit mapping");
  add_shared(mapsearch, s);

  std::string rho_grid = "0,0.05,0.1,0.2,0.3,0.4,0.5";
  bool include_identity = false;
  auto* vs_rho = app.add_subcommand("codebook-vs-rho", "optimized levels across feedback crossover probabilities");
  add_shared(vs_rho, s);
  vs_rho->add_option("--rho-grid", rho_grid, "comma-separated crossover probabilities");
  vs_rho->add_flag("--identity", include_identity, "also design with the identity mapping");

  auto* diversity = app.add_subcommand("diversity", "diversity slope over an SNR window");
  add_shared(diversity, s);
  add_grid(diversity);
  diversity->add_option("--window", window, "lo hi in dB (default: the whole grid)")->expected(2);

  auto* run = app.add_subcommand("run", "execute every section of a config file as written");
  add_shared(run, s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cosq::kExitConfig;
  }

  try {
    json doc = base_document(s);
    auto sweep_grid = [&](json& sw) {
      if (!sw.contains("snr_db") || from_db != 0.0 || to_db != 40.0 || step_db != 5.0)
        sw["snr_db"] = {{"start", from_db}, {"stop", to_db}, {"step", step_db}};
      if (!schemes.empty()) sw["schemes"] = schemes;
      if (s.trials) sw["sim_trials"] = *s.trials;
    };
    auto design_snr = [&] {
      if (s.snr_db) section(doc, "design")["snr_db"] = *s.snr_db;
    };

    if (*run) {
      // the file runs as written; its raw bytes are what the manifest hashes
      if (s.config.empty()) throw cosq::ConfigError("--config", "run needs a config file");
      if (s.out.empty()) throw cosq::ConfigError("--out", "run writes files and needs an output directory");
      return cosq::run_config(s.config, s.out, std::cerr);
    }
    if (*design) {
      keep_only(doc, {"design"});
      section(doc, "design");
      design_snr();
      if (general) doc["design"]["general"] = true;
      return finish(doc, s, "design.json");
    }
    if (*evaluate) {
      const auto cfg = cosq::parse_config([&] {
        keep_only(doc, {"design"});
        section(doc, "design");
        design_snr();
        return doc;
      }());
      cosq::QuantizerDesign d;
      d.levels = parse_list(levels, "--levels");
      d.boundaries = boundaries.empty() ? d.levels : parse_list(boundaries, "--boundaries");
      try {
        d.validate();
      } catch (const std::domain_error& e) {
        throw cosq::ConfigError("--levels", e.what());
      }
      if (d.size() != cfg.feedback.k) throw cosq::ConfigError("--levels", "length differs from --k");
      const auto tpl = cfg.experiment();
      const auto curve = cosq::OutageModel::for_spec(tpl.spec, tpl.options.mc_samples, tpl.options.mc_seed);
      const auto mapping = tpl.quasi_grey();
      const auto tm = cosq::transition_matrix(mapping, cfg.feedback.rho, cfg.feedback.ties);
      const auto e = cosq::evaluate_general(d, tm, curve);
      json j{{"channel", cosq::to_json(cfg.channel)},
             {"k", cfg.feedback.k},
             {"rho", cfg.feedback.rho},
             {"mapping", cosq::to_json(mapping)},
             {"levels", d.levels},
             {"boundaries", d.boundaries},
             {"evaluation", cosq::to_json(e)}};
      if (cfg.design) j["no_csit_p_out_at_snr"] = cosq::no_csit_baseline(curve, cosq::db_to_linear(cfg.design->snr_db));
      std::cout << j.dump(2) << '\n';
      return cosq::kExitOk;
    }
    if (*simulate) {
      keep_only(doc, {"design", "simulate"});
      auto& sim = section(doc, "simulate");
      if (s.trials) sim["trials"] = *s.trials;
      if (!levels.empty()) {
        sim["levels"] = parse_list(levels, "--levels");
        if (!boundaries.empty()) sim["boundaries"] = parse_list(boundaries, "--boundaries");
      } else if (!sim.contains("levels")) {
        section(doc, "design");
      }
      design_snr();
      return finish(doc, s, "simulate.json");
    }
    if (*sweep) {
      keep_only(doc, {"design", "sweep"});
      sweep_grid(section(doc, "sweep"));
      return finish(doc, s, "sweep.csv");
    }
    if (*diversity) {
      keep_only(doc, {"design", "sweep"});
      auto& sw = section(doc, "sweep");
      sweep_grid(sw);
      if (!window.empty()) {
        sw["diversity_window_db"] = window;
      } else if (!sw.contains("diversity_window_db")) {
        sw["diversity_window_db"] = {from_db, to_db};
      }
      return finish(doc, s, "diversity.json");
    }
    if (*vs_rho) {
      keep_only(doc, {"design"});
      auto& d = section(doc, "design");
      design_snr();
      d["rho_grid"] = parse_list(rho_grid, "--rho-grid");
      if (include_identity) d["include_identity"] = true;
      return finish(doc, s, "codebook_vs_rho.json");
    }
    if (*mapsearch) {
      const auto cfg = cosq::parse_config([&] {
        keep_only(doc, {});
        doc["design"] = json::object();
        return doc;
      }());
      const double rho = cfg.feedback.rho > 0.0 ? cfg.feedback.rho : 0.1;
      json j{{"k", cfg.feedback.k}, {"rho", rho}};
      std::optional<cosq::BitMapping> mapping = cfg.feedback.mapping;
      if (!mapping) {
        if (auto preset = cosq::preset_mapping(cfg.feedback.k)) {
          mapping = preset;
          j["source"] = "preset";
        } else {
          try {
            mapping = cosq::search_quasi_grey(cfg.feedback.k, rho, cfg.feedback.ties);
          } catch (const std::invalid_argument& e) {
            throw cosq::ConfigError("feedback.k", e.what());
          }
          j["source"] = "search";
        }
      } else {
        j["source"] = "given";
      }
      if (!mapping) {
        j["mapping"] = nullptr;
        std::cout << j.dump(2) << '\n';
        return cosq::kExitNumerical;
      }
      j["mapping"] = cosq::to_json(*mapping);
      j["report"] = cosq::to_json(cosq::is_quasi_grey(*mapping, rho, cfg.feedback.ties));
      j["robust"] = cosq::is_quasi_grey_robust(*mapping, cfg.feedback.ties);
      j["transitions"] = cosq::to_json(cosq::transition_matrix(*mapping, rho, cfg.feedback.ties));
      std::cout << j.dump(2) << '\n';
      return cosq::kExitOk;
    }
  } catch (const cosq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cosq::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return cosq::kExitNumerical;
  }
  return cosq::kExitOk;
}
