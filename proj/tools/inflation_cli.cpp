#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "inflation/experiments.hpp"

namespace {

using inflation::ExperimentConfig;
using inflation::Settings;

/// Flag values kept as text so they go through the same setter as the
/// config file and override it.
struct FlagSet {
  std::vector<std::pair<std::string, CLI::Option*>> options;
  std::vector<std::pair<std::string, std::string>> scalars;
  std::vector<std::string> mus;
  CLI::Option* mu_option = nullptr;
  std::string config;

  Settings settings() const {
    Settings out;
    for (std::size_t k = 0; k < options.size(); ++k)
      if (options[k].second->count() > 0) out.emplace_back(options[k].first, scalars[k].second);
    if (mu_option && mu_option->count() > 0) {
      std::string joined;
      for (const auto& m : mus) joined += (joined.empty() ? "" : ",") + m;
      out.emplace_back("mu", joined);
    }
    return out;
  }
};

void add_flags(CLI::App* sub, FlagSet& f) {
  static const std::vector<std::pair<std::string, std::string>> names = {
      {"s", "Sobolev exponent s"},
      {"eps", "smallness parameter epsilon"},
      {"mode", "euler or ns"},
      {"n-override", "desk-scale replacement for N in t*"},
      {"grid", "spectral cube side or solver cells per direction"},
      {"box-factor", "spectral box side in ring cross-section diameters"},
      {"cfl", "CFL number of the solver"},
      {"t-end", "final time (default t*)"},
      {"snapshots", "number of time intervals recorded"},
      {"out", "output stem for CSV, fits, assertions and plot script"},
      {"padding", "solver box padding in cross-section diameters"},
      {"ring-scale", "ring radius in units of 1/nu"},
      {"swirl-free", "drop the swirl (true/false)"},
      {"late", "late probe time in units of t*"},
      {"samples", "random support points for identity checks"},
      {"tol", "exponent tolerance"},
      {"composed-tol", "tolerance for composed exponents"},
      {"threads", "worker threads (0 = all cores)"}};
  f.scalars.reserve(names.size());
  for (const auto& [name, help] : names) {
    f.scalars.emplace_back(name, std::string());
    f.options.emplace_back(name, sub->add_option("--" + name, f.scalars.back().second, help));
  }
  f.mu_option = sub->add_option("--mu", f.mus, "mu value; repeat for a sweep");
  sub->add_option("--config", f.config, "config file of 'key = value' lines");
}

void print_result(const inflation::ExperimentResult& r) {
  for (const auto& fit : r.fits)
    std::printf("fit %-28s slope %.6g  r2 %.6g  target %.6g +- %.3g\n", fit.name.c_str(), fit.fit.slope,
                fit.fit.r2, fit.target, fit.tolerance);
  for (const auto& a : r.assertions)
    std::printf("%s %-36s observed %.6g  in [%.6g, %.6g]  (%s)\n", a.pass ? "PASS" : "FAIL",
                a.name.c_str(), a.observed, a.lower, a.upper, a.relation.c_str());
  if (r.aborted) std::printf("ABORT %s\n", r.abort_reason.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vortex-ring norm-inflation experiments"};
  app.require_subcommand(1);
  const std::vector<std::string> experiments = {"verify-data", "inflate", "error-scaling", "compare",
                                                "oracle"};
  std::vector<FlagSet> flags(experiments.size());
  std::vector<CLI::App*> subs;
  for (std::size_t k = 0; k < experiments.size(); ++k) {
    subs.push_back(app.add_subcommand(experiments[k]));
    add_flags(subs.back(), flags[k]);
  }
  subs[0]->description("norms of the initial data across a mu sweep");
  subs[1]->description("time series of the approximate solution's norms");
  subs[2]->description("size of the error field across a mu sweep");
  subs[3]->description("solver run compared with the approximate solution");
  subs[4]->description("construction identities and norm-path equivalences");

  std::string fit_in, fit_x = "mu", fit_y;
  auto* fit = app.add_subcommand("fit", "log-log exponent fit of two CSV columns");
  fit->add_option("--in", fit_in, "CSV file")->required();
  fit->add_option("--x", fit_x, "x column");
  fit->add_option("--y", fit_y, "y column")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) {
      std::ifstream in(fit_in, std::ios::binary);
      if (!in) throw inflation::ConfigError("cannot open '" + fit_in + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      const auto f = inflation::cmd_fit(inflation::parse_csv(buf.str()), fit_x, fit_y);
      std::printf("slope,intercept,r2,samples\n%s,%s,%s,%zu\n", inflation::format_double(f.slope).c_str(),
                  inflation::format_double(f.intercept).c_str(), inflation::format_double(f.r2).c_str(),
                  f.pairs.size());
      return 0;
    }
    for (std::size_t k = 0; k < experiments.size(); ++k) {
      if (!subs[k]->parsed()) continue;
      ExperimentConfig base;
      const Settings file = flags[k].config.empty() ? Settings{} : inflation::read_config_file(flags[k].config);
      ExperimentConfig cfg = inflation::resolve_config(base, file, flags[k].settings());
      cfg.experiment = experiments[k];
      const auto result = inflation::run_experiment(cfg);
      print_result(result);
      inflation::write_outputs(result, cfg.out);
      return result.exit_code();
    }
  } catch (const inflation::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  }
  return 2;
}
