#pragma once

/// Experiment harness: named experiments over mu sweeps, log-log exponent
/// fits, CSV tables and generated plot scripts.
///
/// Every experiment returns an ExperimentResult holding one table, the fits
/// it performed and the assertions it checked.  Output is deterministic:
/// sweep points are independent, computed in any order by a worker pool and
/// assembled by index.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "inflation/construction.hpp"
#include "inflation/norms.hpp"
#include "inflation/oracle.hpp"
#include "inflation/solver.hpp"

namespace inflation {

// ---------------------------------------------------------------------------
// Configuration.

/// Malformed configuration or flag value (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment = "verify-data";
  double s = 0.5;
  double eps = 0.5;
  std::vector<double> mus{16, 32, 64};
  Mode mode = Mode::inviscid;
  std::optional<double> n_override;
  double ring_scale = kDefaultRingScale;
  bool swirl_free = false;
  /// Spectral cube side, or solver cells per direction for `compare`.
  int grid = 128;
  double box_factor = 4.0;
  double cfl = kDefaultCfl;
  double padding = kDefaultPadding;
  /// Final time; t* when unset.
  std::optional<double> t_end;
  int snapshots = 8;
  /// Late probe time T = late * t* for the asymptotic Hdot^1 checks.
  double late = 100.0;
  int samples = 1000;
  double tol = 0.1;
  double composed_tol = 0.15;
  /// Worker threads; 0 picks the hardware concurrency.
  int threads = 0;
  /// Output stem; empty writes nothing.
  std::string out;

  Params params(double mu) const {
    Params p = make_params(s, eps, mu, mode, n_override, ring_scale);
    p.swirl_free = swirl_free;
    return p;
  }
};

namespace detail {

inline std::string trim(std::string_view v) {
  const auto is_space = [](char ch) { return ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n'; };
  while (!v.empty() && is_space(v.front())) v.remove_prefix(1);
  while (!v.empty() && is_space(v.back())) v.remove_suffix(1);
  return std::string(v);
}

inline double parse_number(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  }
  if (used != value.size() || !std::isfinite(x))
    throw ConfigError("'" + key + "' expects a number, got '" + value + "'");
  return x;
}

inline int parse_int(const std::string& key, const std::string& value) {
  const double x = parse_number(key, value);
  if (x != std::floor(x) || std::abs(x) > 1e9)
    throw ConfigError("'" + key + "' expects an integer, got '" + value + "'");
  return static_cast<int>(x);
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + value + "'");
}

}  // namespace detail

inline Mode parse_mode(const std::string& value) {
  if (value == "euler") return Mode::inviscid;
  if (value == "ns") return Mode::viscous;
  throw ConfigError("mode must be euler or ns, got '" + value + "'");
}

/// Applies one `key = value` setting.  Keys match the long flag names with
/// '-' or '_' interchangeable; `mu` takes a comma-separated list.
inline void apply_setting(ExperimentConfig& cfg, std::string key, const std::string& raw) {
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string value = detail::trim(raw);
  if (value.empty()) throw ConfigError("'" + key + "' has an empty value");
  if (key == "experiment") {
    cfg.experiment = value;
  } else if (key == "s") {
    cfg.s = detail::parse_number(key, value);
  } else if (key == "eps") {
    cfg.eps = detail::parse_number(key, value);
  } else if (key == "mu") {
    std::vector<double> mus;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) mus.push_back(detail::parse_number(key, detail::trim(item)));
    cfg.mus = std::move(mus);
  } else if (key == "mode") {
    cfg.mode = parse_mode(value);
  } else if (key == "n_override") {
    cfg.n_override = detail::parse_number(key, value);
  } else if (key == "ring_scale") {
    cfg.ring_scale = detail::parse_number(key, value);
  } else if (key == "swirl_free") {
    cfg.swirl_free = detail::parse_bool(key, value);
  } else if (key == "grid") {
    cfg.grid = detail::parse_int(key, value);
  } else if (key == "box_factor") {
    cfg.box_factor = detail::parse_number(key, value);
  } else if (key == "cfl") {
    cfg.cfl = detail::parse_number(key, value);
  } else if (key == "padding") {
    cfg.padding = detail::parse_number(key, value);
  } else if (key == "t_end") {
    cfg.t_end = detail::parse_number(key, value);
  } else if (key == "snapshots") {
    cfg.snapshots = detail::parse_int(key, value);
  } else if (key == "late") {
    cfg.late = detail::parse_number(key, value);
  } else if (key == "samples") {
    cfg.samples = detail::parse_int(key, value);
  } else if (key == "tol") {
    cfg.tol = detail::parse_number(key, value);
  } else if (key == "composed_tol") {
    cfg.composed_tol = detail::parse_number(key, value);
  } else if (key == "threads") {
    cfg.threads = detail::parse_int(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

using Settings = std::vector<std::pair<std::string, std::string>>;

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
inline Settings parse_config_text(std::string_view text) {
  Settings out;
  std::stringstream ss{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": missing key");
    out.emplace_back(key, detail::trim(std::string_view(body).substr(eq + 1)));
  }
  return out;
}

inline Settings read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// File settings first, then flags, so flags win.
inline ExperimentConfig resolve_config(ExperimentConfig base, const Settings& file,
                                       const Settings& flags) {
  for (const auto& [k, v] : file) apply_setting(base, k, v);
  for (const auto& [k, v] : flags) apply_setting(base, k, v);
  return base;
}

// ---------------------------------------------------------------------------
// Fits, assertions, tables.

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::vector<std::pair<double, double>> pairs;
};

/// Least squares of log y on log x.  r^2 is 1 when y is constant (the fit
/// is exact) and is clamped to [0, 1] against rounding.
inline FitResult fit_exponent(std::vector<std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("exponent fit needs at least 3 pairs");
  for (const auto& [x, y] : pairs)
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y))
      throw std::invalid_argument("exponent fit needs finite positive x and y");
  const double n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pairs) {
    mx += std::log(x);
    my += std::log(y);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pairs) {
    const double dx = std::log(x) - mx, dy = std::log(y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("exponent fit needs at least two distinct x");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (const auto& [x, y] : pairs) {
    const double e = std::log(y) - (f.intercept + f.slope * std::log(x));
    ss_res += e * e;
  }
  f.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  f.pairs = std::move(pairs);
  return f;
}

struct NamedFit {
  std::string name;
  std::string relation;
  FitResult fit;
  double target = 0.0;
  double tolerance = 0.0;
};

/// One checked statement: observed in [lower, upper], with a description of
/// the relation it tests.
struct Assertion {
  std::string name;
  std::string relation;
  double observed = 0.0;
  double lower = -INFINITY;
  double upper = INFINITY;
  bool pass = false;
};

inline Assertion check_range(std::string name, std::string relation, double observed, double lower,
                             double upper) {
  const bool ok = std::isfinite(observed) && observed >= lower && observed <= upper;
  return {std::move(name), std::move(relation), observed, lower, upper, ok};
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw std::logic_error("table row width mismatch");
    rows.push_back(std::move(row));
  }
  std::size_t column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::invalid_argument("no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }
};

/// 17 significant digits: round-trips every double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + t.columns[c];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += '\n';
  }
  return out;
}

/// Numeric CSV with a header row, as written by to_csv.
inline Table parse_csv(std::string_view text) {
  Table t;
  std::stringstream ss{std::string(text)};
  std::string line;
  if (!std::getline(ss, line)) throw std::invalid_argument("empty CSV");
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(detail::trim(cell));
  }
  while (std::getline(ss, line)) {
    if (detail::trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    std::string cell;
    while (std::getline(rs, cell, ',')) row.push_back(detail::parse_number("csv", detail::trim(cell)));
    t.add(std::move(row));
  }
  return t;
}

struct ExperimentResult {
  std::string name;
  Table table;
  std::vector<NamedFit> fits;
  std::vector<Assertion> assertions;
  bool aborted = false;
  std::string abort_reason;
  /// Plot hints for the generated script.
  std::string plot_x;
  std::vector<std::string> plot_y;
  bool plot_loglog = true;

  bool all_pass() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
  }
  /// 0 all assertions pass, 1 an assertion failed, 3 numerical abort.
  int exit_code() const { return aborted ? 3 : (all_pass() ? 0 : 1); }
};

/// Quotes a text cell when it holds a comma or a quote.
inline std::string csv_text(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char ch : v) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline std::string fits_csv(const ExperimentResult& r) {
  std::string out = "name,slope,intercept,r2,samples,target,tolerance,relation\n";
  for (const auto& f : r.fits)
    out += csv_text(f.name) + "," + format_double(f.fit.slope) + "," + format_double(f.fit.intercept) + "," +
           format_double(f.fit.r2) + "," + std::to_string(f.fit.pairs.size()) + "," +
           format_double(f.target) + "," + format_double(f.tolerance) + "," + csv_text(f.relation) + "\n";
  return out;
}

inline std::string assertions_csv(const ExperimentResult& r) {
  std::string out = "name,observed,lower,upper,pass,relation\n";
  for (const auto& a : r.assertions)
    out += csv_text(a.name) + "," + format_double(a.observed) + "," + format_double(a.lower) + "," +
           format_double(a.upper) + "," + (a.pass ? "1" : "0") + "," + csv_text(a.relation) + "\n";
  return out;
}

/// A standalone matplotlib script plotting the table, one curve per y column
/// and per mu when the table has a mu column that is not the x axis.
inline std::string plot_script(const ExperimentResult& r, const std::string& csv_name) {
  std::string ys;
  for (const auto& y : r.plot_y) ys += "\"" + y + "\", ";
  std::string s;
  s += "import csv\n";
  s += "import sys\n";
  s += "from collections import defaultdict\n\n";
  s += "import matplotlib\n";
  s += "matplotlib.use(\"Agg\")\n";
  s += "import matplotlib.pyplot as plt\n\n";
  s += "CSV = sys.argv[1] if len(sys.argv) > 1 else \"" + csv_name + "\"\n";
  s += "X = \"" + r.plot_x + "\"\n";
  s += "YS = [" + ys + "]\n";
  s += std::string("LOGLOG = ") + (r.plot_loglog ? "True" : "False") + "\n\n";
  s += "with open(CSV, newline=\"\") as fh:\n";
  s += "    rows = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]\n";
  s += "groups = defaultdict(list)\n";
  s += "for row in rows:\n";
  s += "    groups[row[\"mu\"] if \"mu\" in row and X != \"mu\" else None].append(row)\n";
  s += "fig, axes = plt.subplots(1, len(YS), figsize=(4.5 * len(YS), 4), squeeze=False)\n";
  s += "for ax, y in zip(axes[0], YS):\n";
  s += "    for key, pts in sorted(groups.items(), key=lambda kv: (kv[0] is None, kv[0])):\n";
  s += "        pts = [p for p in pts if not LOGLOG or (p[X] > 0 and p[y] > 0)]\n";
  s += "        label = None if key is None else f\"mu = {key:g}\"\n";
  s += "        ax.plot([p[X] for p in pts], [p[y] for p in pts], marker=\"o\", label=label)\n";
  s += "    if LOGLOG:\n";
  s += "        ax.set_xscale(\"log\")\n";
  s += "        ax.set_yscale(\"log\")\n";
  s += "    ax.set_xlabel(X)\n";
  s += "    ax.set_ylabel(y)\n";
  s += "    if any(k is not None for k in groups):\n";
  s += "        ax.legend()\n";
  s += "fig.tight_layout()\n";
  s += "fig.savefig(CSV.rsplit(\".\", 1)[0] + \".png\", dpi=150)\n";
  return s;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

/// Writes <stem>.csv, <stem>.fits.csv, <stem>.assertions.csv, <stem>.plot.py.
inline void write_outputs(const ExperimentResult& r, const std::string& stem) {
  if (stem.empty()) return;
  write_text(stem + ".csv", to_csv(r.table));
  write_text(stem + ".fits.csv", fits_csv(r));
  write_text(stem + ".assertions.csv", assertions_csv(r));
  const auto slash = stem.find_last_of('/');
  write_text(stem + ".plot.py", plot_script(r, (slash == std::string::npos ? stem : stem.substr(slash + 1)) + ".csv"));
}

// ---------------------------------------------------------------------------
// Worker pool.

/// Runs fn(i) for i in [0, n) on `threads` workers.  Rethrows the exception
/// of the lowest failing index, so failures are deterministic too.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(n, threads > 0 ? static_cast<std::size_t>(threads) : hw);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline void require_sweep(const ExperimentConfig& cfg) {
  if (cfg.mus.size() < 3) throw ConfigError("a mu sweep needs at least 3 values");
  for (std::size_t k = 1; k < cfg.mus.size(); ++k)
    if (!(cfg.mus[k] > cfg.mus[k - 1])) throw ConfigError("mu values must be strictly increasing");
}

inline std::string mu_tag(double mu) { return "mu=" + format_double(mu); }

inline NamedFit named_fit(std::string name, std::string relation, std::vector<std::pair<double, double>> pairs,
                          double target, double tol) {
  return {std::move(name), std::move(relation), fit_exponent(std::move(pairs)), target, tol};
}

inline Assertion fit_assertion(const NamedFit& f) {
  return check_range(f.name + "_slope", f.relation, f.fit.slope, f.target - f.tolerance,
                     f.target + f.tolerance);
}

/// Exponent of mu in ||E||_{L^2}: mu^-s (mu^-1 nu) (mu^{2-s} nu^{1/2}).
inline double error_l2_exponent(const Params& p) {
  return -p.s + (-1.0 + (1.0 - p.b)) + (2.0 - p.s) + (1.0 - p.b) / 2.0;
}

/// mu^-1 nu mu^{2-s} nu^{1/2} / mu^2: above 1 when the viscous term is no
/// larger than the inviscid error.
inline double dissipation_margin(const Params& p) {
  return p.smallness() * p.gradient_scale() / (p.mu * p.mu);
}

/// ||F_theta||_{L^2}.  `scale` is the size of the whole field: errors below
/// 1e-12 of it are rounding noise, since F_theta may vanish identically.
inline double theta_l2(const Construction& c, FieldId id, double t, double scale) {
  auto integrand = [&](double r, double z) {
    if (!c.in_support(r, z)) return 0.0;
    const double v = c.vector_field_jet<0>(id, t, r, z).theta.value();
    return v * v;
  };
  QuadratureOptions opt;
  opt.rel_tol = 1e-8;
  opt.abs_tol = 1e-24 * scale * scale;
  return std::sqrt(std::max(integrate_ring(c, integrand, false, opt).value, 0.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments.

/// Size of the initial data across the mu sweep: the H^s norm stays O(1)
/// while the W^{1,2} norm and the gradient sup grow with the exponents of the
/// construction.
inline ExperimentResult cmd_verify_data(const ExperimentConfig& cfg) {
  detail::require_sweep(cfg);
  ExperimentResult res;
  res.name = "verify-data";
  res.table.columns = {"mu", "hs_norm", "hdot_s_norm", "l2_norm", "w12_norm", "grad_linf_norm",
                       "wkinf_norm", "spectral_tail"};
  res.plot_x = "mu";
  res.plot_y = {"hs_norm", "w12_norm", "grad_linf_norm"};
  std::vector<std::vector<double>> rows(cfg.mus.size());
  parallel_for(cfg.mus.size(), cfg.threads, [&](std::size_t k) {
    const Construction c(cfg.params(cfg.mus[k]));
    const auto sp = power_spectrum(sample_grid3(c, FieldId::u0, 0.0, cfg.grid, cfg.box_factor));
    const auto hs = sobolev_norm(sp, cfg.s);
    const double l2 = gradient_norm_axisym(c, FieldId::u0, 0.0, 0, Integrability::two).value;
    const double w12 = wkp_norm_axisym(c, FieldId::u0, 0.0, 1, Integrability::two).value;
    const double sup0 = sup_norm_axisym(c, FieldId::u0, 0.0, 0).value;
    const double sup1 = sup_norm_axisym(c, FieldId::u0, 0.0, 1).value;
    rows[k] = {cfg.mus[k], hs.value, hs_norm(sp, cfg.s).value, l2, w12, sup1, sup0 + sup1,
               hs.truncation_error};
  });
  for (auto& row : rows) res.table.add(row);

  const Params p0 = cfg.params(cfg.mus.front());
  auto pairs = [&](const std::string& col) {
    std::vector<std::pair<double, double>> v;
    const auto j = res.table.column(col);
    for (const auto& row : res.table.rows) v.emplace_back(row[0], row[j]);
    return v;
  };
  res.fits.push_back(detail::named_fit("hs_norm", "initial data bounded in H^s uniformly in mu",
                                       pairs("hs_norm"), 0.0, cfg.tol));
  res.fits.push_back(detail::named_fit("w12_norm", "W^{1,2} norm of the data grows like mu^{1-s}",
                                       pairs("w12_norm"), 1.0 - cfg.s, cfg.tol));
  res.fits.push_back(detail::named_fit("grad_linf_norm",
                                       "gradient sup of the data grows like mu^{2-s} nu^{1/2}",
                                       pairs("grad_linf_norm"), 2.0 - cfg.s + (1.0 - p0.b) / 2.0,
                                       cfg.tol));
  for (const auto& f : res.fits) res.assertions.push_back(detail::fit_assertion(f));
  return res;
}

/// Time series of the approximate solution's norms: L^2 conservation,
/// Hdot^1 growth, the Hdot^s growth ratio and the interpolation chain that
/// turns Hdot^1 growth into Hdot^s growth.
inline ExperimentResult cmd_inflate(const ExperimentConfig& cfg) {
  if (cfg.mus.empty()) throw ConfigError("inflate needs at least one mu");
  if (cfg.snapshots < 1) throw ConfigError("snapshots must be positive");
  ExperimentResult res;
  res.name = "inflate";
  res.table.columns = {"mu", "t", "t_over_tstar", "hdot_s_norm", "hdot_1_norm", "hdot_2_norm",
                       "l2_norm", "interpolation_bound", "interpolation_excess"};
  res.plot_x = "t_over_tstar";
  res.plot_y = {"hdot_s_norm", "hdot_1_norm", "l2_norm"};
  res.plot_loglog = false;
  const double s = cfg.s;
  const int m = cfg.snapshots;

  // Spectral time series on [0, t_end].
  std::vector<std::vector<double>> rows(cfg.mus.size() * (m + 1));
  parallel_for(rows.size(), cfg.threads, [&](std::size_t idx) {
    const std::size_t k = idx / (m + 1);
    const int i = static_cast<int>(idx % (m + 1));
    const Params p = cfg.params(cfg.mus[k]);
    const Construction c(p);
    const double t_end = cfg.t_end.value_or(p.t_star);
    const double t = t_end * i / m;
    const auto sp = power_spectrum(sample_grid3(c, FieldId::ubar, t, cfg.grid, cfg.box_factor));
    const double hs = hs_norm(sp, s).value, h1 = hs_norm(sp, 1.0).value, h2 = hs_norm(sp, 2.0).value,
                 l2 = hs_norm(sp, 0.0).value;
    // s < 1: |u|_1 <= |u|_s^{1/(2-s)} |u|_2^{(1-s)/(2-s)}, i.e. |u|_s >= |u|_1^{2-s} |u|_2^{s-1}.
    // s >= 1: |u|_1 <= |u|_0^{1-1/s} |u|_s^{1/s}.
    double bound = 0.0, excess = 0.0;
    if (s < 1.0) {
      bound = std::pow(h1, 2.0 - s) * std::pow(h2, s - 1.0);
      excess = bound / hs - 1.0;
    } else {
      bound = std::pow(l2, 1.0 - 1.0 / s) * std::pow(hs, 1.0 / s);
      excess = h1 / bound - 1.0;
    }
    rows[idx] = {p.mu, t, t / p.t_star, hs, h1, h2, l2, bound, excess};
  });
  for (auto& row : rows) res.table.add(row);

  double worst_excess = -INFINITY;
  for (std::size_t k = 0; k < cfg.mus.size(); ++k) {
    const auto* first = &rows[k * (m + 1)];
    double drift = 0.0;
    for (int i = 0; i <= m; ++i) {
      drift = std::max(drift, std::abs(first[i][6] / first[0][6] - 1.0));
      worst_excess = std::max(worst_excess, first[i][8]);
    }
    res.assertions.push_back(check_range("l2_constant " + detail::mu_tag(cfg.mus[k]),
                                         "transport conserves the L^2 norm", drift, 0.0, 5e-3));
  }
  res.assertions.push_back(check_range("interpolation_chain",
                                       "Hdot^1 interpolated between Hdot^s and Hdot^2 (or L^2)",
                                       worst_excess, -INFINITY, 1e-12));
  {
    const auto& last = rows[(cfg.mus.size() - 1) * (m + 1)];
    const auto& end = rows[cfg.mus.size() * (m + 1) - 1];
    res.assertions.push_back(check_range("growth_ratio " + detail::mu_tag(cfg.mus.back()),
                                         "Hdot^s norm inflates by t_end", end[3] / last[3], 10.0,
                                         INFINITY));
  }

  // Late-time Hdot^1 by quadrature at T, 2T, 3T.  Linear growth means equal
  // increments; the offset from the constant part of the gradient cancels.
  if (cfg.late > 0.0) {
    std::vector<std::array<double, 3>> late(cfg.mus.size());
    parallel_for(cfg.mus.size(), cfg.threads, [&](std::size_t k) {
      const Params p = cfg.params(cfg.mus[k]);
      const Construction c(p);
      const double T = cfg.late * p.t_star;
      for (int j = 0; j < 3; ++j)
        late[k][j] = gradient_norm_axisym(c, FieldId::ubar, (j + 1) * T, 1, Integrability::two).value;
    });
    std::vector<std::pair<double, double>> slopes;
    for (std::size_t k = 0; k < cfg.mus.size(); ++k) {
      const Params p = cfg.params(cfg.mus[k]);
      const double lin = (late[k][2] - late[k][1]) / (late[k][1] - late[k][0]);
      res.assertions.push_back(check_range("h1_linear " + detail::mu_tag(p.mu),
                                           "Hdot^1 grows linearly in t at late times", lin, 0.9, 1.1));
      const double T = cfg.late * p.t_star;
      const double slope = (late[k][2] - late[k][1]) / T;
      slopes.emplace_back(p.mu, slope / (p.eps * p.eps * std::pow(p.mu, -p.s)));
    }
    if (slopes.size() >= 3) {
      const Params p0 = cfg.params(cfg.mus.front());
      res.fits.push_back(detail::named_fit(
          "h1_t_slope", "late Hdot^1 slope over eps^2 mu^-s grows like eps^2 mu^{3-s} nu^{1/2}",
          slopes, 3.0 - cfg.s + (1.0 - p0.b) / 2.0, cfg.tol));
      res.assertions.push_back(detail::fit_assertion(res.fits.back()));
    }
  }
  return res;
}

/// Size of the error field Ebar across the mu sweep at t in {0, t*/2, t*}.
inline ExperimentResult cmd_error_scaling(const ExperimentConfig& cfg) {
  detail::require_sweep(cfg);
  ExperimentResult res;
  res.name = "error-scaling";
  res.table.columns = {"mu", "t", "t_over_tstar", "e_l2", "e_h1", "e_theta_l2", "dissipation_margin"};
  res.plot_x = "mu";
  res.plot_y = {"e_l2", "e_h1"};
  const std::array<double, 3> fractions{0.0, 0.5, 1.0};
  std::vector<std::vector<double>> rows(cfg.mus.size() * fractions.size());
  parallel_for(rows.size(), cfg.threads, [&](std::size_t idx) {
    const std::size_t k = idx / fractions.size();
    const Params p = cfg.params(cfg.mus[k]);
    const Construction c(p);
    const double t = fractions[idx % fractions.size()] * p.t_star;
    // The error field is a sum of large terms; 1e-8 is above its rounding
    // floor at every swept mu.
    QuadratureOptions opt;
    opt.rel_tol = 1e-8;
    const double l2 = gradient_norm_axisym(c, FieldId::E, t, 0, Integrability::two, opt).value;
    const double g1 = gradient_norm_axisym(c, FieldId::E, t, 1, Integrability::two, opt).value;
    rows[idx] = {p.mu, t, t / p.t_star, l2, l2 + g1, detail::theta_l2(c, FieldId::E, t, l2),
                 detail::dissipation_margin(p)};
  });
  for (auto& row : rows) res.table.add(row);

  const Params p0 = cfg.params(cfg.mus.front());
  for (std::size_t f = 0; f < fractions.size(); ++f) {
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t k = 0; k < cfg.mus.size(); ++k) {
      const auto& row = rows[k * fractions.size() + f];
      pairs.emplace_back(row[0], row[3]);
    }
    res.fits.push_back(detail::named_fit(
        "e_l2 t/t*=" + format_double(fractions[f]),
        "error field L^2 norm scales like mu^-s (mu^-1 nu) mu^{2-s} nu^{1/2}", std::move(pairs),
        detail::error_l2_exponent(p0), cfg.composed_tol));
    res.assertions.push_back(detail::fit_assertion(res.fits.back()));
  }
  if (cfg.mode == Mode::viscous)
    for (double mu : cfg.mus)
      res.assertions.push_back(check_range("dissipation_margin " + detail::mu_tag(mu),
                                           "viscous term dominated by the inviscid error",
                                           detail::dissipation_margin(cfg.params(mu)),
                                           std::nextafter(1.0, 2.0), INFINITY));
  if (cfg.swirl_free) {
    double worst = 0.0;
    for (const auto& row : rows) worst = std::max(worst, std::abs(row[5]));
    res.assertions.push_back(
        check_range("swirl_free_e_theta", "no swirl, no azimuthal error", worst, 0.0, 0.0));
  }
  return res;
}

/// Runs the solver from u0 for each swept mu and compares with ubar.
inline ExperimentResult cmd_compare(const ExperimentConfig& cfg) {
  detail::require_sweep(cfg);
  if (cfg.snapshots < 1) throw ConfigError("snapshots must be positive");
  ExperimentResult res;
  res.name = "compare";
  res.table.columns = {"mu",   "t",      "t_over_tstar", "err_l2", "err_h1", "rel_err_l2",
                       "grad_linf", "margin", "energy", "swirl", "boundary_leak", "m_eps"};
  res.plot_x = "t_over_tstar";
  res.plot_y = {"rel_err_l2", "margin"};
  res.plot_loglog = false;
  std::vector<Trajectory> runs(cfg.mus.size());
  parallel_for(cfg.mus.size(), cfg.threads, [&](std::size_t k) {
    const Params p = cfg.params(cfg.mus[k]);
    const Construction c(p);
    const double t_end = cfg.t_end.value_or(p.t_star);
    std::vector<double> snaps;
    for (int i = 1; i < cfg.snapshots; ++i) snaps.push_back(t_end * i / cfg.snapshots);
    runs[k] = run(c, init_state(c, cfg.grid, cfg.grid, cfg.padding), t_end, cfg.cfl, snaps);
  });
  std::vector<std::pair<double, double>> finals;
  bool strictly_decreasing = true;
  for (std::size_t k = 0; k < cfg.mus.size(); ++k) {
    const Params p = cfg.params(cfg.mus[k]);
    const auto& tr = runs[k];
    double worst_margin = 0.0;
    for (const auto& d : tr.diagnostics) {
      res.table.add({p.mu, d.t, d.t / p.t_star, d.err_l2, d.err_h1, d.rel_err_l2(), d.grad_linf,
                     d.margin, d.energy, d.swirl, d.boundary_leak, tr.m_eps});
      worst_margin = std::max(worst_margin, d.margin);
    }
    if (tr.aborted) {
      res.aborted = true;
      res.abort_reason = detail::mu_tag(p.mu) + ": " + tr.abort_reason;
    }
    res.assertions.push_back(check_range("no_abort " + detail::mu_tag(p.mu),
                                         "no blowup proxy before t_end", tr.aborted ? 1.0 : 0.0, 0.0, 0.0));
    if (p.mu >= 32.0)
      res.assertions.push_back(check_range("bootstrap_margin " + detail::mu_tag(p.mu),
                                           "gradient stays below the bootstrap threshold",
                                           worst_margin, 0.0, std::nextafter(1.0, 0.0)));
    const double rel = tr.diagnostics.back().rel_err_l2();
    if (!finals.empty() && !(rel < finals.back().second)) strictly_decreasing = false;
    finals.emplace_back(p.mu, rel);
  }
  res.assertions.push_back(check_range("rel_err_decreasing",
                                       "relative L^2 error at t_end decreases strictly in mu",
                                       strictly_decreasing ? 1.0 : 0.0, 1.0, 1.0));
  const Params p0 = cfg.params(cfg.mus.front());
  bool fit_ok = true;
  for (const auto& [mu, v] : finals) fit_ok = fit_ok && v > 0.0 && std::isfinite(v);
  if (fit_ok) {
    res.fits.push_back(detail::named_fit("rel_err_l2", "relative L^2 error gains the smallness factor",
                                         finals, -p0.b, cfg.tol));
    const auto& f = res.fits.back().fit;
    res.assertions.push_back(check_range("rel_err_slope_negative", "relative error trend is negative",
                                         f.slope, -INFINITY, std::nextafter(0.0, -1.0)));
    res.assertions.push_back(check_range("rel_err_slope_bound",
                                         "slope at most -(1 - (1 - b)) + tolerance", f.slope,
                                         -INFINITY, -p0.b + cfg.tol));
    res.assertions.push_back(check_range("rel_err_r2", "trend is a clean power law", f.r2, 0.9, 1.0));
  } else {
    res.assertions.push_back(check_range("rel_err_fit", "relative errors are finite and positive",
                                         0.0, 1.0, 1.0));
  }
  return res;
}

/// Construction identities and the two norm-path equivalences.
inline ExperimentResult cmd_oracle(const ExperimentConfig& cfg) {
  if (cfg.mus.empty()) throw ConfigError("oracle needs at least one mu");
  ExperimentResult res;
  res.name = "oracle";
  res.table.columns = {"mu", "t", "t_over_tstar", "div_u0", "div_ubar", "transport", "momentum"};
  res.plot_x = "mu";
  res.plot_y = {"div_ubar", "momentum"};
  const std::array<double, 3> fractions{0.0, 0.5, 1.0};
  std::vector<std::vector<double>> rows(cfg.mus.size() * fractions.size());
  parallel_for(rows.size(), cfg.threads, [&](std::size_t idx) {
    const Params p = cfg.params(cfg.mus[idx / fractions.size()]);
    const Construction c(p);
    const double t = fractions[idx % fractions.size()] * p.t_star;
    const auto pts = support_points(c, cfg.samples);
    const auto rz = support_points_rz(c, cfg.samples);
    rows[idx] = {p.mu,
                 t,
                 t / p.t_star,
                 analytic_divergence(c, FieldId::u0, t, pts).max_error,
                 analytic_divergence(c, FieldId::ubar, t, pts).max_error,
                 transport_residual(c, t, rz).max_error,
                 momentum_residual(c, t, rz).max_error};
  });
  double div = 0.0, tr = 0.0, mom = 0.0;
  for (auto& row : rows) {
    div = std::max({div, row[3], row[4]});
    tr = std::max(tr, row[5]);
    mom = std::max(mom, row[6]);
    res.table.add(row);
  }
  res.assertions.push_back(check_range("divergence", "u0 and ubar are divergence free", div, 0.0, 1e-12));
  res.assertions.push_back(check_range("transport", "ubar_theta is transported by u0", tr, 0.0, 1e-10));
  res.assertions.push_back(check_range("momentum", "ubar solves the momentum equation up to E", mom,
                                       0.0, 1e-8));

  // Norm-path equivalences at the first swept mu.
  const Construction c(cfg.params(cfg.mus.front()));
  {
    const auto g16 = sample_grid3(c, FieldId::u0, 0.0, 16, cfg.box_factor);
    const auto sp = power_spectrum(g16);
    double worst = 0.0;
    for (double order : {0.0, cfg.s, 1.0}) {
      const double fast = hs_norm(sp, order).value, direct = direct_hs_norm(g16, order).value;
      worst = std::max(worst, std::abs(fast - direct) / direct);
    }
    res.assertions.push_back(check_range("spectral_vs_direct n=16",
                                         "FFT norm equals the direct Fourier sum", worst, 0.0, 1e-12));
  }
  {
    const double spectral =
        hs_norm(sample_grid3(c, FieldId::u0, 0.0, cfg.grid, cfg.box_factor), 0.0).value;
    const double quad = gradient_norm_axisym(c, FieldId::u0, 0.0, 0, Integrability::two).value;
    res.assertions.push_back(check_range("spectral_vs_quadrature_l2 n=" + std::to_string(cfg.grid),
                                         "grid L^2 norm matches quadrature",
                                         std::abs(spectral - quad) / quad, 0.0, 1e-3));
  }
  return res;
}

/// Fits y against x, log-log, from a CSV table.
inline FitResult cmd_fit(const Table& t, const std::string& x, const std::string& y) {
  const auto ix = t.column(x), iy = t.column(y);
  std::vector<std::pair<double, double>> pairs;
  for (const auto& row : t.rows) pairs.emplace_back(row[ix], row[iy]);
  return fit_exponent(std::move(pairs));
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "verify-data") return cmd_verify_data(cfg);
  if (cfg.experiment == "inflate") return cmd_inflate(cfg);
  if (cfg.experiment == "error-scaling") return cmd_error_scaling(cfg);
  if (cfg.experiment == "compare") return cmd_compare(cfg);
  if (cfg.experiment == "oracle") return cmd_oracle(cfg);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace inflation
