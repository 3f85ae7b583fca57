#include "dnlab/runner.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include "dnlab/coercivity.hpp"
#include "dnlab/errors.hpp"
#include "dnlab/muskat.hpp"
#include "dnlab/rng.hpp"
#include "dnlab/version.hpp"

namespace dnlab::runner {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

namespace {

// ---- strict config access -------------------------------------------------

class ConfigView {
 public:
  ConfigView(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double def) {
    if (!take(key)) return def;
    return as_number(key);
  }
  double number_req(const std::string& key) {
    if (!take(key)) throw ConfigError(path_ + "." + key + ": required");
    return as_number(key);
  }
  int integer(const std::string& key, int def) {
    if (!take(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(path_ + "." + key + ": expected an integer");
    return v.get<int>();
  }
  unsigned long long seed_req() {
    if (!take("seed")) throw ConfigError(path_ + ".seed: required (sweeps take no implicit entropy)");
    const json& v = j_.at("seed");
    if (!v.is_number_integer()) throw ConfigError(path_ + ".seed: expected an integer");
    return v.get<unsigned long long>();
  }
  unsigned long long seed(unsigned long long def) {
    if (!take("seed")) return def;
    const json& v = j_.at("seed");
    if (!v.is_number_integer()) throw ConfigError(path_ + ".seed: expected an integer");
    return v.get<unsigned long long>();
  }
  bool boolean(const std::string& key, bool def) {
    if (!take(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected a boolean");
    return v.get<bool>();
  }
  std::string str(const std::string& key, std::string def) {
    if (!take(key)) return def;
    return str_value(key);
  }
  std::string str_req(const std::string& key) {
    if (!take(key)) throw ConfigError(path_ + "." + key + ": required");
    return str_value(key);
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> def) {
    if (!take(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(path_ + "." + key + ": expected an array");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(path_ + "." + key + ": expected numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  json raw(const std::string& key, json def) {
    if (!take(key)) return def;
    return j_.at(key);
  }

  void finish() {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) {
        throw ConfigError(path_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  bool take(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }
  double as_number(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
    return v.get<double>();
  }
  std::string str_value(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

unsigned long long substream(unsigned long long seed, unsigned long long k) {
  return seed * 0x9E3779B97F4A7C15ull + (k + 1) * 0xBF58476D1CE4E5B9ull;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_manifest(const std::filesystem::path& outdir, const std::string& command,
                    const json& resolved) {
  json manifest;
  manifest["tool"] = "dnlab";
  manifest["version"] = kVersion;
  manifest["command"] = command;
  manifest["config"] = resolved;
  write_json(outdir / "manifest.json", manifest);
}

// ---- boundary/datum presets ------------------------------------------------

BoundaryFn boundary_from_json(const json& spec, const PeriodicGrid& grid,
                              const std::string& path) {
  ConfigView v(spec, path);
  const std::string preset = v.str("preset", "flat");
  BoundaryFn out = [&]() -> BoundaryFn {
    if (preset == "flat") {
      return preset_flat(grid, v.number("level", 0.0));
    }
    if (preset == "single-mode") {
      return preset_single_mode(grid, v.integer("mode", 1), v.number("amplitude", 0.1),
                                v.number("phase", 0.0));
    }
    if (preset == "multi-mode") {
      const json modes = v.raw("modes", json::array());
      std::vector<std::pair<int, double>> list;
      for (const json& m : modes) {
        if (!m.is_array() || m.size() != 2) {
          throw ConfigError(path + ".modes: expected [mode, amplitude] pairs");
        }
        list.emplace_back(m[0].get<int>(), m[1].get<double>());
      }
      return preset_multi_mode(grid, list);
    }
    if (preset == "random-lip") {
      const auto seed = static_cast<unsigned long long>(v.number_req("seed"));
      return preset_random_lipschitz(grid, seed, v.number("slope", 0.5));
    }
    if (preset == "csv") {
      BoundaryFn b = boundary_from_csv(v.str_req("path"), grid.period());
      if (!(b.field.grid() == grid)) {
        throw ConfigError(path + ": CSV sample count does not match nx");
      }
      return b;
    }
    throw ConfigError(path + ".preset: unknown preset '" + preset + "'");
  }();
  v.finish();
  return out;
}

CalibrationOptions calibration_from_json(const json& spec, const std::string& path) {
  ConfigView v(spec, path);
  CalibrationOptions opts;
  opts.depth_min = v.number("depth_min", opts.depth_min);
  opts.depth_max = v.number("depth_max", opts.depth_max);
  opts.samples = v.integer("samples", opts.samples);
  opts.nx = v.integer("nx", opts.nx);
  opts.nz = v.integer("nz", opts.nz);
  v.finish();
  return opts;
}

json calibration_to_json(const CalibrationOptions& opts) {
  return json{{"depth_min", opts.depth_min},
              {"depth_max", opts.depth_max},
              {"samples", opts.samples},
              {"nx", opts.nx},
              {"nz", opts.nz}};
}

// Deterministic sweep geometry: even indices are half-spaces, odd indices are
// strips with separation at least h_min.
struct SweepCase {
  std::string kind;
  double slope = 0.0;
  double h = 0.0;
  DnOperator op;
};

SweepCase make_sweep_case(const PeriodicGrid& grid, int nz, double depth,
                          unsigned long long seed, int index, double slope_max,
                          double h_min) {
  Rng rng(substream(seed, static_cast<unsigned long long>(index)));
  DnParams params;
  params.nz = nz;
  const double slope = slope_max * (0.25 + 0.75 * rng.uniform());
  if (index % 2 == 0) {
    BoundaryFn top = preset_random_lipschitz(grid, rng.raw(), slope);
    return SweepCase{"half_space", top.lipschitz, 0.0,
                     DnOperator(HalfSpaceGeometry(std::move(top), depth), params)};
  }
  BoundaryFn top = preset_random_lipschitz(grid, rng.raw(), 0.5 * slope);
  const double base = h_min + 0.1 + rng.uniform();
  BoundaryFn osc = preset_random_lipschitz(grid, rng.raw(), 0.5 * slope);
  const double amp = osc.field.max_abs();
  SpectralField gap = constant(grid, base);
  if (amp > 0.0) {
    const double cap = std::min(1.0, 0.9 * (base - h_min) / amp);
    gap = gap + cap * osc.field;
  }
  SpectralField bottom = top.field - gap;
  StripGeometry geom(top, BoundaryFn(std::move(bottom)), h_min);
  const double s = geom.top().lipschitz;
  const double h = geom.separation();
  return SweepCase{"strip", s, h, DnOperator(std::move(geom), params)};
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string line;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

// ---- flat-check -------------------------------------------------------------

struct FlatCheckConfig {
  int nx = 256;
  int nz = 128;
  std::vector<double> depths = {1.0, 2.0, std::numeric_limits<double>::infinity()};
  double half_space_l = 8.0;
  int max_mode = 8;
  double tol = 1e-4;
  double order_min = 1.9;
};

FlatCheckConfig parse_flat_check(const json& j) {
  ConfigView v(j, "config");
  FlatCheckConfig cfg;
  cfg.nx = v.integer("nx", cfg.nx);
  cfg.nz = v.integer("nz", cfg.nz);
  cfg.half_space_l = v.number("depth", cfg.half_space_l);
  cfg.max_mode = v.integer("max_mode", cfg.max_mode);
  cfg.tol = v.number("tol", cfg.tol);
  cfg.order_min = v.number("order_min", cfg.order_min);
  if (v.has("depths")) {
    const json arr = v.raw("depths", json::array());
    cfg.depths.clear();
    for (const json& d : arr) {
      if (d.is_string() && d.get<std::string>() == "inf") {
        cfg.depths.push_back(std::numeric_limits<double>::infinity());
      } else if (d.is_number()) {
        cfg.depths.push_back(d.get<double>());
      } else {
        throw ConfigError("config.depths: entries must be numbers or \"inf\"");
      }
    }
  }
  v.finish();
  return cfg;
}

json flat_check_to_json(const FlatCheckConfig& cfg) {
  json depths = json::array();
  for (double d : cfg.depths) {
    if (std::isinf(d)) {
      depths.push_back("inf");
    } else {
      depths.push_back(d);
    }
  }
  return json{{"nx", cfg.nx},       {"nz", cfg.nz},   {"depths", depths},
              {"depth", cfg.half_space_l}, {"max_mode", cfg.max_mode},
              {"tol", cfg.tol},     {"order_min", cfg.order_min}};
}

double measured_flat_multiplier(const DnOperator& op, const PeriodicGrid& grid, int k) {
  SpectralField g = harmonic(grid, k, 1.0);
  SpectralField t = op.apply(g);
  return t.bins()[static_cast<size_t>(k)].real() / g.bins()[static_cast<size_t>(k)].real();
}

double flat_check_max_error(const FlatCheckConfig& cfg, int nz, json* cases) {
  const PeriodicGrid grid(cfg.nx);
  double max_err = 0.0;
  for (double depth : cfg.depths) {
    DnParams params;
    params.nz = nz;
    const bool inf = std::isinf(depth);
    DnOperator op =
        inf ? DnOperator(HalfSpaceGeometry(preset_flat(grid, 0.0), cfg.half_space_l), params)
            : DnOperator(StripGeometry(preset_flat(grid, 0.0), preset_flat(grid, -depth)),
                         params);
    for (int k = 1; k <= cfg.max_mode; ++k) {
      const double computed = measured_flat_multiplier(op, grid, k);
      const double exact = inf ? k : k * std::tanh(depth * k);
      const double rel = std::abs(computed - exact) / std::abs(exact);
      max_err = std::max(max_err, rel);
      if (cases) {
        cases->push_back(json{{"depth", inf ? json("inf") : json(depth)},
                              {"mode", k},
                              {"computed", computed},
                              {"exact", exact},
                              {"rel_error", rel}});
      }
    }
  }
  return max_err;
}

int run_flat_check(const FlatCheckConfig& cfg, const std::filesystem::path& outdir) {
  json cases = json::array();
  const double err_full = flat_check_max_error(cfg, cfg.nz, &cases);
  const double err_half = flat_check_max_error(cfg, cfg.nz / 2, nullptr);
  const double err_quarter = flat_check_max_error(cfg, cfg.nz / 4, nullptr);
  const double order1 = std::log2(err_quarter / err_half);
  const double order2 = std::log2(err_half / err_full);
  const double min_order = std::min(order1, order2);
  const bool pass = err_full <= cfg.tol && min_order >= cfg.order_min;

  json report;
  report["cases"] = cases;
  report["max_rel_error"] = err_full;
  report["resolutions"] = json::array({cfg.nz / 4, cfg.nz / 2, cfg.nz});
  report["errors_by_resolution"] = json::array({err_quarter, err_half, err_full});
  report["orders"] = json::array({order1, order2});
  report["min_order"] = min_order;
  report["tol"] = cfg.tol;
  report["order_min"] = cfg.order_min;
  report["pass"] = pass;
  write_json(outdir / "report.json", report);
  return pass ? kExitOk : kExitTolerance;
}

// ---- coercivity sweep -------------------------------------------------------

struct CoercivityConfig {
  int nx = 256;
  int nz = 128;
  unsigned long long seed = 0;
  int boundaries = 100;
  int draws_per_boundary = 2;
  double slope_max = 1.0;
  double h_min = 0.5;
  double depth = 8.0;
  CalibrationOptions calibration;
};

CoercivityConfig parse_coercivity(const json& j) {
  ConfigView v(j, "config");
  CoercivityConfig cfg;
  cfg.nx = v.integer("nx", cfg.nx);
  cfg.nz = v.integer("nz", cfg.nz);
  cfg.seed = v.seed_req();
  cfg.boundaries = v.integer("boundaries", cfg.boundaries);
  cfg.draws_per_boundary = v.integer("draws_per_boundary", cfg.draws_per_boundary);
  cfg.slope_max = v.number("slope_max", cfg.slope_max);
  cfg.h_min = v.number("h_min", cfg.h_min);
  cfg.depth = v.number("depth", cfg.depth);
  cfg.calibration = calibration_from_json(v.raw("calibration", json::object()), "config.calibration");
  v.finish();
  return cfg;
}

json coercivity_to_json(const CoercivityConfig& cfg) {
  return json{{"nx", cfg.nx},
              {"nz", cfg.nz},
              {"seed", cfg.seed},
              {"boundaries", cfg.boundaries},
              {"draws_per_boundary", cfg.draws_per_boundary},
              {"slope_max", cfg.slope_max},
              {"h_min", cfg.h_min},
              {"depth", cfg.depth},
              {"calibration", calibration_to_json(cfg.calibration)}};
}

int run_coercivity(const CoercivityConfig& cfg, const std::filesystem::path& outdir,
                   int threads) {
  const Calibration cal = calibrate_flat_family(cfg.calibration);
  const PeriodicGrid grid(cfg.nx);

  struct Row {
    int index;
    int draw;
    std::string kind;
    double slope, h, structural;
    CoercivityReport rep;
    double stokes_rel;
  };
  std::vector<Row> rows(static_cast<size_t>(cfg.boundaries) * cfg.draws_per_boundary,
                        Row{});
  parallel_for(cfg.boundaries, threads, [&](int b) {
    SweepCase sc = make_sweep_case(grid, cfg.nz, cfg.depth, cfg.seed, b, cfg.slope_max,
                                   cfg.h_min);
    for (int d = 0; d < cfg.draws_per_boundary; ++d) {
      const unsigned long long gseed =
          substream(cfg.seed, 1000003ull + static_cast<unsigned long long>(b) *
                                               static_cast<unsigned long long>(
                                                   cfg.draws_per_boundary) +
                                  static_cast<unsigned long long>(d));
      SpectralField g = random_field(grid, gseed);
      CoercivityReport rep = certify(sc.op, g, cal.c_cal);
      rep.seed = gseed;
      Row row;
      row.index = b;
      row.draw = d;
      row.kind = sc.kind;
      row.slope = sc.slope;
      row.h = sc.h;
      row.structural = rep.structural_factor;
      row.stokes_rel = std::abs(rep.pairing - rep.pairing_volume) /
                       std::max(std::abs(rep.pairing), 1e-300);
      row.rep = rep;
      rows[static_cast<size_t>(b) * cfg.draws_per_boundary + d] = std::move(row);
    }
  });

  int failures = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  double max_stokes = 0.0;
  std::string csv =
      "index,draw,kind,slope,h,structural,seed_g,pairing,energy,seminorm2,ratio,bound,"
      "margin,pass\n";
  for (const Row& row : rows) {
    const double bound = row.rep.c_cal * row.rep.structural_factor;
    const double margin = row.rep.ratio / bound;
    min_margin = std::min(min_margin, margin);
    max_stokes = std::max(max_stokes, row.stokes_rel);
    if (!row.rep.pass) ++failures;
    csv += csv_line({std::to_string(row.index), std::to_string(row.draw), row.kind,
                     format_double(row.slope), format_double(row.h),
                     format_double(row.structural), std::to_string(row.rep.seed),
                     format_double(row.rep.pairing), format_double(row.rep.pairing_volume),
                     format_double(row.rep.seminorm2), format_double(row.rep.ratio),
                     format_double(bound), format_double(margin),
                     row.rep.pass ? "1" : "0"});
  }
  write_text(outdir / "ratios.csv", csv);

  json family = json::array();
  for (const auto& [depth, c] : cal.family) family.push_back(json::array({depth, c}));
  json report;
  report["c_cal"] = cal.c_cal;
  report["calibration"] = json{{"at_depth", cal.at_depth}, {"family", family}};
  report["boundaries"] = cfg.boundaries;
  report["draws_per_boundary"] = cfg.draws_per_boundary;
  report["cases"] = static_cast<int>(rows.size());
  report["failures"] = failures;
  report["min_margin"] = min_margin;
  report["max_stokes_rel"] = max_stokes;
  report["pass"] = failures == 0;
  write_json(outdir / "report.json", report);
  return failures == 0 ? kExitOk : kExitTolerance;
}

// ---- convex sweep -------------------------------------------------------------

struct ConvexConfig {
  int nx = 256;
  int nz = 128;
  unsigned long long seed = 0;
  int draws = 100;
  double slope_max = 0.5;
  double h_min = 0.5;
  double depth = 8.0;
  double amplitude = 1.0;
  std::string phi = "quartic";
  CalibrationOptions calibration;
};

ConvexConfig parse_convex(const json& j) {
  ConfigView v(j, "config");
  ConvexConfig cfg;
  cfg.nx = v.integer("nx", cfg.nx);
  cfg.nz = v.integer("nz", cfg.nz);
  cfg.seed = v.seed_req();
  cfg.draws = v.integer("draws", cfg.draws);
  cfg.slope_max = v.number("slope_max", cfg.slope_max);
  cfg.h_min = v.number("h_min", cfg.h_min);
  cfg.depth = v.number("depth", cfg.depth);
  cfg.amplitude = v.number("amplitude", cfg.amplitude);
  cfg.phi = v.str("phi", cfg.phi);
  cfg.calibration = calibration_from_json(v.raw("calibration", json::object()), "config.calibration");
  v.finish();
  if (cfg.phi != "quartic" && cfg.phi != "square" && cfg.phi != "mixed") {
    throw ConfigError("config.phi: expected quartic|square|mixed");
  }
  return cfg;
}

json convex_to_json(const ConvexConfig& cfg) {
  return json{{"nx", cfg.nx},         {"nz", cfg.nz},
              {"seed", cfg.seed},     {"draws", cfg.draws},
              {"slope_max", cfg.slope_max}, {"h_min", cfg.h_min},
              {"depth", cfg.depth},   {"amplitude", cfg.amplitude},
              {"phi", cfg.phi},       {"calibration", calibration_to_json(cfg.calibration)}};
}

ConvexPair make_convex_pair(const std::string& name, double range) {
  if (name == "square") {
    return ConvexPair([](double z) { return z * z; }, [](double z) { return 2.0 * z; },
                      [](double) { return 2.0; }, range);
  }
  if (name == "quartic") {
    return ConvexPair([](double z) { return z * z * z * z; },
                      [](double z) { return 4.0 * z * z * z; },
                      [](double z) { return 12.0 * z * z; }, range);
  }
  // phi = z^4/12 + z^2, the non-homogeneous smooth profile
  return ConvexPair([](double z) { return z * z * z * z / 12.0 + z * z; },
                    [](double z) { return z * z * z / 3.0 + 2.0 * z; },
                    [](double z) { return z * z + 2.0; }, range);
}

int run_convex(const ConvexConfig& cfg, const std::filesystem::path& outdir, int threads) {
  const Calibration cal = calibrate_flat_family(cfg.calibration);
  const PeriodicGrid grid(cfg.nx);

  std::vector<CoercivityReport> reps(static_cast<size_t>(cfg.draws));
  std::vector<std::string> kinds(static_cast<size_t>(cfg.draws));
  parallel_for(cfg.draws, threads, [&](int i) {
    SweepCase sc =
        make_sweep_case(grid, cfg.nz, cfg.depth, cfg.seed, i, cfg.slope_max, cfg.h_min);
    SpectralField g =
        cfg.amplitude * random_field(grid, substream(cfg.seed, 5000011ull + i));
    ConvexPair pair = make_convex_pair(cfg.phi, 1.05 * g.max_abs() + 1e-9);
    CoercivityReport rep = convex_certify(sc.op, g, pair, cal.c_cal);
    rep.seed = substream(cfg.seed, 5000011ull + i);
    reps[static_cast<size_t>(i)] = std::move(rep);
    kinds[static_cast<size_t>(i)] = sc.kind;
  });

  int failures = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  std::string csv = "draw,kind,seed_g,pairing,seminorm2,ratio,bound,margin,pass\n";
  for (int i = 0; i < cfg.draws; ++i) {
    const CoercivityReport& rep = reps[static_cast<size_t>(i)];
    const double bound = rep.c_cal * rep.structural_factor;
    const double margin = rep.ratio / bound;
    min_margin = std::min(min_margin, margin);
    if (!rep.pass) ++failures;
    csv += csv_line({std::to_string(i), kinds[static_cast<size_t>(i)],
                     std::to_string(rep.seed), format_double(rep.pairing),
                     format_double(rep.seminorm2), format_double(rep.ratio),
                     format_double(bound), format_double(margin), rep.pass ? "1" : "0"});
  }
  write_text(outdir / "sweep.csv", csv);

  json report;
  report["phi"] = cfg.phi;
  report["c_cal"] = cal.c_cal;
  report["draws"] = cfg.draws;
  report["failures"] = failures;
  report["min_margin"] = min_margin;
  report["pass"] = failures == 0;
  write_json(outdir / "report.json", report);
  return failures == 0 ? kExitOk : kExitTolerance;
}

// ---- lp sweep -------------------------------------------------------------

struct LpConfig {
  int nx = 256;
  int nz = 128;
  unsigned long long seed = 0;
  int draws = 1000;
  int certify_draws = 16;
  std::vector<double> p_list = {2.0, 4.0};
  double slope_max = 0.5;
  double h_min = 0.5;
  double depth = 8.0;
  double stability_tol = 0.05;
  CalibrationOptions calibration;
};

LpConfig parse_lp(const json& j) {
  ConfigView v(j, "config");
  LpConfig cfg;
  cfg.nx = v.integer("nx", cfg.nx);
  cfg.nz = v.integer("nz", cfg.nz);
  cfg.seed = v.seed_req();
  cfg.draws = v.integer("draws", cfg.draws);
  cfg.certify_draws = v.integer("certify_draws", cfg.certify_draws);
  cfg.p_list = v.numbers("p", cfg.p_list);
  cfg.slope_max = v.number("slope_max", cfg.slope_max);
  cfg.h_min = v.number("h_min", cfg.h_min);
  cfg.depth = v.number("depth", cfg.depth);
  cfg.stability_tol = v.number("stability_tol", cfg.stability_tol);
  cfg.calibration = calibration_from_json(v.raw("calibration", json::object()), "config.calibration");
  v.finish();
  return cfg;
}

json lp_to_json(const LpConfig& cfg) {
  return json{{"nx", cfg.nx},
              {"nz", cfg.nz},
              {"seed", cfg.seed},
              {"draws", cfg.draws},
              {"certify_draws", cfg.certify_draws},
              {"p", cfg.p_list},
              {"slope_max", cfg.slope_max},
              {"h_min", cfg.h_min},
              {"depth", cfg.depth},
              {"stability_tol", cfg.stability_tol},
              {"calibration", calibration_to_json(cfg.calibration)}};
}

int run_lp(const LpConfig& cfg, const std::filesystem::path& outdir, int threads) {
  const Calibration cal = calibrate_flat_family(cfg.calibration);
  const PeriodicGrid grid(cfg.nx);

  bool all_pass = true;
  json p_results = json::array();
  std::string csv = "p,draw,lp_norm,q_seminorm,poincare_ratio\n";
  for (double p : cfg.p_list) {
    // Poincare statistics: norms only, the whole seeded ensemble.
    std::vector<double> ratios(static_cast<size_t>(cfg.draws));
    parallel_for(cfg.draws, threads, [&](int i) {
      SpectralField g = random_field(grid, substream(cfg.seed, 9000017ull + i));
      std::vector<double> qv(static_cast<size_t>(grid.size()));
      for (int m = 0; m < grid.size(); ++m) {
        const double val = g.value(m);
        qv[static_cast<size_t>(m)] = std::pow(std::abs(val), p / 2.0 - 1.0) * val;
      }
      const double qn = norm_wt_half(SpectralField(grid, std::move(qv)));
      ratios[static_cast<size_t>(i)] = std::pow(qn, 2.0 / p) / lp_norm(g, p);
    });
    double min_all = std::numeric_limits<double>::infinity();
    double min_first = min_all, min_second = min_all;
    for (int i = 0; i < cfg.draws; ++i) {
      const double r = ratios[static_cast<size_t>(i)];
      min_all = std::min(min_all, r);
      if (i < cfg.draws / 2) {
        min_first = std::min(min_first, r);
      } else {
        min_second = std::min(min_second, r);
      }
      csv += csv_line({format_double(p), std::to_string(i), "", "", format_double(r)});
    }
    const double c_first = 1.0 / min_first;
    const double c_second = 1.0 / min_second;
    const double stability = std::abs(c_first - c_second) / (0.5 * (c_first + c_second));

    // Direction checks through the full pairing on a smaller subset.
    std::vector<LpReport> lreps(static_cast<size_t>(cfg.certify_draws));
    parallel_for(cfg.certify_draws, threads, [&](int i) {
      SweepCase sc =
          make_sweep_case(grid, cfg.nz, cfg.depth, cfg.seed, i, cfg.slope_max, cfg.h_min);
      SpectralField g = random_field(grid, substream(cfg.seed, 11000021ull + i));
      lreps[static_cast<size_t>(i)] = lp_certify(sc.op, g, p, cal.c_cal);
    });
    int cert_failures = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    for (const LpReport& lr : lreps) {
      const double bound = lr.c_cal * lr.structural_factor * lr.psi_seminorm2;
      min_margin = std::min(min_margin, lr.pairing / bound);
      if (!lr.pass) ++cert_failures;
    }

    const bool finite = std::isfinite(c_first) && std::isfinite(c_second) && min_all > 0.0;
    const bool p_pass = finite && stability < cfg.stability_tol && cert_failures == 0;
    all_pass = all_pass && p_pass;
    p_results.push_back(json{{"p", p},
                             {"draws", cfg.draws},
                             {"min_poincare_ratio", min_all},
                             {"c_prime", 1.0 / min_all},
                             {"c_prime_first_half", c_first},
                             {"c_prime_second_half", c_second},
                             {"stability", stability},
                             {"certify_draws", cfg.certify_draws},
                             {"certify_failures", cert_failures},
                             {"certify_min_margin", min_margin},
                             {"pass", p_pass}});
  }
  write_text(outdir / "sweep.csv", csv);

  json report;
  report["c_cal"] = cal.c_cal;
  report["p_results"] = p_results;
  report["pass"] = all_pass;
  write_json(outdir / "report.json", report);
  return all_pass ? kExitOk : kExitTolerance;
}

// ---- sharp constant ---------------------------------------------------------

struct SharpConfig {
  int nx = 64;
  int nz = 128;
  unsigned long long seed = 1;
  std::string kind = "strip";
  double depth = 1.0;
  double slope = 0.0;  // > 0 draws a random Lipschitz top
  bool zero_mean = true;
  double tol = 1e-3;
  double eig_tol = 1e-8;
  int max_iterations = 200;
};

SharpConfig parse_sharp(const json& j) {
  ConfigView v(j, "config");
  SharpConfig cfg;
  cfg.nx = v.integer("nx", cfg.nx);
  cfg.nz = v.integer("nz", cfg.nz);
  cfg.seed = v.seed(cfg.seed);
  cfg.kind = v.str("kind", cfg.kind);
  cfg.depth = v.number("depth", cfg.depth);
  cfg.slope = v.number("slope", cfg.slope);
  cfg.zero_mean = v.boolean("zero_mean", cfg.zero_mean);
  cfg.tol = v.number("tol", cfg.tol);
  cfg.eig_tol = v.number("eig_tol", cfg.eig_tol);
  cfg.max_iterations = v.integer("max_iterations", cfg.max_iterations);
  v.finish();
  if (cfg.kind != "strip" && cfg.kind != "half-space") {
    throw ConfigError("config.kind: expected strip|half-space");
  }
  return cfg;
}

json sharp_to_json(const SharpConfig& cfg) {
  return json{{"nx", cfg.nx},       {"nz", cfg.nz},
              {"seed", cfg.seed},   {"kind", cfg.kind},
              {"depth", cfg.depth}, {"slope", cfg.slope},
              {"zero_mean", cfg.zero_mean}, {"tol", cfg.tol},
              {"eig_tol", cfg.eig_tol}, {"max_iterations", cfg.max_iterations}};
}

int run_sharp(const SharpConfig& cfg, const std::filesystem::path& outdir) {
  const PeriodicGrid grid(cfg.nx);
  BoundaryFn top = cfg.slope > 0.0
                       ? preset_random_lipschitz(grid, cfg.seed, cfg.slope)
                       : preset_flat(grid, 0.0);
  DnParams params;
  params.nz = cfg.nz;
  DnOperator op = cfg.kind == "strip"
                      ? DnOperator(StripGeometry(top, preset_flat(grid, -cfg.depth)), params)
                      : DnOperator(HalfSpaceGeometry(top, cfg.depth), params);
  SharpConstantOptions opts;
  opts.zero_mean = cfg.zero_mean;
  opts.tol = cfg.eig_tol;
  opts.max_iterations = cfg.max_iterations;
  opts.seed = cfg.seed;
  const double value = sharp_constant(op, opts);

  json report;
  report["kind"] = cfg.kind;
  report["depth"] = cfg.depth;
  report["slope"] = cfg.slope;
  report["value"] = value;
  bool pass = true;
  if (cfg.slope == 0.0) {
    const double reference = cfg.kind == "strip" ? std::tanh(cfg.depth) : 1.0;
    const double err = std::abs(value - reference);
    pass = err <= cfg.tol;
    report["reference"] = reference;
    report["abs_error"] = err;
  }
  report["tol"] = cfg.tol;
  report["pass"] = pass;
  write_json(outdir / "report.json", report);
  return pass ? kExitOk : kExitTolerance;
}

// ---- muskat -------------------------------------------------------------------

struct MuskatRunConfig {
  int nx = 256;
  MuskatConfig sim;
  double T = 10.0;
  json f0 = json{{"preset", "single-mode"}, {"mode", 1}, {"amplitude", 0.1}};
  double fit_t0 = -1.0;
  double fit_t1 = -1.0;
  double decay_constant = 0.95;  // floor constant for the L2 rate check
  double r2_min = 0.99;
  bool snapshots = false;
};

MuskatRunConfig parse_muskat(const json& j) {
  ConfigView v(j, "config");
  MuskatRunConfig cfg;
  cfg.nx = v.integer("nx", cfg.nx);
  cfg.sim.nz = v.integer("nz", cfg.sim.nz);
  cfg.sim.depth = v.number("depth", cfg.sim.depth);
  cfg.T = v.number("T", cfg.T);
  cfg.sim.dt_max = v.number("dt_max", cfg.sim.dt_max);
  cfg.sim.cadence = v.number("cadence", cfg.sim.cadence);
  cfg.sim.alphas = v.numbers("alphas", cfg.sim.alphas);
  cfg.sim.tol_max_rel = v.number("tol_max_rel", cfg.sim.tol_max_rel);
  cfg.sim.rk4 = v.boolean("rk4", cfg.sim.rk4);
  cfg.f0 = v.raw("f0", cfg.f0);
  cfg.fit_t0 = v.number("fit_t0", cfg.fit_t0);
  cfg.fit_t1 = v.number("fit_t1", cfg.fit_t1);
  cfg.decay_constant = v.number("decay_constant", cfg.decay_constant);
  cfg.r2_min = v.number("r2_min", cfg.r2_min);
  cfg.snapshots = v.boolean("snapshots", cfg.snapshots);
  v.finish();
  return cfg;
}

json muskat_to_json(const MuskatRunConfig& cfg) {
  return json{{"nx", cfg.nx},
              {"nz", cfg.sim.nz},
              {"depth", cfg.sim.depth},
              {"T", cfg.T},
              {"dt_max", cfg.sim.dt_max},
              {"cadence", cfg.sim.cadence},
              {"alphas", cfg.sim.alphas},
              {"tol_max_rel", cfg.sim.tol_max_rel},
              {"rk4", cfg.sim.rk4},
              {"f0", cfg.f0},
              {"fit_t0", cfg.fit_t0},
              {"fit_t1", cfg.fit_t1},
              {"decay_constant", cfg.decay_constant},
              {"r2_min", cfg.r2_min},
              {"snapshots", cfg.snapshots}};
}

std::string alpha_key(double a) { return "c_alpha_" + format_double(a); }

int run_muskat(const MuskatRunConfig& cfg, const std::filesystem::path& outdir) {
  const PeriodicGrid grid(cfg.nx);
  const SpectralField f0 = boundary_from_json(cfg.f0, grid, "config.f0").field;

  DecayRecord rec;
  try {
    rec = simulate(f0, cfg.T, cfg.sim);
  } catch (const StabilityViolation& e) {
    std::cerr << "muskat: " << e.what() << "\n";
    json report;
    report["error"] = "stability_violation";
    report["message"] = e.what();
    report["step"] = e.step;
    report["time"] = e.time;
    write_json(outdir / "decay.json", report);
    return kExitStability;
  }

  // Trajectory CSV (header only when T = 0).
  std::string header = "t,l2,hhalf,linf,lipschitz";
  for (double a : rec.alphas) header += "," + alpha_key(a);
  header += ",dtf_hneghalf\n";
  std::string csv = header;
  for (const DecaySample& s : rec.samples) {
    std::vector<std::string> cells = {format_double(s.t), format_double(s.l2),
                                      format_double(s.hhalf), format_double(s.linf),
                                      format_double(s.lipschitz)};
    for (double c : s.c_alpha) cells.push_back(format_double(c));
    cells.push_back(format_double(s.dtf_hneghalf));
    csv += csv_line(cells);
  }
  write_text(outdir / "trajectory.csv", csv);

  json report;
  report["depth_used"] = rec.depth_used;
  report["steps"] = rec.steps;
  report["samples"] = static_cast<int>(rec.samples.size());
  report["mean"] = json{{"initial", rec.mean_initial}, {"drift_max", rec.mean_drift_max}};
  report["max_principle"] = json{{"linf_excess", rec.linf_excess},
                                 {"lip_excess", rec.lip_excess},
                                 {"lip_status", rec.lip_status}};

  bool pass = true;
  if (cfg.T > 0.0) {
    const double t0 = cfg.fit_t0 >= 0.0 ? cfg.fit_t0 : 0.1 * cfg.T;
    const double t1 = cfg.fit_t1 >= 0.0 ? cfg.fit_t1 : 0.8 * cfg.T;
    json rates, r2s;
    std::vector<std::string> fit_keys = {"l2", "hhalf", "dtf_hneghalf"};
    for (double a : rec.alphas) fit_keys.push_back(alpha_key(a));
    bool fits_ok = true;
    double lambda_l2 = 0.0;
    for (const std::string& key : fit_keys) {
      try {
        const DecayFit fit = fit_decay(rec, key, t0, t1);
        rates[key] = fit.lambda;
        r2s[key] = fit.r2;
        if (key == "l2") lambda_l2 = fit.lambda;
        if (key == "l2" || key.rfind("c_alpha_", 0) == 0) {
          fits_ok = fits_ok && fit.lambda > 0.0 && fit.r2 >= cfg.r2_min;
        }
      } catch (const Error& e) {
        rates[key] = nullptr;
        r2s[key] = nullptr;
        if (key == "l2" || key.rfind("c_alpha_", 0) == 0) fits_ok = false;
      } catch (const std::invalid_argument&) {
        rates[key] = nullptr;
        r2s[key] = nullptr;
      }
    }
    report["rates"] = rates;
    report["r2"] = r2s;
    report["fit_window"] = json::array({t0, t1});

    const double floor_l2 = cfg.decay_constant / (1.0 + rec.lip_initial);
    const bool floor_ok = lambda_l2 >= floor_l2;
    const bool mean_ok = rec.mean_drift_max <= 1e-9;
    const bool linf_ok = rec.linf_excess <= cfg.sim.tol_max_rel;
    const bool lip_ok = rec.lip_status <= 1;
    const IntegrabilityReport integ = integrability_check(rec);
    report["floors"] = json{{"l2", floor_l2},
                            {"decay_constant", cfg.decay_constant},
                            {"lip_initial", rec.lip_initial},
                            {"lambda_l2", lambda_l2}};
    report["integrability"] = json{{"hhalf_sq_integral", integ.hhalf_sq_integral},
                                   {"dtf_sq_integral", integ.dtf_sq_integral},
                                   {"hhalf_tail_ratio", integ.hhalf_tail_ratio},
                                   {"dtf_tail_ratio", integ.dtf_tail_ratio}};
    report["pass_flags"] = json{{"fits", fits_ok},
                                {"l2_floor", floor_ok},
                                {"mean_conserved", mean_ok},
                                {"linf_max_principle", linf_ok},
                                {"lip_max_principle", lip_ok}};
    pass = fits_ok && floor_ok && mean_ok && linf_ok && lip_ok;
  }
  report["pass"] = pass;
  write_json(outdir / "decay.json", report);
  return pass ? kExitOk : kExitTolerance;
}

}  // namespace

int run_command(const std::string& command, const json& config,
                const std::filesystem::path& outdir, int threads) {
  try {
    std::filesystem::create_directories(outdir);
    if (command == "flat-check") {
      const FlatCheckConfig cfg = parse_flat_check(config);
      write_manifest(outdir, command, flat_check_to_json(cfg));
      return run_flat_check(cfg, outdir);
    }
    if (command == "coercivity") {
      const CoercivityConfig cfg = parse_coercivity(config);
      write_manifest(outdir, command, coercivity_to_json(cfg));
      return run_coercivity(cfg, outdir, threads);
    }
    if (command == "convex") {
      const ConvexConfig cfg = parse_convex(config);
      write_manifest(outdir, command, convex_to_json(cfg));
      return run_convex(cfg, outdir, threads);
    }
    if (command == "lp") {
      const LpConfig cfg = parse_lp(config);
      write_manifest(outdir, command, lp_to_json(cfg));
      return run_lp(cfg, outdir, threads);
    }
    if (command == "sharp") {
      const SharpConfig cfg = parse_sharp(config);
      write_manifest(outdir, command, sharp_to_json(cfg));
      return run_sharp(cfg, outdir);
    }
    if (command == "muskat") {
      const MuskatRunConfig cfg = parse_muskat(config);
      write_manifest(outdir, command, muskat_to_json(cfg));
      return run_muskat(cfg, outdir);
    }
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NoConvergence& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitTolerance;
  }
}

int run_manifest(const json& manifest, const std::filesystem::path& outdir, int threads) {
  if (!manifest.is_object() || !manifest.contains("command") || !manifest.contains("config")) {
    throw ConfigError("manifest: expected object with 'command' and 'config'");
  }
  return run_command(manifest.at("command").get<std::string>(), manifest.at("config"),
                     outdir, threads);
}

}  // namespace dnlab::runner
