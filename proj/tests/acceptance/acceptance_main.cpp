// Acceptance suite: every release gate in one binary, one printed line per
// criterion. Run through ctest or directly; exits nonzero when a gate fails.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "dnlab/coercivity.hpp"
#include "dnlab/muskat.hpp"
#include "dnlab/rng.hpp"
#include "dnlab/runner.hpp"

using namespace dnlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s — %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) { return runner::format_double(v); }

double field_dot(const SpectralField& a, const SpectralField& b) {
  double s = 0.0;
  for (int i = 0; i < a.grid().size(); ++i) s += a.value(i) * b.value(i);
  return s * a.grid().spacing();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dnlab_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

unsigned long long substream(unsigned long long seed, unsigned long long k) {
  return seed * 0x9E3779B97F4A7C15ull + (k + 1) * 0xBF58476D1CE4E5B9ull;
}

// Seeded geometry family used by criteria 2 and 3: alternating truncated
// half-spaces (slope <= slope_max) and strips (separation >= h_min).
struct Case {
  std::string kind;
  double slope;
  double h;
  DnOperator op;
};

Case make_case(const PeriodicGrid& grid, int nz, unsigned long long seed, int index,
               double slope_max, double h_min) {
  Rng rng(substream(seed, static_cast<unsigned long long>(index)));
  DnParams params;
  params.nz = nz;
  const double slope = slope_max * (0.25 + 0.75 * rng.uniform());
  if (index % 2 == 0) {
    BoundaryFn top = preset_random_lipschitz(grid, rng.raw(), slope);
    const double s = top.lipschitz;
    return Case{"half_space", s, 0.0,
                DnOperator(HalfSpaceGeometry(std::move(top), 8.0), params)};
  }
  BoundaryFn top = preset_random_lipschitz(grid, rng.raw(), 0.5 * slope);
  const double base = h_min + 0.1 + rng.uniform();
  BoundaryFn osc = preset_random_lipschitz(grid, rng.raw(), 0.5 * slope);
  SpectralField gap = constant(grid, base);
  if (osc.field.max_abs() > 0.0) {
    const double cap = std::min(1.0, 0.9 * (base - h_min) / osc.field.max_abs());
    gap = gap + cap * osc.field;
  }
  StripGeometry geom(top, BoundaryFn(top.field - gap), h_min);
  const double s = geom.top().lipschitz;
  const double h = geom.separation();
  return Case{"strip", s, h, DnOperator(std::move(geom), params)};
}

}  // namespace

TEST_CASE("criterion 1: flat-case oracle") {
  const fs::path dir = fresh_dir("c1");
  json cfg = {{"nx", 256}, {"nz", 128}, {"max_mode", 8}, {"tol", 1e-4}, {"order_min", 1.9}};
  const int code = runner::run_command("flat-check", cfg, dir);
  const json rep = json::parse(slurp(dir / "report.json"));
  const double err = rep.at("max_rel_error").get<double>();
  const double order = rep.at("min_order").get<double>();
  const bool pass = code == 0 && err <= 1e-4 && order >= 1.9;
  report(1, pass,
         "max rel error " + fmt(err) + " <= 1e-4 over a in {1,2,inf(L=8)}, k in 1..8; "
         "self-convergence order " + fmt(order) + " >= 1.9");
  CHECK(pass);
}

TEST_CASE("criterion 2: discrete Stokes identity") {
  const PeriodicGrid grid(256);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    Case c = make_case(grid, 128, 20250811, i, 1.0, 0.5);
    SpectralField g = random_field(grid, substream(101, static_cast<unsigned long long>(i)));
    auto app = c.op.apply_full(g);
    const double rel =
        std::abs(app.pairing_trace - app.energy) / std::max(std::abs(app.energy), 1e-300);
    worst = std::max(worst, rel);
  }
  const bool pass = worst <= 1e-10;
  report(2, pass,
         "max |<G(g),g> - energy| / energy = " + fmt(worst) +
             " <= 1e-10 over 50 seeded geometry/data pairs (finite and truncated depth)");
  CHECK(pass);
}

TEST_CASE("criterion 3: coercivity direction over the Lipschitz family") {
  const Calibration cal = calibrate_flat_family();
  const PeriodicGrid grid(256);
  int failures = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    Case c = make_case(grid, 128, 424243, i, 1.0, 0.5);
    SpectralField g = random_field(grid, substream(77, static_cast<unsigned long long>(i)));
    CoercivityReport rep = certify(c.op, g, cal.c_cal);
    min_margin = std::min(min_margin, rep.ratio / (rep.c_cal * rep.structural_factor));
    if (!rep.pass) ++failures;
  }
  const bool pass = failures == 0;
  report(3, pass,
         "0 failures expected, got " + std::to_string(failures) + "; C_cal = " +
             fmt(cal.c_cal) + " (flat family), min ratio/(C_cal*structural) = " +
             fmt(min_margin) + " over 100 seeded boundaries");
  CHECK(pass);
}

TEST_CASE("criterion 4: sharp constants by Rayleigh minimization") {
  const PeriodicGrid grid(64);
  DnParams p;
  p.nz = 128;
  const double s1 =
      sharp_constant(DnOperator(StripGeometry(preset_flat(grid, 0.0), preset_flat(grid, -1.0)), p));
  const double s2 =
      sharp_constant(DnOperator(StripGeometry(preset_flat(grid, 0.0), preset_flat(grid, -2.0)), p));
  DnParams ph;
  ph.nz = 4096;
  const double sh = sharp_constant(DnOperator(HalfSpaceGeometry(preset_flat(grid, 0.0), 8.0), ph));
  const double e1 = std::abs(s1 - std::tanh(1.0));
  const double e2 = std::abs(s2 - std::tanh(2.0));
  const double eh = std::abs(sh - 1.0);
  const bool pass = e1 <= 1e-3 && e2 <= 1e-3 && eh <= 1e-6;
  report(4, pass,
         "strip a=1: " + fmt(s1) + " (err " + fmt(e1) + " <= 1e-3), a=2: " + fmt(s2) +
             " (err " + fmt(e2) + " <= 1e-3), half-space: " + fmt(sh) + " (err " +
             fmt(eh) + " <= 1e-6)");
  CHECK(pass);
}

TEST_CASE("criterion 5: convex pairing") {
  const Calibration cal = calibrate_flat_family();
  const PeriodicGrid grid(256);

  // (a) phi = z^2 reproduces twice the quadratic certificate.
  DnParams p;
  p.nz = 128;
  DnOperator op(HalfSpaceGeometry(preset_random_lipschitz(grid, 31, 0.5), 8.0), p);
  SpectralField g = random_field(grid, 67);
  ConvexPair square([](double z) { return z * z; }, [](double z) { return 2.0 * z; },
                    [](double) { return 2.0; }, 1.05 * g.max_abs());
  CoercivityReport quad = certify(op, g, cal.c_cal);
  CoercivityReport conv = convex_certify(op, g, square, cal.c_cal);
  const double pair_rel = std::abs(conv.pairing - 2.0 * quad.pairing) /
                          std::abs(2.0 * quad.pairing);
  const double ratio_rel = std::abs(conv.ratio - quad.ratio) / quad.ratio;

  // (b) phi = |z|^4: Psi matches 2 sqrt((p-1)/p) |z|^{p/2-1} z pointwise.
  ConvexPair quartic([](double z) { return z * z * z * z; },
                     [](double z) { return 4.0 * z * z * z; },
                     [](double z) { return 12.0 * z * z; }, 2.0);
  double psi_err = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double z = -2.0 + 4.0 * i / 100.0;
    psi_err = std::max(psi_err, std::abs(quartic.psi(z) - std::sqrt(3.0) * z * std::abs(z)));
  }

  // (c) 100-draw direction sweep with phi = |z|^4.
  int failures = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    Case c = make_case(grid, 128, 90210, i, 0.5, 0.5);
    SpectralField gi = random_field(grid, substream(55, static_cast<unsigned long long>(i)));
    ConvexPair pair([](double z) { return z * z * z * z; },
                    [](double z) { return 4.0 * z * z * z; },
                    [](double z) { return 12.0 * z * z; }, 1.05 * gi.max_abs() + 1e-9);
    CoercivityReport rep = convex_certify(c.op, gi, pair, cal.c_cal);
    min_margin = std::min(min_margin, rep.ratio / (rep.c_cal * rep.structural_factor));
    if (!rep.pass) ++failures;
  }

  const bool pass = pair_rel <= 1e-10 && ratio_rel <= 1e-10 && psi_err <= 1e-10 &&
                    failures == 0;
  report(5, pass,
         "phi=z^2 doubles the quadratic certificate (pairing rel " + fmt(pair_rel) +
             ", ratio rel " + fmt(ratio_rel) + " <= 1e-10); |z|^4 Psi matches sqrt(3) z|z| to " +
             fmt(psi_err) + " <= 1e-10; direction sweep failures " + std::to_string(failures) +
             "/100 (min margin " + fmt(min_margin) + ")");
  CHECK(pass);
}

TEST_CASE("criterion 6: empirical Poincare constant is finite and stable") {
  const PeriodicGrid grid(256);
  bool pass = true;
  std::string detail;
  for (double p : {2.0, 4.0}) {
    double min_first = std::numeric_limits<double>::infinity();
    double min_second = min_first;
    for (int i = 0; i < 1000; ++i) {
      SpectralField g = random_field(grid, substream(606, static_cast<unsigned long long>(i)));
      std::vector<double> qv(static_cast<size_t>(grid.size()));
      for (int m = 0; m < grid.size(); ++m) {
        const double v = g.value(m);
        qv[static_cast<size_t>(m)] = std::pow(std::abs(v), p / 2.0 - 1.0) * v;
      }
      const double qn = norm_wt_half(SpectralField(grid, std::move(qv)));
      const double ratio = std::pow(qn, 2.0 / p) / lp_norm(g, p);
      (i < 500 ? min_first : min_second) = std::min(i < 500 ? min_first : min_second, ratio);
    }
    const double c1 = 1.0 / min_first;
    const double c2 = 1.0 / min_second;
    const double spread = std::abs(c1 - c2) / (0.5 * (c1 + c2));
    const bool ok = std::isfinite(c1) && std::isfinite(c2) && spread < 0.05;
    pass = pass && ok;
    detail += "p=" + fmt(p) + ": C' halves " + fmt(c1) + " / " + fmt(c2) + " (spread " +
              fmt(spread) + " < 0.05)  ";
  }
  report(6, pass, detail + "over 1000 seeded zero-mean draws");
  CHECK(pass);
}

TEST_CASE("criterion 7: interface evolution, linear regime") {
  const PeriodicGrid grid(256);
  MuskatConfig cfg;
  DecayRecord rec = simulate(0.001 * harmonic(grid, 1, 1.0), 5.0, cfg);
  const DecayFit fit = fit_decay(rec, "l2", 0.5, 4.0);
  const bool rate_ok = std::abs(fit.lambda - 1.0) <= 1e-2;
  const bool mean_ok = rec.mean_drift_max <= 1e-9;
  const bool linf_ok = rec.linf_excess <= cfg.tol_max_rel;
  const bool lip_ok = rec.lip_excess <= 1e-3;
  const bool pass = rate_ok && mean_ok && linf_ok && lip_ok;
  report(7, pass,
         "lambda_L2 = " + fmt(fit.lambda) + " (|.-1| <= 1e-2), mean drift " +
             fmt(rec.mean_drift_max) + " <= 1e-9, sup-norm excess " + fmt(rec.linf_excess) +
             ", slope excess " + fmt(rec.lip_excess));
  CHECK(pass);
}

TEST_CASE("criterion 8: interface evolution, nonlinear decay") {
  const PeriodicGrid grid(256);
  MuskatConfig cfg;

  // Calibrate the decay-floor constant from the linearized reference run.
  DecayRecord lin = simulate(0.001 * harmonic(grid, 1, 1.0), 5.0, cfg);
  const double lambda_lin = fit_decay(lin, "l2", 0.5, 4.0).lambda;
  const double c_cal = lambda_lin * (1.0 + lin.lip_initial);

  SpectralField f0 = 0.3 * harmonic(grid, 1, 1.0) + 0.1 * harmonic(grid, 3, 1.0);
  const double lip0 = derivative(f0).max_abs();
  DecayRecord rec = simulate(f0, 20.0, cfg);

  bool fits_ok = true;
  std::string rates = "rates:";
  const DecayFit l2fit = fit_decay(rec, "l2", 2.0, 16.0);
  fits_ok = fits_ok && l2fit.lambda > 0.0 && l2fit.r2 >= 0.99;
  rates += " L2 " + fmt(l2fit.lambda) + " (R2 " + fmt(l2fit.r2) + ")";
  for (double a : {0.25, 0.5, 0.75}) {
    const DecayFit fit = fit_decay(rec, "c_alpha_" + fmt(a), 2.0, 16.0);
    fits_ok = fits_ok && fit.lambda > 0.0 && fit.r2 >= 0.99;
    rates += ", C^" + fmt(a) + " " + fmt(fit.lambda) + " (R2 " + fmt(fit.r2) + ")";
  }
  const double floor = c_cal / (1.0 + lip0);
  const bool floor_ok = l2fit.lambda >= floor;
  const IntegrabilityReport integ = integrability_check(rec);
  const bool tails_ok = integ.hhalf_tail_ratio < 0.01 && integ.dtf_tail_ratio < 0.01;

  const bool pass = fits_ok && floor_ok && tails_ok;
  report(8, pass,
         rates + "; all R2 >= 0.99 and lambda > 0; lambda_L2 >= " + fmt(floor) +
             " (c_cal " + fmt(c_cal) + " / (1+||f0'||= " + fmt(1.0 + lip0) +
             ")); tail ratios " + fmt(integ.hhalf_tail_ratio) + ", " +
             fmt(integ.dtf_tail_ratio) + " < 0.01");
  CHECK(pass);
}

TEST_CASE("criterion 9: byte-for-byte reproducibility from manifests") {
#ifndef DNLAB_CLI_PATH
#error "DNLAB_CLI_PATH must point at the CLI binary"
#endif
  const std::string cli = DNLAB_CLI_PATH;
  const fs::path base = fresh_dir("c9");
  const fs::path cfg_path = base / "sweep.json";
  {
    std::ofstream out(cfg_path);
    out << R"({"nx": 64, "nz": 32, "boundaries": 6, "draws_per_boundary": 1,
               "calibration": {"samples": 4, "nx": 32, "nz": 32}})";
  }
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const fs::path d1 = base / "run1", d2 = base / "run2", d3 = base / "rerun";
  bool pass = true;
  pass &= run("coercivity --config " + cfg_path.string() + " --seed 7 --threads 1 --out " +
              d1.string()) == 0;
  pass &= run("coercivity --config " + cfg_path.string() + " --seed 7 --threads 1 --out " +
              d2.string()) == 0;
  pass &= run("coercivity --config " + (d1 / "manifest.json").string() +
              " --threads 1 --out " + d3.string()) == 0;
  bool identical = true;
  for (const char* f : {"report.json", "ratios.csv", "manifest.json"}) {
    identical = identical && slurp(d1 / f) == slurp(d2 / f) && slurp(d1 / f) == slurp(d3 / f);
  }

  // simulation command: rerun its manifest as well
  const fs::path m1 = base / "mus1", m2 = base / "mus2";
  pass &= run("muskat --nx 64 --nz 32 --out " + m1.string()) == 0;
  pass &= run("muskat --config " + (m1 / "manifest.json").string() + " --out " + m2.string()) == 0;
  bool mus_identical = slurp(m1 / "trajectory.csv") == slurp(m2 / "trajectory.csv") &&
                       slurp(m1 / "decay.json") == slurp(m2 / "decay.json");

  // config errors are reported with exit code 1 and a line anchor
  {
    const fs::path bad = base / "bad.json";
    std::ofstream out(bad);
    out << "{\n  \"nx\": 64,\n  oops\n}\n";
    out.close();
    const std::string cmd = cli + " flat-check --config " + bad.string() + " 2> " +
                            (base / "err.txt").string() + " >/dev/null";
    const int rc = std::system(cmd.c_str());
    const bool anchored = slurp(base / "err.txt").find(":3:") != std::string::npos;
    pass = pass && WEXITSTATUS(rc) == 1 && anchored;
  }

  pass = pass && identical && mus_identical;
  report(9, pass,
         std::string("sweep rerun + manifest rerun byte-identical: ") +
             (identical ? "yes" : "no") + "; simulation manifest rerun byte-identical: " +
             (mus_identical ? "yes" : "no") + "; malformed config exits 1 with line anchor");
  CHECK(pass);
}
