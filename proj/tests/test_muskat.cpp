#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dnlab/errors.hpp"
#include "dnlab/muskat.hpp"

using namespace dnlab;
namespace {

constexpr double kPi = std::numbers::pi;

MuskatConfig quick_config() {
  MuskatConfig cfg;
  cfg.nz = 64;
  cfg.solve_tol = 1e-12;
  return cfg;
}

}  // namespace

TEST_CASE("equilibria have vanishing right-hand side") {
  PeriodicGrid grid(64);
  SUBCASE("zero interface") {
    MuskatFlow flow(SpectralField::zero(grid), quick_config());
    CHECK(flow.rhs(flow.state().f).max_abs() <= 1e-12);
  }
  SUBCASE("flat interfaces are steady") {
    MuskatFlow flow(constant(grid, 0.7), quick_config());
    CHECK(flow.rhs(flow.state().f).max_abs() <= 1e-10);
    flow.step(1e-2);
    for (int i = 0; i < grid.size(); ++i) {
      CHECK(flow.state().f.value(i) == doctest::Approx(0.7).epsilon(1e-12));
    }
  }
}

TEST_CASE("rhs linearizes to -|D| f for small data") {
  PeriodicGrid grid(128);
  const double eps = 1e-3;
  MuskatFlow flow(eps * harmonic(grid, 1, 1.0), quick_config());
  SpectralField r = flow.rhs(flow.state().f);
  SpectralField lin = -eps * harmonic(grid, 1, 1.0);
  CHECK((r - lin).max_abs() <= 1e-3 * eps + 1e-12);
}

TEST_CASE("one IMEX step reproduces the exact linear decay factor") {
  PeriodicGrid grid(128);
  const double eps = 1e-4, dt = 1e-2;
  MuskatFlow flow(eps * harmonic(grid, 1, 1.0), quick_config());
  flow.step(dt);
  const double factor = flow.state().f.bins()[1].real() / (0.5 * eps);
  CHECK(std::abs(factor - std::exp(-dt)) <= 1e-4);
}

TEST_CASE("self-convergence of the splitting: two half steps vs one") {
  PeriodicGrid grid(64);
  SpectralField f0 = 0.5 * harmonic(grid, 1, 1.0);
  auto advance = [&](double dt, int steps) {
    MuskatFlow flow(f0, quick_config());
    for (int s = 0; s < steps; ++s) flow.step(dt);
    return flow.state().f;
  };
  const double d1 = (advance(0.02, 1) - advance(0.01, 2)).max_abs();
  const double d2 = (advance(0.01, 1) - advance(0.005, 2)).max_abs();
  // the one-step difference is the local truncation error, O(dt^2)
  const double rate = d1 / d2;
  CHECK(rate >= 3.4);
  CHECK(rate <= 4.6);
}

TEST_CASE("linearized simulation decays at the unit rate") {
  PeriodicGrid grid(128);
  MuskatConfig cfg = quick_config();
  DecayRecord rec = simulate(0.001 * harmonic(grid, 1, 1.0), 3.0, cfg);
  DecayFit fit = fit_decay(rec, "l2", 0.3, 2.4);
  CHECK(fit.lambda == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(fit.r2 >= 0.999);
  CHECK(rec.depth_used == 8.0);
  CHECK(rec.mean_drift_max <= 1e-9);
  CHECK(rec.linf_excess <= cfg.tol_max_rel);
  CHECK(rec.lip_excess <= 1e-3);
  CHECK(rec.l2_step_increase_max <= 1e-8);
}

TEST_CASE("mean is conserved exactly by projection") {
  PeriodicGrid grid(64);
  MuskatConfig cfg = quick_config();
  DecayRecord rec = simulate(constant(grid, 0.05) + 0.1 * harmonic(grid, 1, 1.0), 0.5, cfg);
  CHECK(rec.mean_initial == doctest::Approx(0.05));
  CHECK(rec.mean_drift_max <= 1e-9);
  MuskatFlow flow(constant(grid, 0.05) + 0.1 * harmonic(grid, 1, 1.0), cfg);
  for (int s = 0; s < 20; ++s) flow.step(5e-3);
  CHECK(mean(flow.state().f) == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("maximum principles on a nonlinear run") {
  PeriodicGrid grid(128);
  MuskatConfig cfg = quick_config();
  DecayRecord rec =
      simulate(0.3 * harmonic(grid, 1, 1.0) + 0.1 * harmonic(grid, 3, 1.0), 1.5, cfg);
  CHECK(rec.depth_used == 16.0);  // doubling check escalates for this amplitude
  CHECK(rec.linf_excess <= cfg.tol_max_rel);
  CHECK(rec.lip_excess <= 1e-2);
  CHECK(rec.lip_status <= 1);
  CHECK(rec.l2_step_increase_max <= 1e-8);
}

TEST_CASE("seeded random initial data respects the maximum principles") {
  PeriodicGrid grid(128);
  MuskatConfig cfg = quick_config();
  BoundaryFn f0 = preset_random_lipschitz(grid, 11, 0.5);
  DecayRecord rec = simulate(f0.field, 1.0, cfg);
  CHECK(rec.linf_excess <= cfg.tol_max_rel);
  CHECK(rec.lip_status <= 1);
}

TEST_CASE("explicit RK4 cross-check agrees with IMEX over a short horizon") {
  PeriodicGrid grid(64);
  SpectralField f0 = 0.2 * harmonic(grid, 1, 1.0);
  MuskatConfig imex = quick_config();
  MuskatConfig rk4 = quick_config();
  rk4.rk4 = true;
  rk4.dt_max = 1e-3;
  imex.dt_max = 1e-3;
  MuskatFlow a(f0, imex), b(f0, rk4);
  for (int s = 0; s < 100; ++s) {
    a.step(1e-3);
    b.step(1e-3);
  }
  CHECK((a.state().f - b.state().f).max_abs() <= 5e-5);
}

TEST_CASE("oversized explicit steps raise StabilityViolation") {
  PeriodicGrid grid(128);
  MuskatConfig cfg = quick_config();
  cfg.rk4 = true;
  MuskatFlow flow(0.5 * harmonic(grid, 1, 1.0), cfg);
  CHECK_THROWS_AS(
      [&] {
        for (int s = 0; s < 50; ++s) flow.step(1.0);
      }(),
      StabilityViolation);
}

TEST_CASE("fit_decay on synthetic data") {
  DecayRecord rec;
  rec.alphas = {0.5};
  for (int i = 0; i <= 40; ++i) {
    DecaySample s;
    s.t = 0.05 * i;
    s.l2 = 3.0 * std::exp(-2.0 * s.t);
    s.hhalf = s.l2;
    s.linf = s.l2;
    s.lipschitz = s.l2;
    s.dtf_hneghalf = s.l2;
    s.c_alpha = {s.l2};
    rec.samples.push_back(s);
  }
  DecayFit fit = fit_decay(rec, "l2", 0.0, 2.0);
  CHECK(fit.lambda == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit_decay(rec, "c_alpha_0.5", 0.0, 2.0).lambda == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_decay(rec, "l2", 0.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(fit_decay(rec, "nope", 0.0, 2.0), std::invalid_argument);
  rec.samples[5].l2 = 0.0;
  CHECK_THROWS_AS(fit_decay(rec, "l2", 0.0, 2.0), NonPositiveValues);
}

TEST_CASE("integrability of the linearized mode") {
  PeriodicGrid grid(64);
  const double eps = 1e-3;
  MuskatConfig cfg = quick_config();
  DecayRecord rec = simulate(eps * harmonic(grid, 1, 1.0), 10.0, cfg);
  IntegrabilityReport rep = integrability_check(rec);
  // int_0^inf ||f||^2_{H^{1/2}} dt = eps^2 pi / 2 for the unit-rate mode
  CHECK(rep.hhalf_sq_integral == doctest::Approx(eps * eps * kPi / 2.0).epsilon(0.01));
  CHECK(rep.dtf_sq_integral > 0.0);
  CHECK(rep.hhalf_tail_ratio < 0.01);
  CHECK(rep.dtf_tail_ratio < 0.01);
}

TEST_CASE("zero-horizon simulation returns an empty record") {
  PeriodicGrid grid(64);
  DecayRecord rec = simulate(0.1 * harmonic(grid, 1, 1.0), 0.0, quick_config());
  CHECK(rec.samples.empty());
}

TEST_CASE("simulations are deterministic") {
  PeriodicGrid grid(64);
  SpectralField f0 = 0.2 * harmonic(grid, 1, 1.0) + 0.05 * harmonic(grid, 2, 1.0);
  DecayRecord a = simulate(f0, 0.5, quick_config());
  DecayRecord b = simulate(f0, 0.5, quick_config());
  REQUIRE(a.samples.size() == b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].l2 == b.samples[i].l2);
    CHECK(a.samples[i].hhalf == b.samples[i].hhalf);
    CHECK(a.samples[i].dtf_hneghalf == b.samples[i].dtf_hneghalf);
  }
}

TEST_CASE("decay record exposes the configured norm keys") {
  DecayRecord rec;
  rec.alphas = {0.25, 0.5, 0.75};
  auto keys = decay_norm_keys(rec);
  CHECK(keys.size() == 8);
  CHECK(keys[5] == "c_alpha_0.25");
}
