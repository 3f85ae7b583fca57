#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dnlab/coercivity.hpp"
#include "dnlab/errors.hpp"

using namespace dnlab;
namespace {

constexpr double kPi = std::numbers::pi;

DnOperator flat_strip(const PeriodicGrid& grid, double depth, int nz = 128) {
  DnParams p;
  p.nz = nz;
  return DnOperator(StripGeometry(preset_flat(grid, 0.0), preset_flat(grid, -depth)), p);
}

DnOperator flat_half(const PeriodicGrid& grid, int nz = 128) {
  DnParams p;
  p.nz = nz;
  return DnOperator(HalfSpaceGeometry(preset_flat(grid, 0.0), 8.0), p);
}

double field_dot(const SpectralField& a, const SpectralField& b) {
  double s = 0.0;
  for (int i = 0; i < a.grid().size(); ++i) s += a.value(i) * b.value(i);
  return s * a.grid().spacing();
}

}  // namespace

TEST_CASE("certify on flat geometries") {
  PeriodicGrid grid(64);
  SUBCASE("half-space ratio is one") {
    DnOperator op = flat_half(grid);
    for (unsigned long long seed : {1ull, 9ull}) {
      CoercivityReport rep = certify(op, random_field(grid, seed), 1.0);
      CHECK(rep.ratio == doctest::Approx(1.0).epsilon(2e-4));
      CHECK(rep.pairing == doctest::Approx(rep.pairing_volume).epsilon(1e-10));
      CHECK(rep.structural_factor == doctest::Approx(1.0));
      CHECK(rep.pass);
    }
  }
  SUBCASE("strip of depth 1 with cos x gives tanh(1)") {
    CoercivityReport rep = certify(flat_strip(grid, 1.0), harmonic(grid, 1, 1.0), 1.0);
    CHECK(rep.ratio == doctest::Approx(std::tanh(1.0)).epsilon(1e-4));
    CHECK(rep.seminorm2 == doctest::Approx(kPi).epsilon(1e-12));
  }
  SUBCASE("constants are rejected") {
    CHECK_THROWS_AS(certify(flat_half(grid), constant(grid, 2.0), 1.0), ConstantInput);
  }
}

TEST_CASE("certify pairing scales quadratically") {
  PeriodicGrid grid(64);
  DnParams p;
  p.nz = 64;
  DnOperator op(HalfSpaceGeometry(preset_random_lipschitz(grid, 3, 0.5), 8.0), p);
  SpectralField g = random_field(grid, 8);
  CoercivityReport r1 = certify(op, g, 1.0);
  CoercivityReport r2 = certify(op, 3.5 * g, 1.0);
  CHECK(r2.pairing == doctest::Approx(3.5 * 3.5 * r1.pairing).epsilon(1e-10));
  CHECK(r2.ratio == doctest::Approx(r1.ratio).epsilon(1e-10));
}

TEST_CASE("sharp constants of flat geometries") {
  PeriodicGrid grid(64);
  SUBCASE("strips hit tanh(depth)") {
    CHECK(sharp_constant(flat_strip(grid, 1.0)) ==
          doctest::Approx(std::tanh(1.0)).epsilon(1e-3));
    CHECK(sharp_constant(flat_strip(grid, 2.0)) ==
          doctest::Approx(std::tanh(2.0)).epsilon(1e-3));
  }
  SUBCASE("half-space hits one at refined resolution") {
    DnParams p;
    p.nz = 4096;
    DnOperator op(HalfSpaceGeometry(preset_flat(grid, 0.0), 8.0), p);
    CHECK(sharp_constant(op) == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("monotone in depth") {
    const double s05 = sharp_constant(flat_strip(grid, 0.5, 96));
    const double s1 = sharp_constant(flat_strip(grid, 1.0, 96));
    const double s2 = sharp_constant(flat_strip(grid, 2.0, 96));
    CHECK(s05 < s1);
    CHECK(s1 < s2);
  }
  SUBCASE("iteration cap raises NoConvergence") {
    SharpConstantOptions opts;
    opts.max_iterations = 1;
    opts.tol = 1e-14;
    CHECK_THROWS_AS(sharp_constant(flat_strip(grid, 1.0, 32), opts), NoConvergence);
  }
}

TEST_CASE("psi construction from convex profiles") {
  SUBCASE("quadratic: psi = sqrt(2) z") {
    ConvexPair pair([](double z) { return z * z; }, [](double z) { return 2.0 * z; },
                    [](double) { return 2.0; }, 2.0);
    CHECK(psi_from_phi(pair, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
    CHECK(pair.psi(0.0) == doctest::Approx(0.0));
  }
  SUBCASE("quartic: psi = sqrt(3) z |z|") {
    ConvexPair pair([](double z) { return z * z * z * z; },
                    [](double z) { return 4.0 * z * z * z; },
                    [](double z) { return 12.0 * z * z; }, 2.5);
    CHECK(psi_from_phi(pair, -2.0) ==
          doctest::Approx(-4.0 * std::sqrt(3.0)).epsilon(1e-10));
    for (double z : {-2.5, -1.7, -0.3, 0.0, 0.4, 1.1, 2.5}) {
      CHECK(pair.psi(z) == doctest::Approx(std::sqrt(3.0) * z * std::abs(z))
                               .epsilon(1e-10)
                               .scale(1.0));
    }
  }
  SUBCASE("smooth non-homogeneous profile against the analytic antiderivative") {
    // phi = z^4/12 + z^2: psi(z) = int_0^z sqrt(s^2 + 2) ds
    //                            = z sqrt(z^2+2)/2 + asinh(z / sqrt 2).
    ConvexPair pair([](double z) { return z * z * z * z / 12.0 + z * z; },
                    [](double z) { return z * z * z / 3.0 + 2.0 * z; },
                    [](double z) { return z * z + 2.0; }, 3.0);
    for (double z : {-2.8, -1.0, 0.5, 1.7, 3.0}) {
      const double exact = 0.5 * z * std::sqrt(z * z + 2.0) + std::asinh(z / std::sqrt(2.0));
      CHECK(pair.psi(z) == doctest::Approx(exact).epsilon(1e-9));
    }
  }
  SUBCASE("negative curvature is rejected") {
    CHECK_THROWS_AS(ConvexPair([](double z) { return -z * z; },
                               [](double z) { return -2.0 * z; },
                               [](double) { return -2.0; }, 1.0),
                    NonConvex);
  }
  SUBCASE("beyond-range queries refuse to extrapolate") {
    ConvexPair pair([](double z) { return z * z; }, [](double z) { return 2.0 * z; },
                    [](double) { return 2.0; }, 1.0);
    CHECK_THROWS_AS(pair.psi(1.5), std::out_of_range);
  }
}

TEST_CASE("convex certificate with phi = z^2 doubles the quadratic one") {
  PeriodicGrid grid(64);
  DnParams p;
  p.nz = 64;
  DnOperator op(HalfSpaceGeometry(preset_random_lipschitz(grid, 13, 0.4), 8.0), p);
  SpectralField g = random_field(grid, 5);
  ConvexPair pair([](double z) { return z * z; }, [](double z) { return 2.0 * z; },
                  [](double) { return 2.0; }, 1.05 * g.max_abs());
  CoercivityReport quad = certify(op, g, 1.0);
  CoercivityReport conv = convex_certify(op, g, pair, 1.0);
  CHECK(conv.pairing == doctest::Approx(2.0 * quad.pairing).epsilon(1e-12));
  CHECK(conv.seminorm2 == doctest::Approx(2.0 * quad.seminorm2).epsilon(1e-10));
  CHECK(conv.ratio == doctest::Approx(quad.ratio).epsilon(1e-10));
}

TEST_CASE("flat-case spectral oracle matches the trace quadrature") {
  // On the flat half-space the trace is |D|g exactly; the pairing
  // <|D|g, 4 g^3> via bin sums must equal the grid trapezoid rule.
  PeriodicGrid grid(256);
  SpectralField g = harmonic(grid, 1, 1.0);
  SpectralField dg = apply_multiplier(g, flat_symbol(kInfiniteDepth));
  std::vector<double> phi_p(static_cast<size_t>(grid.size()));
  for (int i = 0; i < grid.size(); ++i) phi_p[static_cast<size_t>(i)] = 4.0 * std::pow(g.value(i), 3);
  SpectralField phi_field(grid, std::move(phi_p));
  // spectral route: L * sum_k conj(dg_k) phip_k over the full spectrum
  double spectral = 0.0;
  for (int k = 0; k < grid.num_bins(); ++k) {
    const double w = (k == 0 || k == grid.size() / 2) ? 1.0 : 2.0;
    spectral += w * (dg.bins()[static_cast<size_t>(k)] *
                     std::conj(phi_field.bins()[static_cast<size_t>(k)]))
                        .real();
  }
  spectral *= grid.period();
  const double quadrature = field_dot(dg, phi_field);
  CHECK(spectral == doctest::Approx(quadrature).epsilon(1e-8));
  // and both equal 3 pi for g = cos x
  CHECK(quadrature == doctest::Approx(3.0 * kPi).epsilon(1e-12));
}

TEST_CASE("lp certificate") {
  PeriodicGrid grid(64);
  DnOperator op = flat_half(grid, 96);
  SpectralField g = random_field(grid, 44);
  SUBCASE("p = 2 reduces to the quadratic certificate") {
    LpReport lr = lp_certify(op, g, 2.0, 1.0);
    CoercivityReport quad = certify(op, g, 1.0);
    CHECK(lr.pairing == doctest::Approx(2.0 * quad.pairing).epsilon(1e-12));
    CHECK(lr.seminorm2_q == doctest::Approx(quad.seminorm2).epsilon(1e-12));
    CHECK(lr.psi_seminorm2 == doctest::Approx(2.0 * quad.seminorm2).epsilon(1e-12));
    // zero-mean torus data: ||g||_2 <= ||g||_{H^{1/2}}
    CHECK(lr.lp_norm_g <= std::sqrt(lr.seminorm2_q) + 1e-12);
    CHECK(lr.pass);
  }
  SUBCASE("p = 4 direction check for cos x") {
    LpReport lr = lp_certify(op, harmonic(grid, 1, 1.0), 4.0, 1.0);
    CHECK(lr.pairing == doctest::Approx(3.0 * kPi).epsilon(1e-4));
    CHECK(lr.pass);
    CHECK(lr.poincare_ratio > 0.0);
  }
  SUBCASE("nonzero mean is rejected") {
    CHECK_THROWS_AS(lp_certify(op, constant(grid, 0.5) + g, 2.0, 1.0), NonZeroMean);
  }
  SUBCASE("p below 2 is rejected") {
    CHECK_THROWS_AS(lp_certify(op, g, 1.5, 1.0), std::invalid_argument);
  }
}

TEST_CASE("flat-family calibration") {
  CalibrationOptions opts;
  opts.samples = 8;
  opts.nx = 32;
  opts.nz = 64;
  Calibration cal = calibrate_flat_family(opts);
  CHECK(cal.c_cal == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(cal.at_depth == doctest::Approx(opts.depth_min));
  for (const auto& [depth, c] : cal.family) CHECK(c >= cal.c_cal - 1e-12);
  Calibration again = calibrate_flat_family(opts);
  CHECK(cal.c_cal == again.c_cal);
}

TEST_CASE("certified sweep stays above the calibrated bound") {
  PeriodicGrid grid(128);
  DnParams p;
  p.nz = 64;
  CalibrationOptions copts;
  copts.samples = 6;
  copts.nx = 32;
  copts.nz = 64;
  const double c_cal = calibrate_flat_family(copts).c_cal;
  int checked = 0;
  for (unsigned long long s = 0; s < 5; ++s) {
    DnOperator op(HalfSpaceGeometry(preset_random_lipschitz(grid, 500 + s, 0.3), 8.0), p);
    for (unsigned long long gs = 0; gs < 3; ++gs) {
      CoercivityReport rep = certify(op, random_field(grid, 700 + gs), c_cal);
      CHECK(rep.ratio > 0.0);
      CHECK(rep.pass);
      ++checked;
    }
  }
  CHECK(checked == 15);
}
