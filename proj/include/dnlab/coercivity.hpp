#pragma once

#include <functional>
#include <string>

#include "dnlab/dno.hpp"

namespace dnlab {

/// One coercivity certificate: the measured quadratic (or convex) pairing
/// against the structural lower bound with the calibrated constant.
struct CoercivityReport {
  std::string geometry;
  unsigned long long seed = 0;
  double pairing = 0.0;         // trace quadrature route
  double pairing_volume = 0.0;  // volume energy route (quadratic form only)
  double seminorm2 = 0.0;       // squared ~H^{1/2} seminorm of g (or Psi(g))
  double ratio = 0.0;
  double structural_factor = 0.0;
  double c_cal = 0.0;
  bool pass = false;
};

/// Quadratic certificate: <G(g), g> >= c_cal * structural * ||g||^2.
/// Throws ConstantInput when g has no oscillating part.
CoercivityReport certify(const DnOperator& op, const SpectralField& g, double c_cal);

struct SharpConstantOptions {
  bool zero_mean = true;
  double tol = 1e-8;  // relative eigen-residual
  int max_iterations = 200;
  unsigned long long seed = 1;
};

/// Smallest generalized eigenvalue of the pencil (G, |D|) on the
/// (optionally zero-mean) nonconstant subspace, by preconditioned
/// Rayleigh-quotient minimization; every G matvec is one elliptic solve.
double sharp_constant(const DnOperator& op, const SharpConstantOptions& opts = {});

/// C^2 convex profile Phi with its derivatives, validated on [-range, range]
/// by a uniform 4096-point curvature scan at construction. Psi is the
/// curvature square-root antiderivative, evaluated by cumulative adaptive
/// quadrature against the scan table; queries beyond the range throw.
class ConvexPair {
 public:
  using Fn = std::function<double(double)>;

  ConvexPair(Fn phi, Fn dphi, Fn ddphi, double range);

  double phi(double z) const { return phi_(z); }
  double dphi(double z) const { return dphi_(z); }
  double ddphi(double z) const { return ddphi_(z); }
  double range() const { return range_; }

  /// Psi(z) = int_0^z sqrt(Phi''(s)) ds.
  double psi(double z) const;

 private:
  Fn phi_, dphi_, ddphi_;
  double range_;
  std::vector<double> nodes_;
  std::vector<double> psi_nodes_;
};

/// Adaptive quadrature of sqrt(Phi'') from 0 to z, relative error <= 1e-10.
/// Throws NonConvex when negative curvature is sampled.
double psi_from_phi(const ConvexPair& pair, double z);

/// Convex pairing certificate: <G(g), Phi'(g)> >= c_cal * structural *
/// ||Psi(g)||^2.
CoercivityReport convex_certify(const DnOperator& op, const SpectralField& g,
                                const ConvexPair& pair, double c_cal);

struct LpReport {
  double p = 2.0;
  double pairing = 0.0;        // <G(g), p|g|^{p-2} g>
  double seminorm2_q = 0.0;    // || |g|^{p/2-1} g ||^2 in ~H^{1/2}
  double psi_seminorm2 = 0.0;  // || Psi(g) ||^2 = 4 (p-1)/p * seminorm2_q
  double lp_norm_g = 0.0;
  double poincare_ratio = 0.0;  // ||q||^{2/p} / ||g||_p, inverse of the empirical C'
  double structural_factor = 0.0;
  double c_cal = 0.0;
  bool pass = false;
};

/// L^p corollary check for zero-mean g, p >= 2. Throws NonZeroMean.
LpReport lp_certify(const DnOperator& op, const SpectralField& g, double p,
                    double c_cal);

struct CalibrationOptions {
  double depth_min = 1e-3;
  double depth_max = 10.0;
  int samples = 24;  // log-spaced depths
  int nx = 64;
  int nz = 96;
};

struct Calibration {
  double c_cal = 0.0;
  double at_depth = 0.0;  // depth realizing the minimum
  std::vector<std::pair<double, double>> family;  // (depth, measured constant)
};

/// Freezes the calibrated constant as the minimum of
/// ratio / structural_factor over the flat-strip family. The only unknown in
/// the structural bound is this dimensional constant; everything downstream
/// reports it separately from the geometry factor.
Calibration calibrate_flat_family(const CalibrationOptions& opts = {});

}  // namespace dnlab
