#pragma once

#include <string>
#include <vector>

#include "dnlab/spectral.hpp"

namespace dnlab {

/// Lipschitz boundary function: samples plus the grid Lipschitz constant
/// (max |f'| of the spectral interpolant).
struct BoundaryFn {
  explicit BoundaryFn(SpectralField f);

  SpectralField field;
  double lipschitz = 0.0;
};

/// ||u||_inf + ||u'||_inf of the spectral interpolant on the grid.
double w1inf_norm(const SpectralField& u);

/// Strip-like domain b(x) < y < f(x). The separation h is measured on the
/// grid, not taken on trust from the caller.
class StripGeometry {
 public:
  StripGeometry(BoundaryFn top, BoundaryFn bottom, double h_min = 1e-6);

  const BoundaryFn& top() const { return top_; }
  const BoundaryFn& bottom() const { return bottom_; }
  double separation() const { return separation_; }

 private:
  BoundaryFn top_;
  BoundaryFn bottom_;
  double separation_;
};

/// Half-space domain y < f(x), truncated at physical depth L for computation.
class HalfSpaceGeometry {
 public:
  HalfSpaceGeometry(BoundaryFn top, double depth);

  const BoundaryFn& top() const { return top_; }
  double depth() const { return depth_; }

 private:
  BoundaryFn top_;
  double depth_;
};

/// Flattened image of the domain on the reference cell M x (-D, 0):
/// D = 1 for strips (rho = (z+1) f - z b) and D = L for the truncated
/// half-space (rho = z + f). Carries the mapped coefficient matrix
///   A = [[rho_z, -rho_x], [-rho_x, (1 + rho_x^2)/rho_z]]
/// sampled where the elliptic solver needs it: per z-element Gauss point on
/// the 3/2 dealiased x grid. det A = 1 at every node.
struct FlattenedSystem {
  PeriodicGrid xgrid;
  int nz = 0;
  bool finite_depth = true;
  double ref_depth = 1.0;          // 1 (strip) or L (half-space)
  double mesh_beta = 0.0;          // sinh grading strength of the z mesh
  std::vector<double> znodes;      // nz+1 nodes, znodes[0] = -ref_depth, back() = 0

  // Nodal samples on the (x, z) grid, row-major [level j][x index i],
  // level j = 0 at the bottom.
  std::vector<double> rho;
  std::vector<double> rho_z;
  std::vector<double> rho_x;

  // Geometry scalars used by reports and the structural bound.
  double separation = 0.0;         // h (strips) — 0 for half-spaces
  double lip_top = 0.0;            // ||f'||_inf
  double lip_bottom = 0.0;         // ||b'||_inf
  double w1inf_gap = 0.0;          // ||f - b||_{W^{1,inf}} (strips)

  // Coefficient tables on the padded grid of mpad = 3N/2 points, one slab per
  // (element, Gauss point): index [(e*2 + q)*mpad + m].
  int mpad = 0;
  std::vector<double> a11;
  std::vector<double> a12;
  std::vector<double> a22;

  int node_index(int level, int i) const { return level * xgrid.size() + i; }
  int coef_index(int element, int gauss, int m) const {
    return (element * 2 + gauss) * mpad + m;
  }
  // Gauss points of element e in reference coordinates t in [0, 1].
  static double gauss_t(int q);
  static double gauss_w() { return 0.5; }
};

/// Builds the strip flattening on nz cells. The z mesh is sinh-graded toward
/// the top boundary (beta <= 0 picks the default grading).
FlattenedSystem build_flatten_finite(const StripGeometry& geom, int nz,
                                     double beta = -1.0);

/// Builds the truncated half-space flattening; the bottom z = -L carries a
/// homogeneous Neumann condition standing in for decay at infinity.
FlattenedSystem build_flatten_infinite(const HalfSpaceGeometry& geom, int nz,
                                       double beta = -1.0);

/// Geometry-dependent factor of the coercivity lower bound:
///   strips:      h / (1 + ||f'||_inf^2 + ||f-b||_{W^{1,inf}}^2)
///   half-space:  1 / (1 + ||f'||_inf)
double structural_factor(const StripGeometry& geom);
double structural_factor(const HalfSpaceGeometry& geom);

/// Structural factor together with the calibrated constant; the bound used by
/// certificates is the product of the two.
struct CoercivityBound {
  double structural = 0.0;
  double c_cal = 0.0;
  double bound() const { return structural * c_cal; }
};

CoercivityBound coercivity_bound_M(const StripGeometry& geom, double c_cal);
CoercivityBound coercivity_bound_M(const HalfSpaceGeometry& geom, double c_cal);

// ---- boundary data sources ----

BoundaryFn preset_flat(const PeriodicGrid& grid, double level);
BoundaryFn preset_single_mode(const PeriodicGrid& grid, int k, double amplitude,
                              double phase = 0.0);
BoundaryFn preset_multi_mode(const PeriodicGrid& grid,
                             const std::vector<std::pair<int, double>>& modes);

/// Random boundary with |k|^{-2} spectral decay, zero mean, rescaled to the
/// requested Lipschitz constant. Deterministic in the seed.
BoundaryFn preset_random_lipschitz(const PeriodicGrid& grid, unsigned long long seed,
                                   double target_slope, int kmax = 0);

/// Band-limited zero-mean random field with |k|^{-2} decay and unit L2 norm;
/// the stock Dirichlet datum for sweeps. Deterministic in the seed.
SpectralField random_field(const PeriodicGrid& grid, unsigned long long seed,
                           int kmax = 0);

/// One sample per line; the number of lines must be a power of two >= 8.
BoundaryFn boundary_from_csv(const std::string& path, double period = kTwoPi);

}  // namespace dnlab
