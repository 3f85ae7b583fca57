#pragma once

#include <limits>
#include <variant>

#include "dnlab/elliptic.hpp"

namespace dnlab {

inline constexpr double kInfiniteDepth = std::numeric_limits<double>::infinity();

/// Closed-form Dirichlet-to-Neumann symbol of the flat geometry:
/// |xi| tanh(depth |xi|), degenerating to |xi| at infinite depth.
MultiplierSymbol flat_symbol(double depth);

struct DnParams {
  int nz = 128;
  double solve_tol = 1e-12;
  int max_iterations = 0;   // 0 picks the solver default
  double mesh_beta = -1.0;  // <= 0 picks the per-geometry default grading
  // update_top() rebuilds the preconditioner only once the top boundary has
  // moved by this fraction of its sup norm; correctness is unaffected.
  double prec_refresh = 0.05;
};

/// Dirichlet-to-Neumann operator of a fixed geometry at fixed resolution.
/// apply() is deterministic and safe to call concurrently for distinct data;
/// update_top() mutates the geometry (time stepping) and is single-writer.
class DnOperator {
 public:
  using Geometry = std::variant<StripGeometry, HalfSpaceGeometry>;

  explicit DnOperator(StripGeometry geom, DnParams params = {});
  explicit DnOperator(HalfSpaceGeometry geom, DnParams params = {});

  const PeriodicGrid& grid() const { return sys_.xgrid; }
  const FlattenedSystem& system() const { return sys_; }
  const Geometry& geometry() const { return geom_; }
  const DnParams& params() const { return params_; }
  bool finite_depth() const { return sys_.finite_depth; }

  /// Geometry factor of the coercivity bound (h/(1+...) or 1/(1+...)).
  double structural_factor() const;

  /// G(g): solve, then take the variational trace. Zero mean to solver
  /// tolerance.
  SpectralField apply(const SpectralField& g) const;

  /// One solve exposing everything the certificates need.
  struct Application {
    SpectralField trace;
    double pairing_trace = 0.0;  // <G(g), g> by trace quadrature
    double energy = 0.0;         // a(v, v), the volume route
    int iterations = 0;
    double rel_residual = 0.0;
  };
  Application apply_full(const SpectralField& g) const;

  /// Replaces the top boundary of a half-space geometry, keeping the cached
  /// preconditioner while the boundary has moved less than the refresh
  /// threshold.
  void update_top(const SpectralField& f_new);

 private:
  void rebuild(bool force_prec);

  Geometry geom_;
  DnParams params_;
  FlattenedSystem sys_;
  FlatPreconditioner prec_;
  SpectralField prec_top_;  // top boundary at the last preconditioner build
};

/// ||G(g)||_{H^{-1/2}} / ||g||_{~H^{1/2}}; throws ConstantInput on constants.
double boundedness_ratio(const DnOperator& op, const SpectralField& g);

}  // namespace dnlab
