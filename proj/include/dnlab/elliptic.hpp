#pragma once

#include <memory>
#include <vector>

#include "dnlab/domain.hpp"

namespace dnlab {

struct SolveOptions {
  double tol = 1e-10;      // relative residual target
  int max_iterations = 0;  // 0 picks 10 * nx * nz
  // When set, receives the CG quadratic functional after every iteration
  // (must decrease monotonically on an SPD system).
  std::vector<double>* functional_trace = nullptr;
};

/// Discrete solution of div(A grad v) = 0 with Dirichlet top data and natural
/// (Neumann) bottom condition. Nodal values, level 0 at the bottom, level nz
/// at the top.
struct EllipticSolution {
  std::vector<double> v;
  double rel_residual = 0.0;
  int iterations = 0;
};

/// Exact inverse of the x-averaged coefficient operator: diagonal over
/// Fourier modes, tridiagonal over z levels. For flat geometry it equals the
/// full operator, so preconditioned CG converges in one iteration there.
class FlatPreconditioner {
 public:
  explicit FlatPreconditioner(const FlattenedSystem& sys);

  int nx() const { return n_; }
  int nz() const { return nz_; }

  /// z := T^{-1} r on interior levels (r, z are nz x n nodal arrays).
  void apply(const std::vector<double>& r, std::vector<double>& z) const;

 private:
  int n_ = 0;
  int nz_ = 0;
  double period_ = 0.0;
  std::vector<double> diag_;  // LDL^T factors, (n/2) x nz
  std::vector<double> sub_;   // (n/2) x (nz-1)
};

/// Galerkin solve: Fourier collocation in x (3/2 dealiased quadrature),
/// piecewise-linear elements in z, conjugate gradients on the SPD interior
/// system after lifting the Dirichlet data. Throws NoConvergence at the
/// iteration cap.
EllipticSolution solve(const FlattenedSystem& sys, const FlatPreconditioner& prec,
                       const SpectralField& g, const SolveOptions& opts = {});

/// Variational Dirichlet-to-Neumann trace: the returned field t satisfies
/// <t, w> = a(v, E w) for every top datum w and its nodal lift E w, which
/// makes the discrete Stokes identity hold to solver tolerance.
SpectralField dn_trace(const FlattenedSystem& sys, const EllipticSolution& sol);

/// a(v, v) evaluated with the assembly quadrature.
double dirichlet_energy(const FlattenedSystem& sys, const EllipticSolution& sol);

/// Applies the assembled bilinear form to a full nodal array: out(level j)
/// receives the density of w -> a(v, phi_j w) against top/interior test
/// levels; optionally accumulates a(v, v). Exposed for diagnostics and tests.
void apply_form(const FlattenedSystem& sys, const std::vector<double>& v_full,
                std::vector<double>& out_full, double* energy = nullptr);

}  // namespace dnlab
