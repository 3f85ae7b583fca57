#include "dnlab/elliptic.hpp"

#include <cmath>
#include <complex>
#include <cstring>

#include "dnlab/errors.hpp"
#include "dnlab/fft.hpp"

namespace dnlab {
namespace {

using cdouble = std::complex<double>;

// Scratch buffers for one bilinear-form application, reused across CG
// iterations of a solve.
struct FormWorkspace {
  int n, nz, mpad, nbins, mbins;
  double period;
  std::vector<double> U;     // (nz+1) x mpad nodal values on the padded grid
  std::vector<double> DU;    // (nz+1) x mpad x-derivatives
  std::vector<double> racc;  // test accumulators, z-derivative part
  std::vector<double> sacc;  // test accumulators, x-derivative part
  std::vector<cdouble> bn;   // n/2+1
  std::vector<cdouble> bm;   // mpad/2+1
  std::vector<cdouble> bm2;

  explicit FormWorkspace(const FlattenedSystem& sys)
      : n(sys.xgrid.size()),
        nz(sys.nz),
        mpad(sys.mpad),
        nbins(n / 2 + 1),
        mbins(sys.mpad / 2 + 1),
        period(sys.xgrid.period()),
        U(static_cast<size_t>(nz + 1) * mpad),
        DU(static_cast<size_t>(nz + 1) * mpad),
        racc(static_cast<size_t>(nz + 1) * mpad),
        sacc(static_cast<size_t>(nz + 1) * mpad),
        bn(static_cast<size_t>(nbins)),
        bm(static_cast<size_t>(mbins)),
        bm2(static_cast<size_t>(mbins)) {}

  double xi(int k) const { return kTwoPi * k / period; }

  // out(level j) = density of the assembled functional w -> a(v, phi_j w)
  // against the (L/n)-trapezoid pairing on the coarse grid. The Nyquist mode
  // is dropped throughout.
  void apply(const FlattenedSystem& sys, const double* v_full, double* out_full,
             double* energy) {
    // Interpolate each level and its x-derivative onto the padded grid.
    for (int j = 0; j <= nz; ++j) {
      fft::forward_into(std::span(v_full + static_cast<size_t>(j) * n,
                                  static_cast<size_t>(n)),
                        bn.data());
      std::fill(bm.begin(), bm.end(), cdouble(0.0));
      for (int k = 0; k < n / 2; ++k) bm[static_cast<size_t>(k)] = bn[static_cast<size_t>(k)];
      fft::inverse_into(bm, mpad, &U[static_cast<size_t>(j) * mpad]);
      for (int k = 0; k < n / 2; ++k) bm[static_cast<size_t>(k)] *= cdouble(0.0, xi(k));
      fft::inverse_into(bm, mpad, &DU[static_cast<size_t>(j) * mpad]);
    }
    std::fill(racc.begin(), racc.end(), 0.0);
    std::fill(sacc.begin(), sacc.end(), 0.0);
    double en = 0.0;

    for (int e = 0; e < nz; ++e) {
      const double h = sys.znodes[static_cast<size_t>(e) + 1] - sys.znodes[static_cast<size_t>(e)];
      const double* u0 = &U[static_cast<size_t>(e) * mpad];
      const double* u1 = &U[(static_cast<size_t>(e) + 1) * mpad];
      const double* d0 = &DU[static_cast<size_t>(e) * mpad];
      const double* d1 = &DU[(static_cast<size_t>(e) + 1) * mpad];
      double* r0 = &racc[static_cast<size_t>(e) * mpad];
      double* r1 = &racc[(static_cast<size_t>(e) + 1) * mpad];
      double* s0 = &sacc[static_cast<size_t>(e) * mpad];
      double* s1 = &sacc[(static_cast<size_t>(e) + 1) * mpad];
      for (int q = 0; q < 2; ++q) {
        const double t = FlattenedSystem::gauss_t(q);
        const double n1 = 1.0 - t, n2 = t;
        const double w = FlattenedSystem::gauss_w() * h;
        const double winv = w / h;  // w * |phi'|
        const double* A11 = &sys.a11[static_cast<size_t>(sys.coef_index(e, q, 0))];
        const double* A12 = &sys.a12[static_cast<size_t>(sys.coef_index(e, q, 0))];
        const double* A22 = &sys.a22[static_cast<size_t>(sys.coef_index(e, q, 0))];
        for (int m = 0; m < mpad; ++m) {
          const double ux = n1 * d0[m] + n2 * d1[m];
          const double uz = (u1[m] - u0[m]) / h;
          const double f1 = A11[m] * ux + A12[m] * uz;
          const double f2 = A12[m] * ux + A22[m] * uz;
          r0[m] -= winv * f2;
          r1[m] += winv * f2;
          s0[m] += w * n1 * f1;
          s1[m] += w * n2 * f1;
          en += w * (f1 * ux + f2 * uz);
        }
      }
    }

    // Test-side x derivative by parts: <s, dw/dx> = <-ds/dx, w>, exact for the
    // dealiased product spectrum. Then truncate back to the coarse grid.
    for (int j = 0; j <= nz; ++j) {
      fft::forward_into(std::span(&racc[static_cast<size_t>(j) * mpad],
                                  static_cast<size_t>(mpad)),
                        bm.data());
      fft::forward_into(std::span(&sacc[static_cast<size_t>(j) * mpad],
                                  static_cast<size_t>(mpad)),
                        bm2.data());
      for (int k = 0; k < n / 2; ++k) {
        bn[static_cast<size_t>(k)] =
            bm[static_cast<size_t>(k)] - cdouble(0.0, xi(k)) * bm2[static_cast<size_t>(k)];
      }
      bn[static_cast<size_t>(n / 2)] = 0.0;
      fft::inverse_into(bn, n, out_full + static_cast<size_t>(j) * n);
    }
    if (energy) *energy = en * (period / mpad);
  }
};

// Dirichlet lift with the flat-case harmonic z profile per mode, evaluated
// with decaying exponentials only.
std::vector<double> build_lift(const FlattenedSystem& sys, const SpectralField& g) {
  const int n = sys.xgrid.size();
  const int nz = sys.nz;
  double gap_mean = 1.0;
  if (sys.finite_depth) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += sys.rho_z[static_cast<size_t>(sys.node_index(0, i))];
    gap_mean = s / n;
  }
  const double depth = sys.finite_depth ? 1.0 : sys.ref_depth;
  std::vector<double> lift(static_cast<size_t>(nz + 1) * n);
  std::vector<cdouble> bins(static_cast<size_t>(n / 2 + 1));
  for (int j = 0; j <= nz; ++j) {
    const double z = sys.znodes[static_cast<size_t>(j)];
    for (int k = 0; k < n / 2; ++k) {
      const double q = sys.xgrid.freq(k) * (sys.finite_depth ? gap_mean : 1.0);
      const double r = (std::exp(q * z) + std::exp(-q * (z + 2.0 * depth))) /
                       (1.0 + std::exp(-2.0 * q * depth));
      bins[static_cast<size_t>(k)] = g.bins()[static_cast<size_t>(k)] * r;
    }
    bins[static_cast<size_t>(n / 2)] = 0.0;
    fft::inverse_into(bins, n, &lift[static_cast<size_t>(j) * n]);
  }
  return lift;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

FlatPreconditioner::FlatPreconditioner(const FlattenedSystem& sys)
    : n_(sys.xgrid.size()), nz_(sys.nz), period_(sys.xgrid.period()) {
  const int nz = nz_;
  // x-averaged coefficients per (element, Gauss point).
  std::vector<double> abar11(static_cast<size_t>(nz) * 2), abar22(static_cast<size_t>(nz) * 2);
  for (int e = 0; e < nz; ++e) {
    for (int q = 0; q < 2; ++q) {
      double s11 = 0.0, s22 = 0.0;
      const size_t base = static_cast<size_t>(sys.coef_index(e, q, 0));
      for (int m = 0; m < sys.mpad; ++m) {
        s11 += sys.a11[base + static_cast<size_t>(m)];
        s22 += sys.a22[base + static_cast<size_t>(m)];
      }
      abar11[static_cast<size_t>(e * 2 + q)] = s11 / sys.mpad;
      abar22[static_cast<size_t>(e * 2 + q)] = s22 / sys.mpad;
    }
  }

  const int kmax = n_ / 2;  // modes 0 .. n/2-1 are preconditioned
  diag_.assign(static_cast<size_t>(kmax) * nz, 0.0);
  sub_.assign(static_cast<size_t>(kmax) * (nz - 1), 0.0);
  std::vector<double> d(static_cast<size_t>(nz)), s(static_cast<size_t>(nz - 1));
  for (int k = 0; k < kmax; ++k) {
    const double xi = kTwoPi * k / period_;
    std::fill(d.begin(), d.end(), 0.0);
    std::fill(s.begin(), s.end(), 0.0);
    for (int e = 0; e < nz; ++e) {
      const double h = sys.znodes[static_cast<size_t>(e) + 1] - sys.znodes[static_cast<size_t>(e)];
      for (int q = 0; q < 2; ++q) {
        const double t = FlattenedSystem::gauss_t(q);
        const double n1 = 1.0 - t, n2 = t;
        const double w = FlattenedSystem::gauss_w() * h;
        const double a11 = abar11[static_cast<size_t>(e * 2 + q)];
        const double a22 = abar22[static_cast<size_t>(e * 2 + q)];
        const double mxx = xi * xi * a11;
        const double kzz = a22 / (h * h);
        const double t00 = w * (mxx * n1 * n1 + kzz);
        const double t01 = w * (mxx * n1 * n2 - kzz);
        const double t11 = w * (mxx * n2 * n2 + kzz);
        d[static_cast<size_t>(e)] += t00;
        if (e + 1 < nz) {
          d[static_cast<size_t>(e) + 1] += t11;
          s[static_cast<size_t>(e)] += t01;
        }
      }
    }
    // LDL^T factorization of the SPD tridiagonal.
    double* df = &diag_[static_cast<size_t>(k) * nz];
    double* sf = &sub_[static_cast<size_t>(k) * (nz - 1)];
    df[0] = d[0];
    for (int j = 1; j < nz; ++j) {
      const double l = s[static_cast<size_t>(j) - 1] / df[j - 1];
      sf[j - 1] = l;
      df[j] = d[static_cast<size_t>(j)] - l * l * df[j - 1];
    }
  }
}

void FlatPreconditioner::apply(const std::vector<double>& r, std::vector<double>& z) const {
  const int n = n_, nz = nz_;
  const int nbins = n / 2 + 1;
  std::vector<cdouble> rows(static_cast<size_t>(nz) * nbins);
  for (int j = 0; j < nz; ++j) {
    fft::forward_into(std::span(r.data() + static_cast<size_t>(j) * n, static_cast<size_t>(n)),
                      &rows[static_cast<size_t>(j) * nbins]);
  }
  std::vector<cdouble> y(static_cast<size_t>(nz));
  for (int k = 0; k < n / 2; ++k) {
    const double* df = &diag_[static_cast<size_t>(k) * nz];
    const double* sf = &sub_[static_cast<size_t>(k) * (nz - 1)];
    for (int j = 0; j < nz; ++j) y[static_cast<size_t>(j)] = rows[static_cast<size_t>(j) * nbins + k];
    for (int j = 1; j < nz; ++j) y[static_cast<size_t>(j)] -= sf[j - 1] * y[static_cast<size_t>(j) - 1];
    for (int j = 0; j < nz; ++j) y[static_cast<size_t>(j)] /= df[j];
    for (int j = nz - 2; j >= 0; --j) y[static_cast<size_t>(j)] -= sf[j] * y[static_cast<size_t>(j) + 1];
    for (int j = 0; j < nz; ++j) rows[static_cast<size_t>(j) * nbins + k] = y[static_cast<size_t>(j)];
  }
  z.resize(r.size());
  std::vector<cdouble> bins(static_cast<size_t>(nbins));
  for (int j = 0; j < nz; ++j) {
    std::copy_n(&rows[static_cast<size_t>(j) * nbins], nbins, bins.begin());
    bins[static_cast<size_t>(n / 2)] = 0.0;
    fft::inverse_into(bins, n, z.data() + static_cast<size_t>(j) * n);
  }
}

EllipticSolution solve(const FlattenedSystem& sys, const FlatPreconditioner& prec,
                       const SpectralField& g, const SolveOptions& opts) {
  if (!(g.grid() == sys.xgrid)) throw std::invalid_argument("solve: g grid mismatch");
  const int n = sys.xgrid.size();
  const int nz = sys.nz;
  const size_t interior = static_cast<size_t>(nz) * n;
  const size_t full = static_cast<size_t>(nz + 1) * n;
  const int maxit = opts.max_iterations > 0 ? opts.max_iterations : 10 * n * nz;

  FormWorkspace ws(sys);
  std::vector<double> lift = build_lift(sys, g);
  std::vector<double> out(full), rhs(interior);
  ws.apply(sys, lift.data(), out.data(), nullptr);
  for (size_t i = 0; i < interior; ++i) rhs[i] = -out[i];

  EllipticSolution sol;
  sol.v = lift;
  const double bnorm = std::sqrt(dot(rhs, rhs));
  if (bnorm == 0.0) return sol;

  std::vector<double> u(interior, 0.0), r(rhs), z(interior), p(interior), ap(interior);
  std::vector<double> vfull(full, 0.0);
  auto matvec = [&](const std::vector<double>& x, std::vector<double>& y) {
    std::copy(x.begin(), x.end(), vfull.begin());
    std::fill(vfull.begin() + static_cast<std::ptrdiff_t>(interior), vfull.end(), 0.0);
    ws.apply(sys, vfull.data(), out.data(), nullptr);
    std::copy_n(out.begin(), interior, y.begin());
  };

  prec.apply(r, z);
  p = z;
  double rz = dot(r, z);
  bool converged = false;
  int it = 0;
  while (it < maxit) {
    ++it;
    matvec(p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      throw NoConvergence("conjugate gradients: non-positive curvature (indefinite assembly?)");
    }
    const double alpha = rz / pap;
    for (size_t i = 0; i < interior; ++i) {
      u[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    if (opts.functional_trace) {
      opts.functional_trace->push_back(-0.5 * (dot(u, rhs) + dot(u, r)));
    }
    const double rnorm = std::sqrt(dot(r, r));
    if (rnorm <= opts.tol * bnorm) {
      sol.rel_residual = rnorm / bnorm;
      converged = true;
      break;
    }
    prec.apply(r, z);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (size_t i = 0; i < interior; ++i) p[i] = z[i] + beta * p[i];
  }
  if (!converged) {
    throw NoConvergence("conjugate gradients: no convergence in " + std::to_string(maxit) +
                        " iterations");
  }
  sol.iterations = it;
  for (size_t i = 0; i < interior; ++i) sol.v[i] += u[i];
  return sol;
}

void apply_form(const FlattenedSystem& sys, const std::vector<double>& v_full,
                std::vector<double>& out_full, double* energy) {
  FormWorkspace ws(sys);
  out_full.resize(v_full.size());
  ws.apply(sys, v_full.data(), out_full.data(), energy);
}

SpectralField dn_trace(const FlattenedSystem& sys, const EllipticSolution& sol) {
  std::vector<double> out;
  apply_form(sys, sol.v, out);
  const int n = sys.xgrid.size();
  std::vector<double> top(out.begin() + static_cast<std::ptrdiff_t>(static_cast<size_t>(sys.nz) * n),
                          out.end());
  return SpectralField(sys.xgrid, std::move(top));
}

double dirichlet_energy(const FlattenedSystem& sys, const EllipticSolution& sol) {
  std::vector<double> out;
  double energy = 0.0;
  apply_form(sys, sol.v, out, &energy);
  return energy;
}

}  // namespace dnlab
