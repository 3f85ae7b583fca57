#include "dnlab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dnlab/errors.hpp"
#include "dnlab/fft.hpp"
#include "dnlab/rng.hpp"

namespace dnlab {

BoundaryFn::BoundaryFn(SpectralField f) : field(std::move(f)) {
  lipschitz = derivative(field).max_abs();
}

double w1inf_norm(const SpectralField& u) {
  return u.max_abs() + derivative(u).max_abs();
}

StripGeometry::StripGeometry(BoundaryFn top, BoundaryFn bottom, double h_min)
    : top_(std::move(top)), bottom_(std::move(bottom)) {
  if (!(top_.field.grid() == bottom_.field.grid())) {
    throw std::invalid_argument("StripGeometry: boundary grids differ");
  }
  separation_ = top_.field.value(0) - bottom_.field.value(0);
  for (int i = 0; i < top_.field.grid().size(); ++i) {
    separation_ = std::min(separation_, top_.field.value(i) - bottom_.field.value(i));
  }
  if (separation_ < h_min) {
    throw SeparationViolation("strip separation " + std::to_string(separation_) +
                              " below floor " + std::to_string(h_min));
  }
}

HalfSpaceGeometry::HalfSpaceGeometry(BoundaryFn top, double depth)
    : top_(std::move(top)), depth_(depth) {
  if (!(depth >= 4.0)) {
    throw std::invalid_argument("HalfSpaceGeometry: truncation depth must be >= 4");
  }
}

double FlattenedSystem::gauss_t(int q) {
  const double r = 0.5 / std::sqrt(3.0);
  return q == 0 ? 0.5 - r : 0.5 + r;
}

namespace {

// z mesh graded toward the top boundary, where the harmonic extension of
// mode k decays on the scale 1/k: node spacing grows roughly like |z| so the
// interpolation error equilibrates across all modes at once.
std::vector<double> graded_mesh(double depth, int nz, double beta) {
  std::vector<double> z(static_cast<size_t>(nz) + 1);
  const double s = std::sinh(beta);
  for (int j = 0; j <= nz; ++j) {
    const double t = 1.0 - static_cast<double>(j) / nz;
    z[static_cast<size_t>(j)] = -depth * std::sinh(beta * t) / s;
  }
  z.back() = 0.0;
  return z;
}

struct PaddedBoundary {
  std::vector<double> value;
  std::vector<double> slope;
};

PaddedBoundary pad_boundary(const BoundaryFn& bf, int mpad) {
  PaddedBoundary p;
  p.value = resample_values(bf.field, mpad);
  SpectralField d = derivative(bf.field);
  p.slope = resample_values(d, mpad);
  return p;
}

}  // namespace

FlattenedSystem build_flatten_finite(const StripGeometry& geom, int nz, double beta) {
  if (nz < 2) throw std::invalid_argument("build_flatten_finite: nz must be >= 2");
  if (beta <= 0.0) beta = 4.0;
  FlattenedSystem sys{geom.top().field.grid()};
  const int n = sys.xgrid.size();
  sys.nz = nz;
  sys.finite_depth = true;
  sys.ref_depth = 1.0;
  sys.mesh_beta = beta;
  sys.znodes = graded_mesh(1.0, nz, beta);
  sys.separation = geom.separation();
  sys.lip_top = geom.top().lipschitz;
  sys.lip_bottom = geom.bottom().lipschitz;
  sys.w1inf_gap = w1inf_norm(geom.top().field - geom.bottom().field);
  sys.mpad = 3 * n / 2;

  const auto& f = geom.top().field;
  const auto& b = geom.bottom().field;
  const SpectralField fp = derivative(f);
  const SpectralField bp = derivative(b);

  sys.rho.resize(static_cast<size_t>(nz + 1) * n);
  sys.rho_z.resize(sys.rho.size());
  sys.rho_x.resize(sys.rho.size());
  for (int j = 0; j <= nz; ++j) {
    const double z = sys.znodes[static_cast<size_t>(j)];
    for (int i = 0; i < n; ++i) {
      const size_t idx = static_cast<size_t>(sys.node_index(j, i));
      sys.rho[idx] = (z + 1.0) * f.value(i) - z * b.value(i);
      sys.rho_z[idx] = f.value(i) - b.value(i);
      sys.rho_x[idx] = (z + 1.0) * fp.value(i) - z * bp.value(i);
    }
  }

  const PaddedBoundary pf = pad_boundary(geom.top(), sys.mpad);
  const PaddedBoundary pb = pad_boundary(geom.bottom(), sys.mpad);
  const size_t slabs = static_cast<size_t>(nz) * 2;
  sys.a11.resize(slabs * sys.mpad);
  sys.a12.resize(slabs * sys.mpad);
  sys.a22.resize(slabs * sys.mpad);
  for (int e = 0; e < nz; ++e) {
    const double z0 = sys.znodes[static_cast<size_t>(e)];
    const double h = sys.znodes[static_cast<size_t>(e) + 1] - z0;
    for (int q = 0; q < 2; ++q) {
      const double z = z0 + FlattenedSystem::gauss_t(q) * h;
      for (int m = 0; m < sys.mpad; ++m) {
        const double gap = pf.value[static_cast<size_t>(m)] - pb.value[static_cast<size_t>(m)];
        const double rx = (z + 1.0) * pf.slope[static_cast<size_t>(m)] -
                          z * pb.slope[static_cast<size_t>(m)];
        const size_t c = static_cast<size_t>(sys.coef_index(e, q, m));
        sys.a11[c] = gap;
        sys.a12[c] = -rx;
        sys.a22[c] = (1.0 + rx * rx) / gap;
      }
    }
  }
  return sys;
}

FlattenedSystem build_flatten_infinite(const HalfSpaceGeometry& geom, int nz,
                                       double beta) {
  if (nz < 2) throw std::invalid_argument("build_flatten_infinite: nz must be >= 2");
  if (beta <= 0.0) beta = 6.4;
  FlattenedSystem sys{geom.top().field.grid()};
  const int n = sys.xgrid.size();
  const double depth = geom.depth();
  sys.nz = nz;
  sys.finite_depth = false;
  sys.ref_depth = depth;
  sys.mesh_beta = beta;
  sys.znodes = graded_mesh(depth, nz, beta);
  sys.lip_top = geom.top().lipschitz;
  sys.mpad = 3 * n / 2;

  const SpectralField fp = derivative(geom.top().field);
  sys.rho.resize(static_cast<size_t>(nz + 1) * n);
  sys.rho_z.resize(sys.rho.size());
  sys.rho_x.resize(sys.rho.size());
  for (int j = 0; j <= nz; ++j) {
    const double z = sys.znodes[static_cast<size_t>(j)];
    for (int i = 0; i < n; ++i) {
      const size_t idx = static_cast<size_t>(sys.node_index(j, i));
      sys.rho[idx] = z + geom.top().field.value(i);
      sys.rho_z[idx] = 1.0;
      sys.rho_x[idx] = fp.value(i);
    }
  }

  const PaddedBoundary pf = pad_boundary(geom.top(), sys.mpad);
  const size_t slabs = static_cast<size_t>(nz) * 2;
  sys.a11.resize(slabs * sys.mpad);
  sys.a12.resize(slabs * sys.mpad);
  sys.a22.resize(slabs * sys.mpad);
  for (int e = 0; e < nz; ++e) {
    for (int q = 0; q < 2; ++q) {
      for (int m = 0; m < sys.mpad; ++m) {
        const double rx = pf.slope[static_cast<size_t>(m)];
        const size_t c = static_cast<size_t>(sys.coef_index(e, q, m));
        sys.a11[c] = 1.0;
        sys.a12[c] = -rx;
        sys.a22[c] = 1.0 + rx * rx;
      }
    }
  }
  return sys;
}

double structural_factor(const StripGeometry& geom) {
  const double gap = w1inf_norm(geom.top().field - geom.bottom().field);
  const double lf = geom.top().lipschitz;
  return geom.separation() / (1.0 + lf * lf + gap * gap);
}

double structural_factor(const HalfSpaceGeometry& geom) {
  return 1.0 / (1.0 + geom.top().lipschitz);
}

CoercivityBound coercivity_bound_M(const StripGeometry& geom, double c_cal) {
  return CoercivityBound{structural_factor(geom), c_cal};
}

CoercivityBound coercivity_bound_M(const HalfSpaceGeometry& geom, double c_cal) {
  return CoercivityBound{structural_factor(geom), c_cal};
}

BoundaryFn preset_flat(const PeriodicGrid& grid, double level) {
  return BoundaryFn(constant(grid, level));
}

BoundaryFn preset_single_mode(const PeriodicGrid& grid, int k, double amplitude,
                              double phase) {
  return BoundaryFn(
      harmonic(grid, k, amplitude * std::cos(phase), -amplitude * std::sin(phase)));
}

BoundaryFn preset_multi_mode(const PeriodicGrid& grid,
                             const std::vector<std::pair<int, double>>& modes) {
  SpectralField acc = SpectralField::zero(grid);
  for (const auto& [k, amp] : modes) acc = acc + harmonic(grid, k, amp);
  return BoundaryFn(std::move(acc));
}

namespace {

SpectralField random_decay_field(const PeriodicGrid& grid, unsigned long long seed,
                                 int kmax) {
  if (kmax <= 0) kmax = grid.size() / 3;
  kmax = std::min(kmax, grid.size() / 2 - 1);
  Rng rng(seed);
  std::vector<std::complex<double>> bins(static_cast<size_t>(grid.num_bins()), 0.0);
  for (int k = 1; k <= kmax; ++k) {
    const double decay = 1.0 / (static_cast<double>(k) * k);
    bins[static_cast<size_t>(k)] =
        0.5 * decay * std::complex<double>(rng.normal(), rng.normal());
  }
  return SpectralField::from_bins(grid, std::move(bins));
}

}  // namespace

BoundaryFn preset_random_lipschitz(const PeriodicGrid& grid, unsigned long long seed,
                                   double target_slope, int kmax) {
  SpectralField raw = random_decay_field(grid, seed, kmax);
  const double lip = derivative(raw).max_abs();
  if (lip == 0.0) return BoundaryFn(raw);
  return BoundaryFn((target_slope / lip) * raw);
}

SpectralField random_field(const PeriodicGrid& grid, unsigned long long seed,
                           int kmax) {
  SpectralField raw = random_decay_field(grid, seed, kmax);
  const double l2 = lp_norm(raw, 2.0);
  if (l2 == 0.0) return raw;
  return (1.0 / l2) * raw;
}

BoundaryFn boundary_from_csv(const std::string& path, double period) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open boundary CSV: " + path);
  std::vector<double> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ss(line);
    double v = 0.0;
    if (!(ss >> v)) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected a number");
    }
    samples.push_back(v);
  }
  const size_t n = samples.size();
  if (n < 8 || (n & (n - 1)) != 0) {
    throw ConfigError(path + ": sample count must be a power of two >= 8, got " +
                      std::to_string(n));
  }
  return BoundaryFn(SpectralField(PeriodicGrid(static_cast<int>(n), period),
                                  std::move(samples)));
}

}  // namespace dnlab
