#include "dnlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dnlab/fft.hpp"

namespace dnlab {

PeriodicGrid::PeriodicGrid(int n, double period) : n_(n), period_(period) {
  if (n < 8 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("PeriodicGrid: n must be a power of two >= 8");
  }
  if (!(period > 0.0)) {
    throw std::invalid_argument("PeriodicGrid: period must be positive");
  }
}

bool PeriodicGrid::torus() const {
  return std::abs(period_ - kTwoPi) < 1e-14 * kTwoPi;
}

SpectralField::SpectralField(PeriodicGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != static_cast<size_t>(grid_.size())) {
    throw std::invalid_argument("SpectralField: values size mismatch");
  }
  bins_ = fft::forward(values_);
}

SpectralField SpectralField::from_bins(PeriodicGrid grid,
                                       std::vector<std::complex<double>> bins) {
  if (bins.size() != static_cast<size_t>(grid.num_bins())) {
    throw std::invalid_argument("SpectralField: bins size mismatch");
  }
  // Real fields carry real mean and Nyquist bins.
  bins.front() = {bins.front().real(), 0.0};
  bins.back() = {bins.back().real(), 0.0};
  std::vector<double> values = fft::inverse(bins, grid.size());
  return SpectralField(grid, std::move(values), std::move(bins));
}

SpectralField SpectralField::zero(PeriodicGrid grid) {
  return SpectralField(grid, std::vector<double>(static_cast<size_t>(grid.size()), 0.0));
}

double SpectralField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("field grids differ");
  std::vector<double> v(a.values());
  for (size_t i = 0; i < v.size(); ++i) v[i] += b.values()[i];
  return SpectralField(a.grid(), std::move(v));
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("field grids differ");
  std::vector<double> v(a.values());
  for (size_t i = 0; i < v.size(); ++i) v[i] -= b.values()[i];
  return SpectralField(a.grid(), std::move(v));
}

SpectralField operator*(double s, const SpectralField& a) {
  std::vector<double> v(a.values());
  for (double& x : v) x *= s;
  return SpectralField(a.grid(), std::move(v));
}

SpectralField harmonic(const PeriodicGrid& grid, int k, double amp_cos,
                       double amp_sin) {
  if (k < 0 || k > grid.size() / 2) throw std::invalid_argument("harmonic: bad mode");
  std::vector<double> v(static_cast<size_t>(grid.size()));
  const double xi = grid.freq(k);
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i);
    v[static_cast<size_t>(i)] = amp_cos * std::cos(xi * x) + amp_sin * std::sin(xi * x);
  }
  return SpectralField(grid, std::move(v));
}

SpectralField constant(const PeriodicGrid& grid, double c) {
  return SpectralField(grid, std::vector<double>(static_cast<size_t>(grid.size()), c));
}

SpectralField apply_multiplier(const SpectralField& g, const MultiplierSymbol& m) {
  std::vector<std::complex<double>> bins(g.bins());
  for (int k = 0; k < g.grid().num_bins(); ++k) {
    const double w = m(std::abs(g.grid().freq(k)));
    if (!std::isfinite(w)) throw std::invalid_argument("multiplier not finite");
    bins[static_cast<size_t>(k)] *= w;
  }
  return SpectralField::from_bins(g.grid(), std::move(bins));
}

SpectralField derivative(const SpectralField& g) {
  std::vector<std::complex<double>> bins(g.bins());
  for (int k = 0; k < g.grid().num_bins(); ++k) {
    bins[static_cast<size_t>(k)] *= std::complex<double>(0.0, g.grid().freq(k));
  }
  bins.back() = 0.0;  // odd symbol has no consistent action on the Nyquist mode
  return SpectralField::from_bins(g.grid(), std::move(bins));
}

namespace {

// Parseval weight: interior bins represent a conjugate pair.
double bin_weight(const PeriodicGrid& grid, int k) {
  return (k == 0 || k == grid.size() / 2) ? 1.0 : 2.0;
}

double weighted_bin_sum(const SpectralField& g,
                        const std::function<double(double)>& weight,
                        bool include_mean) {
  double sum = 0.0;
  for (int k = include_mean ? 0 : 1; k < g.grid().num_bins(); ++k) {
    const double c2 = std::norm(g.bins()[static_cast<size_t>(k)]);
    sum += bin_weight(g.grid(), k) * weight(std::abs(g.grid().freq(k))) * c2;
  }
  return g.grid().period() * sum;
}

}  // namespace

double seminorm_hs(const SpectralField& g, double s) {
  if (s < -1.0 || s > 1.0) throw std::invalid_argument("seminorm_hs: s must be in [-1, 1]");
  if (s == 0.0) {
    return std::sqrt(weighted_bin_sum(g, [](double) { return 1.0; }, true));
  }
  return std::sqrt(
      weighted_bin_sum(g, [s](double xi) { return std::pow(xi, 2.0 * s); }, false));
}

double norm_wt_half(const SpectralField& g) {
  return std::sqrt(weighted_bin_sum(
      g, [](double xi) { return std::min(xi, xi * xi); }, false));
}

double norm_h_neg_half(const SpectralField& u) {
  return std::sqrt(weighted_bin_sum(
      u, [](double xi) { return 1.0 / std::sqrt(1.0 + xi * xi); }, true));
}

double holder_norm(const SpectralField& g, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("holder_norm: alpha must be in (0, 1]");
  }
  const auto& v = g.values();
  const int n = g.grid().size();
  const double dx = g.grid().spacing();
  double semi = 0.0;
  // Pairs grouped by offset; periodic distance only needs offsets <= n/2.
  for (int o = 1; o <= n / 2; ++o) {
    double jump = 0.0;
    for (int i = 0; i < n; ++i) {
      const int j = (i + o) % n;
      jump = std::max(jump, std::abs(v[static_cast<size_t>(j)] - v[static_cast<size_t>(i)]));
    }
    semi = std::max(semi, jump / std::pow(o * dx, alpha));
  }
  return g.max_abs() + semi;
}

double lp_norm(const SpectralField& g, double p) {
  if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
  const double dx = g.grid().spacing();
  double sum = 0.0;
  for (double v : g.values()) sum += std::pow(std::abs(v), p);
  return std::pow(dx * sum, 1.0 / p);
}

double mean(const SpectralField& g) { return g.bins().front().real(); }

std::vector<double> resample_values(const SpectralField& g, int m) {
  const int n = g.grid().size();
  if (m < n) throw std::invalid_argument("resample_values: m must be >= grid size");
  if (m == n) return g.values();
  std::vector<std::complex<double>> bins(static_cast<size_t>(m / 2 + 1), 0.0);
  for (int k = 0; k < n / 2; ++k) bins[static_cast<size_t>(k)] = g.bins()[static_cast<size_t>(k)];
  return fft::inverse(bins, m);
}

}  // namespace dnlab
