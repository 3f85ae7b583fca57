#pragma once

#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace dnlab {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Uniform periodic grid on [0, period). One dimension; the period defaults
/// to 2*pi (torus mode). A larger period (>= 32*pi by convention) stands in
/// for the real line, with data expected to live in the middle of the cell.
class PeriodicGrid {
 public:
  explicit PeriodicGrid(int n, double period = kTwoPi);

  int size() const { return n_; }
  double period() const { return period_; }
  double spacing() const { return period_ / n_; }
  double point(int i) const { return spacing() * i; }

  /// Number of half-spectrum bins (n/2 + 1, bin n/2 = Nyquist).
  int num_bins() const { return n_ / 2 + 1; }
  /// Physical frequency of bin k: 2*pi*k / period (integers on the torus).
  double freq(int k) const { return kTwoPi * k / period_; }
  /// True when the period is the plain torus 2*pi.
  bool torus() const;

  bool operator==(const PeriodicGrid& o) const {
    return n_ == o.n_ && period_ == o.period_;
  }

 private:
  int n_;
  double period_;
};

/// Real periodic function sampled on a PeriodicGrid, stored together with its
/// Fourier half-spectrum. Immutable after construction; the two
/// representations are exact FFT round-trips of one another.
///
/// Coefficient convention: bins()[k] = c_k with g(x) = sum_k c_k e^{i xi_k x},
/// xi_k = 2 pi k / period, c_{-k} = conj(c_k). On the 2*pi torus this is
/// c_k = (2*pi)^{-1} \int g e^{-ikx} dx.
class SpectralField {
 public:
  SpectralField(PeriodicGrid grid, std::vector<double> values);

  static SpectralField from_bins(PeriodicGrid grid,
                                 std::vector<std::complex<double>> bins);
  static SpectralField zero(PeriodicGrid grid);

  const PeriodicGrid& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::complex<double>>& bins() const { return bins_; }
  double value(int i) const { return values_[static_cast<size_t>(i)]; }

  double max_abs() const;

 private:
  SpectralField(PeriodicGrid grid, std::vector<double> values,
                std::vector<std::complex<double>> bins)
      : grid_(grid), values_(std::move(values)), bins_(std::move(bins)) {}

  PeriodicGrid grid_;
  std::vector<double> values_;
  std::vector<std::complex<double>> bins_;
};

SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(double s, const SpectralField& a);

/// cos/sin mode helper: amp_cos*cos(k 2pi x/L) + amp_sin*sin(k 2pi x/L).
SpectralField harmonic(const PeriodicGrid& grid, int k, double amp_cos,
                       double amp_sin = 0.0);
SpectralField constant(const PeriodicGrid& grid, double c);

/// Nonnegative radial Fourier multiplier m(|xi|), applied at the grid's
/// physical frequencies.
struct MultiplierSymbol {
  std::function<double(double)> m;
  double operator()(double xi) const { return m(xi); }
};

/// Pointwise multiplication of the spectrum by m(|xi_k|). Total on real
/// fields; the output is real.
SpectralField apply_multiplier(const SpectralField& g, const MultiplierSymbol& m);

/// Spectral derivative d/dx (Nyquist mode dropped).
SpectralField derivative(const SpectralField& g);

/// Homogeneous Sobolev seminorm of order s in [-1, 1]:
/// sqrt( L * sum_k |xi_k|^{2s} |c_k|^2 ). s = 0 includes the mean and equals
/// the L2 norm; s != 0 excludes the k = 0 term.
double seminorm_hs(const SpectralField& g, double s);

/// Tempered half norm: sqrt( L * sum_k min(|xi_k|, xi_k^2) |c_k|^2 ).
/// Coincides with seminorm_hs(., 1/2) on the torus where |xi_k| >= 1.
double norm_wt_half(const SpectralField& g);

/// sqrt( L * sum_k (1 + xi_k^2)^{-1/2} |c_k|^2 ), mean included.
double norm_h_neg_half(const SpectralField& u);

/// sup norm plus the discrete alpha-Hoelder seminorm over all grid pairs with
/// periodic distance. Lower bound of the continuum norm, converging as the
/// grid refines. O(N^2) pairwise scan.
double holder_norm(const SpectralField& g, double alpha);

/// Equal-weight (trapezoid) L^p norm, p >= 1.
double lp_norm(const SpectralField& g, double p);

/// Mean value = zeroth Fourier coefficient.
double mean(const SpectralField& g);

/// Values of g spectrally interpolated onto a finer grid of m points
/// (m >= grid size; the Nyquist bin is dropped).
std::vector<double> resample_values(const SpectralField& g, int m);

}  // namespace dnlab
