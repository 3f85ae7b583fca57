#include "dnlab/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace dnlab::fft {
namespace {

// FFTW's planner is not thread safe; plan creation/destruction is guarded by
// a single global lock. Execution on an entry's own buffers needs no lock
// because entries live in thread_local storage.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanEntry {
  int n = 0;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  explicit PlanEntry(int n_) : n(n_) {
    std::lock_guard lock(planner_mutex());
    real = fftw_alloc_real(static_cast<size_t>(n));
    cplx = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    r2c = fftw_plan_dft_r2c_1d(n, real, cplx, FFTW_ESTIMATE);
    c2r = fftw_plan_dft_c2r_1d(n, cplx, real, FFTW_ESTIMATE);
  }
  ~PlanEntry() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c);
    fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(cplx);
  }
  PlanEntry(const PlanEntry&) = delete;
  PlanEntry& operator=(const PlanEntry&) = delete;
};

PlanEntry& entry_for(int n) {
  thread_local std::map<int, PlanEntry> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.try_emplace(n, n).first;
  return it->second;
}

}  // namespace

std::vector<std::complex<double>> forward(std::span<const double> values) {
  std::vector<std::complex<double>> bins(values.size() / 2 + 1);
  forward_into(values, bins.data());
  return bins;
}

std::vector<double> inverse(std::span<const std::complex<double>> bins, int n) {
  std::vector<double> values(static_cast<size_t>(n));
  inverse_into(bins, n, values.data());
  return values;
}

void forward_into(std::span<const double> values, std::complex<double>* bins) {
  const int n = static_cast<int>(values.size());
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("fft: size must be even and >= 2");
  PlanEntry& e = entry_for(n);
  std::memcpy(e.real, values.data(), sizeof(double) * values.size());
  fftw_execute(e.r2c);
  const double scale = 1.0 / n;
  for (int k = 0; k <= n / 2; ++k) {
    bins[k] = std::complex<double>(e.cplx[k][0] * scale, e.cplx[k][1] * scale);
  }
}

void inverse_into(std::span<const std::complex<double>> bins, int n, double* values) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("fft: size must be even and >= 2");
  if (bins.size() != static_cast<size_t>(n / 2 + 1)) {
    throw std::invalid_argument("fft: bins.size() must equal n/2+1");
  }
  PlanEntry& e = entry_for(n);
  for (size_t k = 0; k < bins.size(); ++k) {
    e.cplx[k][0] = bins[k].real();
    e.cplx[k][1] = bins[k].imag();
  }
  fftw_execute(e.c2r);  // unnormalized c2r undoes the 1/n applied in forward()
  std::memcpy(values, e.real, sizeof(double) * static_cast<size_t>(n));
}

}  // namespace dnlab::fft
