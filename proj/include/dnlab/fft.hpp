#pragma once

#include <complex>
#include <span>
#include <vector>

namespace dnlab::fft {

// Real-to-complex transform of n uniformly spaced samples, returning the
// n/2+1 half-spectrum scaled by 1/n, so bin k holds the coefficient c_k of
// g(x) = sum_k c_k exp(i k 2pi x / L) with c_{-k} = conj(c_k).
std::vector<std::complex<double>> forward(std::span<const double> values);

// Exact inverse of forward(): reconstructs n real samples from the
// half-spectrum. bins.size() must equal n/2+1.
std::vector<double> inverse(std::span<const std::complex<double>> bins, int n);

// Allocation-free variants for hot loops. bins must hold n/2+1 entries.
void forward_into(std::span<const double> values, std::complex<double>* bins);
void inverse_into(std::span<const std::complex<double>> bins, int n, double* values);

}  // namespace dnlab::fft
