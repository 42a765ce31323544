#pragma once

#include <complex>
#include <vector>

namespace a2a::fft {

// In-place iterative radix-2 FFT. n must be a power of two.
void forward(std::complex<double>* a, int n);
void inverse(std::complex<double>* a, int n);  // includes the 1/n scale

// Real input of length n (power of two) to n/2+1 spectrum bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

// Inverse of rfft for an n/2+1 bin spectrum, returns n real samples.
std::vector<double> irfft(const std::vector<std::complex<double>>& s, int n);

bool is_pow2(int n);

}  // namespace a2a::fft
