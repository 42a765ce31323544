#include "a2a/fft.hpp"

#include <cmath>

#include "a2a/common.hpp"

namespace a2a::fft {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

void transform(std::complex<double>* a, int n, int sign) {
  // bit reversal permutation
  for (int i = 1, j = 0; i < n; i++) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = sign * 2.0 * M_PI / len;
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (int k = 0; k < len / 2; k++) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace

void forward(std::complex<double>* a, int n) {
  if (!is_pow2(n)) fail("fft error: size " + std::to_string(n) + " is not a power of two");
  transform(a, n, -1);
}

void inverse(std::complex<double>* a, int n) {
  if (!is_pow2(n)) fail("fft error: size " + std::to_string(n) + " is not a power of two");
  transform(a, n, +1);
  for (int i = 0; i < n; i++) a[i] /= double(n);
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  int n = int(x.size());
  std::vector<std::complex<double>> a(x.begin(), x.end());
  forward(a.data(), n);
  a.resize(n / 2 + 1);
  return a;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& s, int n) {
  if (int(s.size()) != n / 2 + 1)
    fail("fft error: spectrum size does not match n");
  std::vector<std::complex<double>> a(n);
  for (int i = 0; i <= n / 2; i++) a[i] = s[i];
  for (int i = n / 2 + 1; i < n; i++) a[i] = std::conj(s[n - i]);
  inverse(a.data(), n);
  std::vector<double> out(n);
  for (int i = 0; i < n; i++) out[i] = a[i].real();
  return out;
}

}  // namespace a2a::fft
