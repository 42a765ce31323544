#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "a2a/common.hpp"
#include "a2a/fft.hpp"
#include "a2a/kernels.hpp"

using namespace a2a;
namespace kn = a2a::kernels;

namespace {

std::vector<double> randn(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// plain triple loop reference
void ref_gemm_nn(int M, int K, int N, const double* A, const double* B, double* C) {
  for (int i = 0; i < M; i++)
    for (int j = 0; j < N; j++) {
      double s = 0;
      for (int k = 0; k < K; k++) s += A[i * K + k] * B[k * N + j];
      C[i * N + j] += s;
    }
}

void ref_conv1d(int T, int IC, int OC, int K, int dil, kn::Pad pad,
                const double* x, const double* w, const double* b, double* y) {
  for (int t = 0; t < T; t++)
    for (int oc = 0; oc < OC; oc++) {
      double s = b ? b[oc] : 0.0;
      for (int k = 0; k < K; k++) {
        int src = t + (k - K / 2) * dil;
        if (pad == kn::Pad::kReplicate)
          src = src < 0 ? 0 : (src >= T ? T - 1 : src);
        else if (src < 0 || src >= T)
          continue;
        for (int ic = 0; ic < IC; ic++)
          s += w[(oc * K + k) * IC + ic] * x[src * IC + ic];
      }
      y[t * OC + oc] += s;
    }
}

void ref_convt(int T, int IC, int OC, int K, int stride, int pad, int Tout,
               const double* x, const double* w, const double* b, double* y) {
  for (int o = 0; o < Tout; o++)
    for (int oc = 0; oc < OC; oc++) y[o * OC + oc] += b ? b[oc] : 0.0;
  for (int t = 0; t < T; t++)
    for (int k = 0; k < K; k++) {
      int o = t * stride + k - pad;
      if (o < 0 || o >= Tout) continue;
      for (int ic = 0; ic < IC; ic++)
        for (int oc = 0; oc < OC; oc++)
          y[o * OC + oc] += x[t * IC + ic] * w[(ic * K + k) * OC + oc];
    }
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct ModeGuard {
  kn::Mode saved = kn::mode();
  ~ModeGuard() { kn::set_mode(saved); }
};

}  // namespace

TEST_CASE("gemm variants match the naive reference") {
  Rng rng(101);
  int M = 17, K = 23, N = 13;
  auto A = randn(rng, size_t(M) * K);
  auto B = randn(rng, size_t(K) * N);
  std::vector<double> C0(size_t(M) * N, 0.0), C1 = C0;

  ref_gemm_nn(M, K, N, A.data(), B.data(), C0.data());
  kn::gemm_nn(M, K, N, A.data(), B.data(), C1.data());
  for (size_t i = 0; i < C0.size(); i++) CHECK(C1[i] == doctest::Approx(C0[i]).epsilon(1e-12));

  // A^T path: store A as [K x M]
  std::vector<double> At(size_t(K) * M);
  for (int i = 0; i < M; i++)
    for (int k = 0; k < K; k++) At[k * M + i] = A[i * K + k];
  std::fill(C1.begin(), C1.end(), 0.0);
  kn::gemm_tn(M, K, N, At.data(), B.data(), C1.data());
  for (size_t i = 0; i < C0.size(); i++) CHECK(C1[i] == doctest::Approx(C0[i]).epsilon(1e-12));

  // B^T path: store B as [N x K]
  std::vector<double> Bt(size_t(N) * K);
  for (int k = 0; k < K; k++)
    for (int j = 0; j < N; j++) Bt[j * K + k] = B[k * N + j];
  std::fill(C1.begin(), C1.end(), 0.0);
  kn::gemm_nt(M, K, N, A.data(), Bt.data(), C1.data());
  for (size_t i = 0; i < C0.size(); i++) CHECK(C1[i] == doctest::Approx(C0[i]).epsilon(1e-12));
}

TEST_CASE("gemm accumulates into C") {
  Rng rng(7);
  int M = 3, K = 4, N = 5;
  auto A = randn(rng, size_t(M) * K);
  auto B = randn(rng, size_t(K) * N);
  std::vector<double> C(size_t(M) * N, 2.5), C2(C);
  kn::gemm_nn(M, K, N, A.data(), B.data(), C.data());
  ref_gemm_nn(M, K, N, A.data(), B.data(), C2.data());
  for (size_t i = 0; i < C.size(); i++) CHECK(C[i] == doctest::Approx(C2[i]));
}

TEST_CASE("conv1d matches reference for both paddings and dilation") {
  Rng rng(202);
  for (int dil : {1, 2, 3})
    for (kn::Pad pad : {kn::Pad::kZero, kn::Pad::kReplicate}) {
      int T = 19, IC = 5, OC = 4, K = 5;
      auto x = randn(rng, size_t(T) * IC);
      auto w = randn(rng, size_t(OC) * K * IC);
      auto b = randn(rng, OC);
      std::vector<double> y0(size_t(T) * OC, 0.0), y1 = y0;
      ref_conv1d(T, IC, OC, K, dil, pad, x.data(), w.data(), b.data(), y0.data());
      kn::conv1d(T, IC, OC, K, dil, pad, x.data(), w.data(), b.data(), y1.data());
      for (size_t i = 0; i < y0.size(); i++)
        CHECK(y1[i] == doctest::Approx(y0[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv1d gradients agree with finite differences") {
  Rng rng(303);
  int T = 9, IC = 3, OC = 2, K = 3, dil = 1;
  for (kn::Pad pad : {kn::Pad::kZero, kn::Pad::kReplicate}) {
    auto x = randn(rng, size_t(T) * IC);
    auto w = randn(rng, size_t(OC) * K * IC);
    auto b = randn(rng, OC);
    auto gy = randn(rng, size_t(T) * OC);

    auto loss = [&](const std::vector<double>& xx, const std::vector<double>& ww,
                    const std::vector<double>& bb) {
      std::vector<double> y(size_t(T) * OC, 0.0);
      kn::conv1d(T, IC, OC, K, dil, pad, xx.data(), ww.data(), bb.data(), y.data());
      double s = 0;
      for (size_t i = 0; i < y.size(); i++) s += y[i] * gy[i];
      return s;
    };

    std::vector<double> gx(x.size(), 0.0), gw(w.size(), 0.0), gb(b.size(), 0.0);
    kn::conv1d_grad_input(T, IC, OC, K, dil, pad, gy.data(), w.data(), gx.data());
    kn::conv1d_grad_weight(T, IC, OC, K, dil, pad, x.data(), gy.data(), gw.data(), gb.data());

    double h = 1e-6;
    for (size_t i = 0; i < x.size(); i += 5) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      CHECK(gx[i] == doctest::Approx((loss(xp, w, b) - loss(xm, w, b)) / (2 * h)).epsilon(1e-5));
    }
    for (size_t i = 0; i < w.size(); i += 4) {
      auto wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      CHECK(gw[i] == doctest::Approx((loss(x, wp, b) - loss(x, wm, b)) / (2 * h)).epsilon(1e-5));
    }
    for (size_t i = 0; i < b.size(); i++) {
      auto bp = b, bm = b;
      bp[i] += h;
      bm[i] -= h;
      CHECK(gb[i] == doctest::Approx((loss(x, w, bp) - loss(x, w, bm)) / (2 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("conv_transpose1d matches reference and its grads pass FD") {
  Rng rng(404);
  int T = 7, IC = 3, OC = 2, u = 4, K = 2 * u, pad = (K - u) / 2, Tout = T * u;
  auto x = randn(rng, size_t(T) * IC);
  auto w = randn(rng, size_t(IC) * K * OC);
  auto b = randn(rng, OC);
  std::vector<double> y0(size_t(Tout) * OC, 0.0), y1 = y0;
  ref_convt(T, IC, OC, K, u, pad, Tout, x.data(), w.data(), b.data(), y0.data());
  kn::conv_transpose1d(T, IC, OC, K, u, pad, Tout, x.data(), w.data(), b.data(), y1.data());
  for (size_t i = 0; i < y0.size(); i++) CHECK(y1[i] == doctest::Approx(y0[i]).epsilon(1e-12));

  auto gy = randn(rng, size_t(Tout) * OC);
  auto loss = [&](const std::vector<double>& xx, const std::vector<double>& ww) {
    std::vector<double> y(size_t(Tout) * OC, 0.0);
    kn::conv_transpose1d(T, IC, OC, K, u, pad, Tout, xx.data(), ww.data(), b.data(), y.data());
    double s = 0;
    for (size_t i = 0; i < y.size(); i++) s += y[i] * gy[i];
    return s;
  };
  std::vector<double> gx(x.size(), 0.0), gw(w.size(), 0.0), gb(b.size(), 0.0);
  kn::conv_transpose1d_grad_input(T, IC, OC, K, u, pad, Tout, gy.data(), w.data(), gx.data());
  kn::conv_transpose1d_grad_weight(T, IC, OC, K, u, pad, Tout, x.data(), gy.data(), gw.data(), gb.data());
  double h = 1e-6;
  for (size_t i = 0; i < x.size(); i += 3) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    CHECK(gx[i] == doctest::Approx((loss(xp, w) - loss(xm, w)) / (2 * h)).epsilon(1e-5));
  }
  for (size_t i = 0; i < w.size(); i += 5) {
    auto wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    CHECK(gw[i] == doctest::Approx((loss(x, wp) - loss(x, wm)) / (2 * h)).epsilon(1e-5));
  }
  double gbsum = 0;
  for (int o = 0; o < Tout; o++) gbsum += gy[o * OC];
  CHECK(gb[0] == doctest::Approx(gbsum));
}

TEST_CASE("serial and OpenMP paths are bitwise identical") {
  ModeGuard guard;
  Rng rng(505);
  // big enough to clear the parallel work threshold
  int M = 64, K = 80, N = 96;
  auto A = randn(rng, size_t(M) * K);
  auto B = randn(rng, size_t(K) * N);

  kn::set_mode(kn::Mode::kSerial);
  std::vector<double> C0(size_t(M) * N, 0.0);
  kn::gemm_nn(M, K, N, A.data(), B.data(), C0.data());
  kn::set_mode(kn::Mode::kOpenMP);
  std::vector<double> C1(size_t(M) * N, 0.0);
  kn::gemm_nn(M, K, N, A.data(), B.data(), C1.data());
  CHECK(bitwise_equal(C0, C1));

  int T = 300, IC = 16, OC = 16, KW = 5;
  auto x = randn(rng, size_t(T) * IC);
  auto w = randn(rng, size_t(OC) * KW * IC);
  auto gy = randn(rng, size_t(T) * OC);
  for (kn::Pad pad : {kn::Pad::kZero, kn::Pad::kReplicate}) {
    std::vector<double> y0(size_t(T) * OC, 0.0), y1 = y0;
    std::vector<double> gx0(x.size(), 0.0), gx1 = gx0;
    std::vector<double> gw0(w.size(), 0.0), gw1 = gw0;
    kn::set_mode(kn::Mode::kSerial);
    kn::conv1d(T, IC, OC, KW, 1, pad, x.data(), w.data(), nullptr, y0.data());
    kn::conv1d_grad_input(T, IC, OC, KW, 1, pad, gy.data(), w.data(), gx0.data());
    kn::conv1d_grad_weight(T, IC, OC, KW, 1, pad, x.data(), gy.data(), gw0.data(), nullptr);
    kn::set_mode(kn::Mode::kOpenMP);
    kn::conv1d(T, IC, OC, KW, 1, pad, x.data(), w.data(), nullptr, y1.data());
    kn::conv1d_grad_input(T, IC, OC, KW, 1, pad, gy.data(), w.data(), gx1.data());
    kn::conv1d_grad_weight(T, IC, OC, KW, 1, pad, x.data(), gy.data(), gw1.data(), nullptr);
    CHECK(bitwise_equal(y0, y1));
    CHECK(bitwise_equal(gx0, gx1));
    CHECK(bitwise_equal(gw0, gw1));
  }

  int u = 4, KT = 8, padt = 2, Tout = T * u;
  auto wt = randn(rng, size_t(IC) * KT * OC);
  auto gyt = randn(rng, size_t(Tout) * OC);
  std::vector<double> y0(size_t(Tout) * OC, 0.0), y1 = y0;
  std::vector<double> gx0(x.size(), 0.0), gx1 = gx0;
  std::vector<double> gw0(wt.size(), 0.0), gw1 = gw0;
  kn::set_mode(kn::Mode::kSerial);
  kn::conv_transpose1d(T, IC, OC, KT, u, padt, Tout, x.data(), wt.data(), nullptr, y0.data());
  kn::conv_transpose1d_grad_input(T, IC, OC, KT, u, padt, Tout, gyt.data(), wt.data(), gx0.data());
  kn::conv_transpose1d_grad_weight(T, IC, OC, KT, u, padt, Tout, x.data(), gyt.data(), gw0.data(), nullptr);
  kn::set_mode(kn::Mode::kOpenMP);
  kn::conv_transpose1d(T, IC, OC, KT, u, padt, Tout, x.data(), wt.data(), nullptr, y1.data());
  kn::conv_transpose1d_grad_input(T, IC, OC, KT, u, padt, Tout, gyt.data(), wt.data(), gx1.data());
  kn::conv_transpose1d_grad_weight(T, IC, OC, KT, u, padt, Tout, x.data(), gyt.data(), gw1.data(), nullptr);
  CHECK(bitwise_equal(y0, y1));
  CHECK(bitwise_equal(gx0, gx1));
  CHECK(bitwise_equal(gw0, gw1));
}

TEST_CASE("fft inverts and matches the DFT definition") {
  Rng rng(606);
  int n = 64;
  std::vector<std::complex<double>> a(n), orig(n);
  for (int i = 0; i < n; i++) a[i] = orig[i] = {rng.normal(), rng.normal()};
  fft::forward(a.data(), n);

  // check a couple of bins against the direct sum
  for (int k : {0, 1, 5, 63}) {
    std::complex<double> s = 0;
    for (int t = 0; t < n; t++)
      s += orig[t] * std::polar(1.0, -2.0 * M_PI * k * t / n);
    CHECK(std::abs(a[k] - s) < 1e-9);
  }

  fft::inverse(a.data(), n);
  for (int i = 0; i < n; i++) CHECK(std::abs(a[i] - orig[i]) < 1e-12);
}

TEST_CASE("rfft/irfft round trip real signals") {
  Rng rng(707);
  int n = 1024;
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  auto s = fft::rfft(x);
  CHECK(int(s.size()) == n / 2 + 1);
  auto y = fft::irfft(s, n);
  for (int i = 0; i < n; i++) CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-10));
}

TEST_CASE("fft rejects non power of two sizes") {
  std::vector<std::complex<double>> a(12);
  CHECK_THROWS_WITH_AS(fft::forward(a.data(), 12),
                       doctest::Contains("fft error"), a2a::Error);
}
