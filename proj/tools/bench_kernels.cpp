// Compares the serial and OpenMP kernel paths: checks bit-identical results,
// then times both on sizes close to what training actually runs.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "a2a/common.hpp"
#include "a2a/kernels.hpp"

using namespace a2a;
namespace kn = a2a::kernels;

static double now_s() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

static void fill(Rng& rng, std::vector<double>& v) {
  for (auto& x : v) x = rng.normal();
}

struct Case {
  const char* name;
  double flops;
  std::vector<double> out_serial, out_omp;
  double t_serial = 0, t_omp = 0;
};

template <class F>
static void run_case(Case& c, F&& f, std::vector<double>& out, int reps) {
  double best = 1e30;
  for (int r = 0; r < reps; r++) {
    std::memset(out.data(), 0, out.size() * sizeof(double));
    double t0 = now_s();
    f(out.data());
    best = std::min(best, now_s() - t0);
  }
  (kn::mode() == kn::Mode::kSerial ? c.out_serial : c.out_omp) = out;
  (kn::mode() == kn::Mode::kSerial ? c.t_serial : c.t_omp) = best;
}

int main(int argc, char** argv) {
  int reps = 5;
  for (int i = 1; i < argc; i++) {
    if (!std::strcmp(argv[i], "--reps") && i + 1 < argc) reps = std::atoi(argv[++i]);
  }
  Rng rng(12345);

  int M = 256, K = 256, N = 256;
  std::vector<double> A(size_t(M) * K), B(size_t(K) * N), C(size_t(M) * N);
  fill(rng, A);
  fill(rng, B);

  int T = 4096, IC = 64, OC = 64, KW = 5;
  std::vector<double> x(size_t(T) * IC), w(size_t(OC) * KW * IC), bias(OC);
  std::vector<double> y(size_t(T) * OC);
  fill(rng, x);
  fill(rng, w);
  fill(rng, bias);

  int u = 4, Tout = T * u, KT = 2 * u, padt = (KT - u) / 2;
  std::vector<double> wt(size_t(IC) * KT * OC), yt(size_t(Tout) * OC);
  fill(rng, wt);

  Case cases[] = {
      {"gemm_nn 256^3", 2.0 * M * K * N, {}, {}, 0, 0},
      {"conv1d T=4096 64x64 k=5", 2.0 * T * IC * OC * KW, {}, {}, 0, 0},
      {"conv_transpose1d u=4", 2.0 * T * IC * OC * KT, {}, {}, 0, 0},
  };

  for (kn::Mode m : {kn::Mode::kSerial, kn::Mode::kOpenMP}) {
    kn::set_mode(m);
    run_case(cases[0], [&](double* out) { kn::gemm_nn(M, K, N, A.data(), B.data(), out); }, C, reps);
    run_case(cases[1], [&](double* out) {
      kn::conv1d(T, IC, OC, KW, 1, kn::Pad::kZero, x.data(), w.data(), bias.data(), out);
    }, y, reps);
    run_case(cases[2], [&](double* out) {
      kn::conv_transpose1d(T, IC, OC, KT, u, padt, Tout, x.data(), wt.data(), bias.data(), out);
    }, yt, reps);
  }

  std::printf("threads: %d\n", kn::num_threads());
  std::printf("%-28s %12s %12s %8s %10s %s\n", "kernel", "serial(ms)", "omp(ms)",
              "speedup", "gflop/s", "bitwise");
  bool all_match = true;
  for (auto& c : cases) {
    bool match = c.out_serial.size() == c.out_omp.size() &&
                 std::memcmp(c.out_serial.data(), c.out_omp.data(),
                             c.out_serial.size() * sizeof(double)) == 0;
    all_match = all_match && match;
    std::printf("%-28s %12.3f %12.3f %7.2fx %10.2f %s\n", c.name,
                c.t_serial * 1e3, c.t_omp * 1e3, c.t_serial / c.t_omp,
                c.flops / c.t_omp * 1e-9, match ? "ok" : "MISMATCH");
  }
  return all_match ? 0 : 1;
}
