#include "a2a/kernels.hpp"

#include <algorithm>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace a2a::kernels {

namespace {
Mode g_mode = Mode::kOpenMP;
int g_threads = 0;  // 0 = library default

// Below this many multiply-adds the parallel fork costs more than it saves.
constexpr int64_t kParallelCutoff = 1 << 16;

inline bool parallel_for(int64_t work) {
#ifdef _OPENMP
  return g_mode == Mode::kOpenMP && work >= kParallelCutoff;
#else
  (void)work;
  return false;
#endif
}
}  // namespace

Mode mode() { return g_mode; }
void set_mode(Mode m) { g_mode = m; }

int num_threads() {
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void set_num_threads(int n) {
  g_threads = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

// ---------------------------------------------------------------------------
// gemm

namespace {

inline void gemm_nn_rows(int r0, int r1, int K, int N, const double* A,
                         const double* B, double* C) {
  for (int i = r0; i < r1; i++) {
    double* ci = C + int64_t(i) * N;
    const double* ai = A + int64_t(i) * K;
    for (int k = 0; k < K; k++) {
      double a = ai[k];
      const double* bk = B + int64_t(k) * N;
      for (int j = 0; j < N; j++) ci[j] += a * bk[j];
    }
  }
}

inline void gemm_tn_rows(int r0, int r1, int K, int M, int N, const double* A,
                         const double* B, double* C) {
  // C[i][j] += sum_k A[k][i] * B[k][j]
  for (int i = r0; i < r1; i++) {
    double* ci = C + int64_t(i) * N;
    for (int k = 0; k < K; k++) {
      double a = A[int64_t(k) * M + i];
      const double* bk = B + int64_t(k) * N;
      for (int j = 0; j < N; j++) ci[j] += a * bk[j];
    }
  }
}

inline void gemm_nt_rows(int r0, int r1, int K, int N, const double* A,
                         const double* B, double* C) {
  // C[i][j] += dot(A[i][.], B[j][.])
  for (int i = r0; i < r1; i++) {
    const double* ai = A + int64_t(i) * K;
    double* ci = C + int64_t(i) * N;
    for (int j = 0; j < N; j++) {
      const double* bj = B + int64_t(j) * K;
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      int k = 0;
      for (; k + 4 <= K; k += 4) {
        s0 += ai[k] * bj[k];
        s1 += ai[k + 1] * bj[k + 1];
        s2 += ai[k + 2] * bj[k + 2];
        s3 += ai[k + 3] * bj[k + 3];
      }
      double s = (s0 + s1) + (s2 + s3);
      for (; k < K; k++) s += ai[k] * bj[k];
      ci[j] += s;
    }
  }
}

}  // namespace

void gemm_nn(int M, int K, int N, const double* A, const double* B, double* C) {
  if (parallel_for(int64_t(M) * K * N)) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; i++) gemm_nn_rows(i, i + 1, K, N, A, B, C);
  } else {
    gemm_nn_rows(0, M, K, N, A, B, C);
  }
}

void gemm_tn(int M, int K, int N, const double* A, const double* B, double* C) {
  if (parallel_for(int64_t(M) * K * N)) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; i++) gemm_tn_rows(i, i + 1, K, M, N, A, B, C);
  } else {
    gemm_tn_rows(0, M, K, M, N, A, B, C);
  }
}

void gemm_nt(int M, int K, int N, const double* A, const double* B, double* C) {
  if (parallel_for(int64_t(M) * K * N)) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < M; i++) gemm_nt_rows(i, i + 1, K, N, A, B, C);
  } else {
    gemm_nt_rows(0, M, K, N, A, B, C);
  }
}

// ---------------------------------------------------------------------------
// conv1d, time-major, "same" output length

namespace {

inline int clamp_idx(int t, int T) { return t < 0 ? 0 : (t >= T ? T - 1 : t); }

inline void conv1d_outs(int t0, int t1, int T, int IC, int OC, int K, int dil,
                        Pad pad, const double* x, const double* w,
                        const double* b, double* y) {
  int half = K / 2;
  for (int t = t0; t < t1; t++) {
    double* yt = y + int64_t(t) * OC;
    if (b)
      for (int oc = 0; oc < OC; oc++) yt[oc] += b[oc];
    for (int k = 0; k < K; k++) {
      int src = t + (k - half) * dil;
      if (pad == Pad::kReplicate)
        src = clamp_idx(src, T);
      else if (src < 0 || src >= T)
        continue;
      const double* xs = x + int64_t(src) * IC;
      for (int oc = 0; oc < OC; oc++) {
        const double* wk = w + (int64_t(oc) * K + k) * IC;
        double s0 = 0, s1 = 0;
        int ic = 0;
        for (; ic + 2 <= IC; ic += 2) {
          s0 += wk[ic] * xs[ic];
          s1 += wk[ic + 1] * xs[ic + 1];
        }
        double s = s0 + s1;
        for (; ic < IC; ic++) s += wk[ic] * xs[ic];
        yt[oc] += s;
      }
    }
  }
}

}  // namespace

void conv1d(int T, int IC, int OC, int K, int dil, Pad pad, const double* x,
            const double* w, const double* b, double* y) {
  if (parallel_for(int64_t(T) * IC * OC * K)) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < T; t++) conv1d_outs(t, t + 1, T, IC, OC, K, dil, pad, x, w, b, y);
  } else {
    conv1d_outs(0, T, T, IC, OC, K, dil, pad, x, w, b, y);
  }
}

namespace {

inline void conv1d_gx_outs(int t0, int t1, int T, int IC, int OC, int K,
                           int dil, Pad pad, const double* gy, const double* w,
                           double* gx) {
  int half = K / 2;
  // gx[src][ic] += gy[t][oc] * w[oc][k][ic] for every (t,k) mapping to src.
  // With replicate padding the clamped taps also land on edge rows, so the
  // loop runs over destinations (t,k) and tests ownership of src == row.
  for (int row = t0; row < t1; row++) {
    double* g = gx + int64_t(row) * IC;
    for (int k = 0; k < K; k++) {
      int off = (k - half) * dil;
      // which output frames t touch this row through tap k
      if (pad == Pad::kReplicate) {
        for (int t = 0; t < T; t++) {
          if (clamp_idx(t + off, T) != row) continue;
          const double* gt = gy + int64_t(t) * OC;
          for (int oc = 0; oc < OC; oc++) {
            const double* wk = w + (int64_t(oc) * K + k) * IC;
            double a = gt[oc];
            for (int ic = 0; ic < IC; ic++) g[ic] += a * wk[ic];
          }
        }
      } else {
        int t = row - off;
        if (t < 0 || t >= T) continue;
        const double* gt = gy + int64_t(t) * OC;
        for (int oc = 0; oc < OC; oc++) {
          const double* wk = w + (int64_t(oc) * K + k) * IC;
          double a = gt[oc];
          for (int ic = 0; ic < IC; ic++) g[ic] += a * wk[ic];
        }
      }
    }
  }
}

inline void conv1d_gw_outs(int oc0, int oc1, int T, int IC, int OC, int K,
                           int dil, Pad pad, const double* x, const double* gy,
                           double* gw, double* gb) {
  int half = K / 2;
  for (int oc = oc0; oc < oc1; oc++) {
    if (gb) {
      double s = 0;
      for (int t = 0; t < T; t++) s += gy[int64_t(t) * OC + oc];
      gb[oc] += s;
    }
    for (int k = 0; k < K; k++) {
      double* wk = gw + (int64_t(oc) * K + k) * IC;
      for (int t = 0; t < T; t++) {
        int src = t + (k - half) * dil;
        if (pad == Pad::kReplicate)
          src = clamp_idx(src, T);
        else if (src < 0 || src >= T)
          continue;
        double a = gy[int64_t(t) * OC + oc];
        const double* xs = x + int64_t(src) * IC;
        for (int ic = 0; ic < IC; ic++) wk[ic] += a * xs[ic];
      }
    }
  }
}

}  // namespace

void conv1d_grad_input(int T, int IC, int OC, int K, int dil, Pad pad,
                       const double* gy, const double* w, double* gx) {
  // Replicate-pad ownership scan is quadratic in T per row; those layers are
  // small (encoder stacks), the hot vocoder layers use zero padding.
  int64_t work = int64_t(T) * IC * OC * K * (pad == Pad::kReplicate ? T : 1);
  if (parallel_for(work)) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < T; t++)
      conv1d_gx_outs(t, t + 1, T, IC, OC, K, dil, pad, gy, w, gx);
  } else {
    conv1d_gx_outs(0, T, T, IC, OC, K, dil, pad, gy, w, gx);
  }
}

void conv1d_grad_weight(int T, int IC, int OC, int K, int dil, Pad pad,
                        const double* x, const double* gy, double* gw,
                        double* gb) {
  if (parallel_for(int64_t(T) * IC * OC * K)) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < OC; oc++)
      conv1d_gw_outs(oc, oc + 1, T, IC, OC, K, dil, pad, x, gy, gw, gb);
  } else {
    conv1d_gw_outs(0, OC, T, IC, OC, K, dil, pad, x, gy, gw, gb);
  }
}

// ---------------------------------------------------------------------------
// transposed conv1d

namespace {

inline void convt_outs(int o0, int o1, int T, int IC, int OC, int K, int stride,
                       int pad, const double* x, const double* w,
                       const double* b, double* y) {
  for (int o = o0; o < o1; o++) {
    double* yo = y + int64_t(o) * OC;
    if (b)
      for (int oc = 0; oc < OC; oc++) yo[oc] += b[oc];
    for (int k = 0; k < K; k++) {
      int num = o + pad - k;
      if (num < 0 || num % stride) continue;
      int t = num / stride;
      if (t >= T) continue;
      const double* xt = x + int64_t(t) * IC;
      for (int ic = 0; ic < IC; ic++) {
        const double* wk = w + (int64_t(ic) * K + k) * OC;
        double a = xt[ic];
        for (int oc = 0; oc < OC; oc++) yo[oc] += a * wk[oc];
      }
    }
  }
}

inline void convt_gx_outs(int t0, int t1, int IC, int OC, int K, int stride,
                          int pad, int Tout, const double* gy, const double* w,
                          double* gx) {
  for (int t = t0; t < t1; t++) {
    double* g = gx + int64_t(t) * IC;
    for (int k = 0; k < K; k++) {
      int o = t * stride + k - pad;
      if (o < 0 || o >= Tout) continue;
      const double* go = gy + int64_t(o) * OC;
      for (int ic = 0; ic < IC; ic++) {
        const double* wk = w + (int64_t(ic) * K + k) * OC;
        double s = 0;
        for (int oc = 0; oc < OC; oc++) s += go[oc] * wk[oc];
        g[ic] += s;
      }
    }
  }
}

inline void convt_gw_outs(int ic0, int ic1, int T, int IC, int OC, int K,
                          int stride, int pad, int Tout, const double* x,
                          const double* gy, double* gw) {
  for (int ic = ic0; ic < ic1; ic++) {
    for (int k = 0; k < K; k++) {
      double* wk = gw + (int64_t(ic) * K + k) * OC;
      for (int t = 0; t < T; t++) {
        int o = t * stride + k - pad;
        if (o < 0 || o >= Tout) continue;
        double a = x[int64_t(t) * IC + ic];
        const double* go = gy + int64_t(o) * OC;
        for (int oc = 0; oc < OC; oc++) wk[oc] += a * go[oc];
      }
    }
  }
}

}  // namespace

void conv_transpose1d(int T, int IC, int OC, int K, int stride, int pad,
                      int Tout, const double* x, const double* w,
                      const double* b, double* y) {
  if (parallel_for(int64_t(Tout) * IC * OC * K / stride)) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < Tout; o++)
      convt_outs(o, o + 1, T, IC, OC, K, stride, pad, x, w, b, y);
  } else {
    convt_outs(0, Tout, T, IC, OC, K, stride, pad, x, w, b, y);
  }
}

void conv_transpose1d_grad_input(int T, int IC, int OC, int K, int stride,
                                 int pad, int Tout, const double* gy,
                                 const double* w, double* gx) {
  if (parallel_for(int64_t(T) * IC * OC * K)) {
#pragma omp parallel for schedule(static)
    for (int t = 0; t < T; t++)
      convt_gx_outs(t, t + 1, IC, OC, K, stride, pad, Tout, gy, w, gx);
  } else {
    convt_gx_outs(0, T, IC, OC, K, stride, pad, Tout, gy, w, gx);
  }
}

void conv_transpose1d_grad_weight(int T, int IC, int OC, int K, int stride,
                                  int pad, int Tout, const double* x,
                                  const double* gy, double* gw, double* gb) {
  if (parallel_for(int64_t(T) * IC * OC * K)) {
#pragma omp parallel for schedule(static)
    for (int ic = 0; ic < IC; ic++)
      convt_gw_outs(ic, ic + 1, T, IC, OC, K, stride, pad, Tout, x, gy, gw);
  } else {
    convt_gw_outs(0, IC, T, IC, OC, K, stride, pad, Tout, x, gy, gw);
  }
  if (gb) {
    for (int o = 0; o < Tout; o++)
      for (int oc = 0; oc < OC; oc++) gb[oc] += gy[int64_t(o) * OC + oc];
  }
}

}  // namespace a2a::kernels
