#pragma once

#include <cstdint>

namespace a2a::kernels {

// Every kernel has a serial reference implementation and an OpenMP one.
// Work is partitioned so that each output element is owned by exactly one
// thread and summed in the same inner order as the serial code, so the two
// paths produce bit-identical results; tests assert that, and the bench
// tool compares their throughput.
enum class Mode { kSerial, kOpenMP };

Mode mode();
void set_mode(Mode m);
int num_threads();
void set_num_threads(int n);

// C[M x N] += A[M x K] * B[K x N]
void gemm_nn(int M, int K, int N, const double* A, const double* B, double* C);
// C[M x N] += A^T * B, A stored [K x M], B [K x N]
void gemm_tn(int M, int K, int N, const double* A, const double* B, double* C);
// C[M x N] += A * B^T, A stored [M x K], B [N x K]
void gemm_nt(int M, int K, int N, const double* A, const double* B, double* C);

enum class Pad { kZero, kReplicate };

// 1-D convolution over time-major data.
//   x [T x IC], w [OC x K x IC], b [OC] (may be null), y [T x OC] (+=)
// "same" length output; taps reach x[t + (k - K/2)*dil].
void conv1d(int T, int IC, int OC, int K, int dil, Pad pad, const double* x,
            const double* w, const double* b, double* y);
// gx [T x IC] += dL/dx given gy [T x OC]
void conv1d_grad_input(int T, int IC, int OC, int K, int dil, Pad pad,
                       const double* gy, const double* w, double* gx);
// gw [OC x K x IC] += dL/dw, gb [OC] += dL/db (may be null)
void conv1d_grad_weight(int T, int IC, int OC, int K, int dil, Pad pad,
                        const double* x, const double* gy, double* gw,
                        double* gb);

// Strided transposed convolution (upsampling by `stride`).
//   x [T x IC], w [IC x K x OC], b [OC] (may be null), y [Tout x OC] (+=)
// y[o] sums x[t]*w[.,k,.] over pairs with t*stride + k - pad == o.
void conv_transpose1d(int T, int IC, int OC, int K, int stride, int pad,
                      int Tout, const double* x, const double* w,
                      const double* b, double* y);
void conv_transpose1d_grad_input(int T, int IC, int OC, int K, int stride,
                                 int pad, int Tout, const double* gy,
                                 const double* w, double* gx);
void conv_transpose1d_grad_weight(int T, int IC, int OC, int K, int stride,
                                  int pad, int Tout, const double* x,
                                  const double* gy, double* gw, double* gb);

}  // namespace a2a::kernels
