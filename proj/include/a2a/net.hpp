#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "a2a/kernels.hpp"
#include "a2a/tensor.hpp"

namespace a2a::net {

// Trainable parameter with AdamW state. Values live here between steps;
// tapes borrow them per forward pass.
struct Param {
  std::string name;
  Tensor value;
  Tensor m, v;  // Adam moments, allocated on first update
  int64_t steps = 0;

  Param() = default;
  Param(std::string n, Tensor init) : name(std::move(n)), value(std::move(init)) {}
};

class Tape;

struct Node {
  Tensor val;
  Tensor grad;          // allocated lazily during backward
  bool needs_grad = false;
  Param* param = nullptr;
  std::function<void(Node*)> back;  // pushes this->grad into parents

  Tensor& g();  // grad, allocating zeros on first touch
};

struct Var {
  Node* n = nullptr;
  const Tensor& val() const { return n->val; }
};

class Tape {
 public:
  // train=false freezes every param the tape touches (pure inference pass)
  explicit Tape(bool train = true) : train_(train) {}

  Var input(Tensor t, bool needs_grad = false);
  Var param(Param& p);  // cached per tape
  Var make(Tensor val, std::vector<Node*> parents, std::function<void(Node*)> back);

  // Seeds d(loss)=1 (loss must be a single element) and sweeps in reverse.
  void backward(Var loss);

  // (param, grad) for every param touched by this tape, post-backward.
  std::vector<std::pair<Param*, const Tensor*>> param_grads() const;

 private:
  bool train_ = true;
  std::vector<std::unique_ptr<Node>> nodes_;
  std::unordered_map<Param*, Node*> param_cache_;
};

// elementwise / scalar
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double c);
Var tanh_(Tape& t, Var a);
Var sigmoid_(Tape& t, Var a);
Var softplus_(Tape& t, Var a);
Var leaky_relu_(Tape& t, Var a, double slope = 0.1);
// x + sin^2(alpha * x) / alpha with per-column positive alpha [1 x C]
Var snake_(Tape& t, Var x, Var alpha);
// identity forward, gradient times -lambda backward
Var grl(Tape& t, Var x, double lambda);

// shape
Var reshape(Tape& t, Var a, std::vector<int> shape);
Var slice_rows(Tape& t, Var a, int r0, int len);
Var slice_cols(Tape& t, Var a, int c0, int len);
Var concat_cols(Tape& t, const std::vector<Var>& xs);
Var stack_rows(Tape& t, const std::vector<Var>& rows);  // each [1 x D]
Var row(Tape& t, Var a, int i);

// linear algebra
Var matmul(Tape& t, Var a, Var b);      // [M x K] x [K x N]
Var matmul_nt(Tape& t, Var a, Var b);   // A x B^T, B stored [N x K]
Var linear(Tape& t, Var x, Var w, Var b);  // x [T x I], w [I x O], b [1 x O]
Var row_broadcast_add(Tape& t, Var x, Var v);  // x [T x D] + v [1 x D]

// reductions
Var mean_rows(Tape& t, Var x);          // [T x D] -> [1 x D]
Var mean_std_pool(Tape& t, Var x);      // [T x D] -> [1 x 2D]
Var sum_all(Tape& t, Var x);            // -> [1]
Var mean_all(Tape& t, Var x);
Var l1_loss(Tape& t, Var a, Var b);     // mean |a - b|
Var mse_loss(Tape& t, Var a, Var b);
Var softmax_rows(Tape& t, Var x);
// mean cross-entropy of row-wise softmax against one label per row
Var cross_entropy(Tape& t, Var logits, const std::vector<int>& labels);

// table [V x D], ids 0-based -> [T x D]
Var embedding(Tape& t, Var table, const std::vector<int>& ids);

// kernels-backed convs; w {OC, K, IC} / {IC, K, OC}, b [1 x OC] or null Var
Var conv1d(Tape& t, Var x, Var w, Var b, int dil, kernels::Pad pad);
Var conv_transpose1d(Tape& t, Var x, Var w, Var b, int stride, int pad, int Tout);

// waveform [N] -> magnitude STFT [T x (nfft/2+1)], centered frames, zero pad
Var stft_mag(Tape& t, Var x, int nfft, int hop, int window);
// log(max(fb * mag^2, floor)); fb constant [M x bins]
Var mel_log_power(Tape& t, Var mag, const Tensor& fb, double floor = 1e-5);
// x [N] -> column j of the period-p reshape, zero padded: [ceil(N/p) x 1]
Var phase_column(Tape& t, Var x, int period, int phase);

struct AttentionParams {
  Param wq, wk, wv, wo;  // [M x M]
  Param bq, bk, bv, bo;  // [1 x M]
};

// q_in [Tq x M], kv_in [Tkv x M]; heads divides M. Returns [Tq x M].
Var multihead_attention(Tape& t, Var q_in, Var kv_in, AttentionParams& p, int heads);

struct LstmParams {
  Param w_fwd, u_fwd, b_fwd;  // [I x 4H], [H x 4H], [1 x 4H]
  Param w_bwd, u_bwd, b_bwd;
};

// x [T x I] -> [T x 2H]
Var bilstm(Tape& t, Var x, LstmParams& p, int hidden);

struct AdamW {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void step(const std::vector<std::pair<Param*, const Tensor*>>& grads);
};

// deterministic, name-keyed initializers
Tensor init_uniform(const std::string& name, std::vector<int> shape, double limit,
                    uint64_t seed);
Tensor init_xavier(const std::string& name, std::vector<int> shape, uint64_t seed);
Tensor init_zeros(std::vector<int> shape);
Tensor init_const(std::vector<int> shape, double v);

}  // namespace a2a::net
