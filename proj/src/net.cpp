#include "a2a/net.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "a2a/common.hpp"
#include "a2a/dsp.hpp"
#include "a2a/fft.hpp"

namespace a2a::net {

Tensor& Node::g() {
  if (grad.v.empty()) grad = Tensor(val.shape);
  return grad;
}

Var Tape::input(Tensor t, bool needs_grad) {
  auto node = std::make_unique<Node>();
  node->val = std::move(t);
  node->needs_grad = needs_grad;
  nodes_.push_back(std::move(node));
  return {nodes_.back().get()};
}

Var Tape::param(Param& p) {
  auto it = param_cache_.find(&p);
  if (it != param_cache_.end()) return {it->second};
  auto node = std::make_unique<Node>();
  node->val = p.value;
  node->needs_grad = train_;
  node->param = &p;
  param_cache_[&p] = node.get();
  nodes_.push_back(std::move(node));
  return {nodes_.back().get()};
}

Var Tape::make(Tensor val, std::vector<Node*> parents, std::function<void(Node*)> back) {
  auto node = std::make_unique<Node>();
  node->val = std::move(val);
  for (Node* p : parents)
    if (p && p->needs_grad) node->needs_grad = true;
  if (node->needs_grad) node->back = std::move(back);
  nodes_.push_back(std::move(node));
  return {nodes_.back().get()};
}

void Tape::backward(Var loss) {
  if (loss.n->val.numel() != 1) fail("shape error: backward needs a scalar loss");
  loss.n->g().v[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node* n = it->get();
    if (n->needs_grad && n->back && !n->grad.v.empty()) n->back(n);
  }
}

std::vector<std::pair<Param*, const Tensor*>> Tape::param_grads() const {
  std::vector<std::pair<Param*, const Tensor*>> out;
  for (const auto& [p, node] : param_cache_)
    if (!node->grad.v.empty()) out.push_back({p, &node->grad});
  return out;
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) fail(std::string("shape error: ") + op + " operands differ");
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  check_same_shape(a.val(), b.val(), "add");
  Tensor out = a.val();
  for (size_t i = 0; i < out.v.size(); i++) out.v[i] += b.val().v[i];
  Node *an = a.n, *bn = b.n;
  return t.make(std::move(out), {an, bn}, [an, bn](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++) {
      if (an->needs_grad) an->g().v[i] += n->grad.v[i];
      if (bn->needs_grad) bn->g().v[i] += n->grad.v[i];
    }
  });
}

Var sub(Tape& t, Var a, Var b) {
  check_same_shape(a.val(), b.val(), "sub");
  Tensor out = a.val();
  for (size_t i = 0; i < out.v.size(); i++) out.v[i] -= b.val().v[i];
  Node *an = a.n, *bn = b.n;
  return t.make(std::move(out), {an, bn}, [an, bn](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++) {
      if (an->needs_grad) an->g().v[i] += n->grad.v[i];
      if (bn->needs_grad) bn->g().v[i] -= n->grad.v[i];
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  check_same_shape(a.val(), b.val(), "mul");
  Tensor out = a.val();
  for (size_t i = 0; i < out.v.size(); i++) out.v[i] *= b.val().v[i];
  Node *an = a.n, *bn = b.n;
  return t.make(std::move(out), {an, bn}, [an, bn](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++) {
      if (an->needs_grad) an->g().v[i] += n->grad.v[i] * bn->val.v[i];
      if (bn->needs_grad) bn->g().v[i] += n->grad.v[i] * an->val.v[i];
    }
  });
}

Var scale(Tape& t, Var a, double c) {
  Tensor out = a.val();
  for (double& x : out.v) x *= c;
  Node* an = a.n;
  return t.make(std::move(out), {an}, [an, c](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++) an->g().v[i] += c * n->grad.v[i];
  });
}

Var tanh_(Tape& t, Var a) {
  Tensor out = a.val();
  for (double& x : out.v) x = std::tanh(x);
  Node* an = a.n;
  return t.make(std::move(out), {an}, [an](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++)
      an->g().v[i] += n->grad.v[i] * (1.0 - n->val.v[i] * n->val.v[i]);
  });
}

Var sigmoid_(Tape& t, Var a) {
  Tensor out = a.val();
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  Node* an = a.n;
  return t.make(std::move(out), {an}, [an](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++)
      an->g().v[i] += n->grad.v[i] * n->val.v[i] * (1.0 - n->val.v[i]);
  });
}

Var softplus_(Tape& t, Var a) {
  Tensor out = a.val();
  for (double& x : out.v) x = x > 30.0 ? x : std::log1p(std::exp(x));
  Node* an = a.n;
  return t.make(std::move(out), {an}, [an](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++) {
      double s = 1.0 / (1.0 + std::exp(-an->val.v[i]));
      an->g().v[i] += n->grad.v[i] * s;
    }
  });
}

Var leaky_relu_(Tape& t, Var a, double slope) {
  Tensor out = a.val();
  for (double& x : out.v)
    if (x < 0) x *= slope;
  Node* an = a.n;
  return t.make(std::move(out), {an}, [an, slope](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++)
      an->g().v[i] += n->grad.v[i] * (an->val.v[i] < 0 ? slope : 1.0);
  });
}

Var snake_(Tape& t, Var x, Var alpha) {
  const Tensor& xv = x.val();
  const Tensor& av = alpha.val();
  if (xv.rank() != 2 || av.rank() != 2 || av.rows() != 1 || av.cols() != xv.cols())
    fail("shape error: snake wants x [T x C], alpha [1 x C]");
  for (double a : av.v)
    if (a <= 0) fail("parameter error: snake alpha must be positive");
  int T = xv.rows(), C = xv.cols();
  Tensor out = xv;
  for (int i = 0; i < T; i++)
    for (int c = 0; c < C; c++) {
      double a = av.v[c], v = xv.at(i, c);
      double s = std::sin(a * v);
      out.at(i, c) = v + s * s / a;
    }
  Node *xn = x.n, *an = alpha.n;
  return t.make(std::move(out), {xn, an}, [xn, an, T, C](Node* n) {
    for (int i = 0; i < T; i++)
      for (int c = 0; c < C; c++) {
        double a = an->val.v[c], v = xn->val.at(i, c);
        double gy = n->grad.at(i, c);
        if (xn->needs_grad) xn->g().at(i, c) += gy * (1.0 + std::sin(2.0 * a * v));
        if (an->needs_grad) {
          double s = std::sin(a * v);
          an->g().v[c] += gy * (v * a * std::sin(2.0 * a * v) - s * s) / (a * a);
        }
      }
  });
}

Var grl(Tape& t, Var x, double lambda) {
  if (lambda < 0) fail("parameter error: grl lambda must be nonnegative");
  Tensor out = x.val();
  Node* xn = x.n;
  Var y = t.make(std::move(out), {xn}, [xn, lambda](Node* n) {
    if (!xn->needs_grad) return;
    for (size_t i = 0; i < n->grad.v.size(); i++)
      xn->g().v[i] += -lambda * n->grad.v[i];
  });
  // the head above stays trainable even when the trunk is frozen
  y.n->needs_grad = true;
  return y;
}

Var reshape(Tape& t, Var a, std::vector<int> shape) {
  Tensor out(shape);
  if (out.numel() != a.val().numel()) fail("shape error: reshape element count mismatch");
  out.v = a.val().v;
  Node* an = a.n;
  return t.make(std::move(out), {an}, [an](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++) an->g().v[i] += n->grad.v[i];
  });
}

Var slice_rows(Tape& t, Var a, int r0, int len) {
  const Tensor& av = a.val();
  if (av.rank() != 2 || r0 < 0 || r0 + len > av.rows()) fail("shape error: slice_rows range");
  int C = av.cols();
  Tensor out({len, C});
  std::copy(av.v.begin() + size_t(r0) * C, av.v.begin() + size_t(r0 + len) * C, out.v.begin());
  Node* an = a.n;
  return t.make(std::move(out), {an}, [an, r0, C](Node* n) {
    for (size_t i = 0; i < n->grad.v.size(); i++)
      an->g().v[size_t(r0) * C + i] += n->grad.v[i];
  });
}

Var row(Tape& t, Var a, int i) { return slice_rows(t, a, i, 1); }

Var slice_cols(Tape& t, Var a, int c0, int len) {
  const Tensor& av = a.val();
  if (av.rank() != 2 || c0 < 0 || c0 + len > av.cols()) fail("shape error: slice_cols range");
  int T = av.rows();
  Tensor out({T, len});
  for (int i = 0; i < T; i++)
    for (int j = 0; j < len; j++) out.at(i, j) = av.at(i, c0 + j);
  Node* an = a.n;
  return t.make(std::move(out), {an}, [an, c0, T, len](Node* n) {
    for (int i = 0; i < T; i++)
      for (int j = 0; j < len; j++) an->g().at(i, c0 + j) += n->grad.at(i, j);
  });
}

Var concat_cols(Tape& t, const std::vector<Var>& xs) {
  if (xs.empty()) fail("shape error: concat_cols of nothing");
  int T = xs[0].val().rows(), C = 0;
  for (const Var& x : xs) {
    if (x.val().rank() != 2 || x.val().rows() != T) fail("shape error: concat_cols row mismatch");
    C += x.val().cols();
  }
  Tensor out({T, C});
  int off = 0;
  for (const Var& x : xs) {
    int c = x.val().cols();
    for (int i = 0; i < T; i++)
      for (int j = 0; j < c; j++) out.at(i, off + j) = x.val().at(i, j);
    off += c;
  }
  std::vector<Node*> parents;
  for (const Var& x : xs) parents.push_back(x.n);
  return t.make(std::move(out), parents, [parents, T](Node* n) {
    int off = 0;
    for (Node* p : parents) {
      int c = p->val.cols();
      if (p->needs_grad)
        for (int i = 0; i < T; i++)
          for (int j = 0; j < c; j++) p->g().at(i, j) += n->grad.at(i, off + j);
      off += c;
    }
  });
}

Var stack_rows(Tape& t, const std::vector<Var>& rows) {
  if (rows.empty()) fail("shape error: stack_rows of nothing");
  int C = rows[0].val().cols();
  Tensor out({int(rows.size()), C});
  for (size_t i = 0; i < rows.size(); i++) {
    if (rows[i].val().rows() != 1 || rows[i].val().cols() != C)
      fail("shape error: stack_rows wants [1 x D] rows");
    for (int j = 0; j < C; j++) out.at(int(i), j) = rows[i].val().at(0, j);
  }
  std::vector<Node*> parents;
  for (const Var& r : rows) parents.push_back(r.n);
  return t.make(std::move(out), parents, [parents, C](Node* n) {
    for (size_t i = 0; i < parents.size(); i++)
      if (parents[i]->needs_grad)
        for (int j = 0; j < C; j++) parents[i]->g().at(0, j) += n->grad.at(int(i), j);
  });
}

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
    fail("shape error: matmul " + std::to_string(av.cols()) + " vs " + std::to_string(bv.rows()));
  int M = av.rows(), K = av.cols(), N = bv.cols();
  Tensor out({M, N});
  kernels::gemm_nn(M, K, N, av.v.data(), bv.v.data(), out.v.data());
  Node *an = a.n, *bn = b.n;
  return t.make(std::move(out), {an, bn}, [an, bn, M, K, N](Node* n) {
    if (an->needs_grad)
      kernels::gemm_nt(M, N, K, n->grad.v.data(), bn->val.v.data(), an->g().v.data());
    if (bn->needs_grad)
      kernels::gemm_tn(K, M, N, an->val.v.data(), n->grad.v.data(), bn->g().v.data());
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.cols())
    fail("shape error: matmul_nt inner dims");
  int M = av.rows(), K = av.cols(), N = bv.rows();
  Tensor out({M, N});
  kernels::gemm_nt(M, K, N, av.v.data(), bv.v.data(), out.v.data());
  Node *an = a.n, *bn = b.n;
  return t.make(std::move(out), {an, bn}, [an, bn, M, K, N](Node* n) {
    // gA += gY * B ; gB += gY^T * A
    if (an->needs_grad)
      kernels::gemm_nn(M, N, K, n->grad.v.data(), bn->val.v.data(), an->g().v.data());
    if (bn->needs_grad)
      kernels::gemm_tn(N, M, K, n->grad.v.data(), an->val.v.data(), bn->g().v.data());
  });
}

Var row_broadcast_add(Tape& t, Var x, Var v) {
  const Tensor& xv = x.val();
  const Tensor& vv = v.val();
  if (xv.rank() != 2 || vv.rank() != 2 || vv.rows() != 1 || vv.cols() != xv.cols())
    fail("shape error: row_broadcast_add wants x [T x D], v [1 x D]");
  int T = xv.rows(), D = xv.cols();
  Tensor out = xv;
  for (int i = 0; i < T; i++)
    for (int j = 0; j < D; j++) out.at(i, j) += vv.at(0, j);
  Node *xn = x.n, *vn = v.n;
  return t.make(std::move(out), {xn, vn}, [xn, vn, T, D](Node* n) {
    for (int i = 0; i < T; i++)
      for (int j = 0; j < D; j++) {
        if (xn->needs_grad) xn->g().at(i, j) += n->grad.at(i, j);
        if (vn->needs_grad) vn->g().at(0, j) += n->grad.at(i, j);
      }
  });
}

Var linear(Tape& t, Var x, Var w, Var b) {
  Var y = matmul(t, x, w);
  if (b.n) y = row_broadcast_add(t, y, b);
  return y;
}

Var mean_rows(Tape& t, Var x) {
  const Tensor& xv = x.val();
  if (xv.rank() != 2 || xv.rows() < 1) fail("shape error: mean_rows wants nonempty [T x D]");
  int T = xv.rows(), D = xv.cols();
  Tensor out({1, D});
  for (int i = 0; i < T; i++)
    for (int j = 0; j < D; j++) out.at(0, j) += xv.at(i, j);
  for (int j = 0; j < D; j++) out.at(0, j) /= T;
  Node* xn = x.n;
  return t.make(std::move(out), {xn}, [xn, T, D](Node* n) {
    for (int i = 0; i < T; i++)
      for (int j = 0; j < D; j++) xn->g().at(i, j) += n->grad.at(0, j) / T;
  });
}

Var mean_std_pool(Tape& t, Var x) {
  const Tensor& xv = x.val();
  if (xv.rank() != 2 || xv.rows() < 1) fail("shape error: mean_std_pool wants nonempty [T x D]");
  int T = xv.rows(), D = xv.cols();
  const double eps = 1e-8;
  Tensor out({1, 2 * D});
  for (int j = 0; j < D; j++) {
    double mean = 0;
    for (int i = 0; i < T; i++) mean += xv.at(i, j);
    mean /= T;
    double var = 0;
    for (int i = 0; i < T; i++) {
      double d = xv.at(i, j) - mean;
      var += d * d;
    }
    out.at(0, j) = mean;
    out.at(0, D + j) = std::sqrt(var / T + eps);
  }
  Node* xn = x.n;
  return t.make(std::move(out), {xn}, [xn, T, D](Node* n) {
    for (int j = 0; j < D; j++) {
      double mean = n->val.at(0, j), sd = n->val.at(0, D + j);
      double gm = n->grad.at(0, j), gs = n->grad.at(0, D + j);
      for (int i = 0; i < T; i++)
        xn->g().at(i, j) += gm / T + gs * (xn->val.at(i, j) - mean) / (T * sd);
    }
  });
}

Var sum_all(Tape& t, Var x) {
  double s = 0;
  for (double v : x.val().v) s += v;
  Node* xn = x.n;
  return t.make(Tensor({1}, {s}), {xn}, [xn](Node* n) {
    for (double& g : xn->g().v) g += n->grad.v[0];
  });
}

Var mean_all(Tape& t, Var x) {
  return scale(t, sum_all(t, x), 1.0 / double(x.val().numel()));
}

Var l1_loss(Tape& t, Var a, Var b) {
  check_same_shape(a.val(), b.val(), "l1_loss");
  double s = 0;
  size_t n_elem = a.val().v.size();
  for (size_t i = 0; i < n_elem; i++) s += std::abs(a.val().v[i] - b.val().v[i]);
  s /= double(n_elem);
  Node *an = a.n, *bn = b.n;
  return t.make(Tensor({1}, {s}), {an, bn}, [an, bn, n_elem](Node* n) {
    double g = n->grad.v[0] / double(n_elem);
    for (size_t i = 0; i < n_elem; i++) {
      double d = an->val.v[i] - bn->val.v[i];
      double sg = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
      if (an->needs_grad) an->g().v[i] += g * sg;
      if (bn->needs_grad) bn->g().v[i] -= g * sg;
    }
  });
}

Var mse_loss(Tape& t, Var a, Var b) {
  check_same_shape(a.val(), b.val(), "mse_loss");
  double s = 0;
  size_t n_elem = a.val().v.size();
  for (size_t i = 0; i < n_elem; i++) {
    double d = a.val().v[i] - b.val().v[i];
    s += d * d;
  }
  s /= double(n_elem);
  Node *an = a.n, *bn = b.n;
  return t.make(Tensor({1}, {s}), {an, bn}, [an, bn, n_elem](Node* n) {
    double g = 2.0 * n->grad.v[0] / double(n_elem);
    for (size_t i = 0; i < n_elem; i++) {
      double d = an->val.v[i] - bn->val.v[i];
      if (an->needs_grad) an->g().v[i] += g * d;
      if (bn->needs_grad) bn->g().v[i] -= g * d;
    }
  });
}

Var softmax_rows(Tape& t, Var x) {
  const Tensor& xv = x.val();
  if (xv.rank() != 2) fail("shape error: softmax_rows wants [T x C]");
  int T = xv.rows(), C = xv.cols();
  Tensor out = xv;
  for (int i = 0; i < T; i++) {
    double mx = out.at(i, 0);
    for (int j = 1; j < C; j++) mx = std::max(mx, out.at(i, j));
    double z = 0;
    for (int j = 0; j < C; j++) z += (out.at(i, j) = std::exp(out.at(i, j) - mx));
    for (int j = 0; j < C; j++) out.at(i, j) /= z;
  }
  Node* xn = x.n;
  return t.make(std::move(out), {xn}, [xn, T, C](Node* n) {
    for (int i = 0; i < T; i++) {
      double dot = 0;
      for (int j = 0; j < C; j++) dot += n->grad.at(i, j) * n->val.at(i, j);
      for (int j = 0; j < C; j++)
        xn->g().at(i, j) += n->val.at(i, j) * (n->grad.at(i, j) - dot);
    }
  });
}

Var cross_entropy(Tape& t, Var logits, const std::vector<int>& labels) {
  const Tensor& lv = logits.val();
  if (lv.rank() != 2 || lv.rows() != int(labels.size()))
    fail("shape error: cross_entropy rows vs labels");
  int B = lv.rows(), C = lv.cols();
  for (int y : labels)
    if (y < 0 || y >= C) fail("label error: class " + std::to_string(y) + " out of range");
  // keep probabilities for the backward pass
  auto probs = std::make_shared<Tensor>(lv);
  double loss = 0;
  for (int i = 0; i < B; i++) {
    double mx = probs->at(i, 0);
    for (int j = 1; j < C; j++) mx = std::max(mx, probs->at(i, j));
    double z = 0;
    for (int j = 0; j < C; j++) z += (probs->at(i, j) = std::exp(probs->at(i, j) - mx));
    for (int j = 0; j < C; j++) probs->at(i, j) /= z;
    loss -= std::log(std::max(probs->at(i, labels[i]), 1e-300));
  }
  loss /= B;
  Node* ln = logits.n;
  auto labs = std::make_shared<std::vector<int>>(labels);
  return t.make(Tensor({1}, {loss}), {ln}, [ln, probs, labs, B, C](Node* n) {
    double g = n->grad.v[0] / B;
    for (int i = 0; i < B; i++)
      for (int j = 0; j < C; j++)
        ln->g().at(i, j) += g * (probs->at(i, j) - (j == (*labs)[i] ? 1.0 : 0.0));
  });
}

Var embedding(Tape& t, Var table, const std::vector<int>& ids) {
  const Tensor& tv = table.val();
  if (tv.rank() != 2) fail("shape error: embedding table must be [V x D]");
  int V = tv.rows(), D = tv.cols();
  for (int id : ids)
    if (id < 0 || id >= V) fail("label error: token id " + std::to_string(id) + " out of range");
  Tensor out({int(ids.size()), D});
  for (size_t i = 0; i < ids.size(); i++)
    for (int j = 0; j < D; j++) out.at(int(i), j) = tv.at(ids[i], j);
  Node* tn = table.n;
  auto idv = std::make_shared<std::vector<int>>(ids);
  return t.make(std::move(out), {tn}, [tn, idv, D](Node* n) {
    for (size_t i = 0; i < idv->size(); i++)
      for (int j = 0; j < D; j++) tn->g().at((*idv)[i], j) += n->grad.at(int(i), j);
  });
}

Var conv1d(Tape& t, Var x, Var w, Var b, int dil, kernels::Pad pad) {
  const Tensor& xv = x.val();
  const Tensor& wv = w.val();
  if (xv.rank() != 2 || wv.rank() != 3 || wv.shape[2] != xv.cols())
    fail("shape error: conv1d wants x [T x IC], w [OC x K x IC]");
  int T = xv.rows(), IC = xv.cols(), OC = wv.shape[0], K = wv.shape[1];
  const double* bias = nullptr;
  if (b.n) {
    if (b.val().numel() != OC) fail("shape error: conv1d bias size");
    bias = b.val().v.data();
  }
  Tensor out({T, OC});
  kernels::conv1d(T, IC, OC, K, dil, pad, xv.v.data(), wv.v.data(), bias, out.v.data());
  Node *xn = x.n, *wn = w.n, *bn = b.n;
  return t.make(std::move(out), {xn, wn, bn}, [=](Node* n) {
    if (xn->needs_grad)
      kernels::conv1d_grad_input(T, IC, OC, K, dil, pad, n->grad.v.data(), wn->val.v.data(),
                                 xn->g().v.data());
    if (wn->needs_grad)
      kernels::conv1d_grad_weight(T, IC, OC, K, dil, pad, xn->val.v.data(), n->grad.v.data(),
                                  wn->g().v.data(),
                                  bn && bn->needs_grad ? bn->g().v.data() : nullptr);
  });
}

Var conv_transpose1d(Tape& t, Var x, Var w, Var b, int stride, int pad, int Tout) {
  const Tensor& xv = x.val();
  const Tensor& wv = w.val();
  if (xv.rank() != 2 || wv.rank() != 3 || wv.shape[0] != xv.cols())
    fail("shape error: conv_transpose1d wants x [T x IC], w [IC x K x OC]");
  int T = xv.rows(), IC = xv.cols(), K = wv.shape[1], OC = wv.shape[2];
  const double* bias = nullptr;
  if (b.n) {
    if (b.val().numel() != OC) fail("shape error: conv_transpose1d bias size");
    bias = b.val().v.data();
  }
  Tensor out({Tout, OC});
  kernels::conv_transpose1d(T, IC, OC, K, stride, pad, Tout, xv.v.data(), wv.v.data(), bias,
                            out.v.data());
  Node *xn = x.n, *wn = w.n, *bn = b.n;
  return t.make(std::move(out), {xn, wn, bn}, [=](Node* n) {
    if (xn->needs_grad)
      kernels::conv_transpose1d_grad_input(T, IC, OC, K, stride, pad, Tout, n->grad.v.data(),
                                           wn->val.v.data(), xn->g().v.data());
    if (wn->needs_grad)
      kernels::conv_transpose1d_grad_weight(
          T, IC, OC, K, stride, pad, Tout, xn->val.v.data(), n->grad.v.data(),
          wn->g().v.data(), bn && bn->needs_grad ? bn->g().v.data() : nullptr);
  });
}

Var stft_mag(Tape& t, Var x, int nfft, int hop, int window) {
  const Tensor& xv = x.val();
  if (xv.rank() != 1) fail("shape error: stft_mag wants a [N] waveform");
  if (!fft::is_pow2(nfft) || window > nfft) fail("fft error: bad stft sizes");
  int64_t N = xv.numel();
  if (N < hop) fail("too-short error: waveform shorter than one hop");
  int T = int(N / hop);
  int bins = nfft / 2 + 1;
  auto win = hann_window(window);
  auto spectra = std::make_shared<std::vector<std::complex<double>>>(size_t(T) * bins);
  Tensor out({T, bins});
  std::vector<std::complex<double>> buf(nfft);
  for (int ti = 0; ti < T; ti++) {
    int64_t start = int64_t(ti) * hop + hop / 2 - window / 2;
    for (int i = 0; i < window; i++) {
      int64_t src = start + i;
      buf[i] = (src >= 0 && src < N) ? xv.v[size_t(src)] * win[i] : 0.0;
    }
    for (int i = window; i < nfft; i++) buf[i] = 0.0;
    fft::forward(buf.data(), nfft);
    for (int b = 0; b < bins; b++) {
      (*spectra)[size_t(ti) * bins + b] = buf[b];
      out.at(ti, b) = std::abs(buf[b]);
    }
  }
  Node* xn = x.n;
  auto winp = std::make_shared<std::vector<double>>(std::move(win));
  return t.make(std::move(out), {xn}, [xn, spectra, winp, nfft, hop, window, N, T, bins](Node* n) {
    std::vector<std::complex<double>> g(nfft);
    for (int ti = 0; ti < T; ti++) {
      for (int b = 0; b < nfft; b++) g[b] = 0.0;
      for (int b = 0; b < bins; b++) {
        std::complex<double> s = (*spectra)[size_t(ti) * bins + b];
        double mag = std::abs(s);
        if (mag > 1e-12) g[b] = n->grad.at(ti, b) * s / mag;
      }
      // dL/dx_n = sum_k Re(g_k e^{+i 2 pi k n / nfft}) = nfft * Re(ifft(g))
      fft::inverse(g.data(), nfft);
      int64_t start = int64_t(ti) * hop + hop / 2 - window / 2;
      for (int i = 0; i < window; i++) {
        int64_t src = start + i;
        if (src >= 0 && src < N)
          xn->g().v[size_t(src)] += nfft * g[i].real() * (*winp)[i];
      }
    }
  });
}

Var mel_log_power(Tape& t, Var mag, const Tensor& fb, double floor) {
  const Tensor& mv = mag.val();
  if (mv.rank() != 2 || fb.rank() != 2 || fb.cols() != mv.cols())
    fail("shape error: mel_log_power bins mismatch");
  int T = mv.rows(), bins = mv.cols(), M = fb.rows();
  auto power = std::make_shared<Tensor>(Tensor({T, M}));
  Tensor out({T, M});
  for (int i = 0; i < T; i++)
    for (int m = 0; m < M; m++) {
      double s = 0;
      for (int b = 0; b < bins; b++) s += fb.at(m, b) * mv.at(i, b) * mv.at(i, b);
      power->at(i, m) = s;
      out.at(i, m) = std::log(std::max(s, floor));
    }
  Node* mn = mag.n;
  auto fbp = std::make_shared<Tensor>(fb);
  return t.make(std::move(out), {mn}, [mn, power, fbp, floor, T, bins, M](Node* n) {
    for (int i = 0; i < T; i++)
      for (int m = 0; m < M; m++) {
        double p = power->at(i, m);
        if (p <= floor) continue;
        double gp = n->grad.at(i, m) / p;
        for (int b = 0; b < bins; b++)
          mn->g().at(i, b) += gp * fbp->at(m, b) * 2.0 * mn->val.at(i, b);
      }
  });
}

Var phase_column(Tape& t, Var x, int period, int phase) {
  const Tensor& xv = x.val();
  if (xv.rank() != 1) fail("shape error: phase_column wants a [N] waveform");
  int64_t N = xv.numel();
  int L = int((N + period - 1) / period);
  Tensor out({L, 1});
  for (int l = 0; l < L; l++) {
    int64_t src = int64_t(l) * period + phase;
    out.at(l, 0) = src < N ? xv.v[size_t(src)] : 0.0;
  }
  Node* xn = x.n;
  return t.make(std::move(out), {xn}, [xn, period, phase, N, L](Node* n) {
    for (int l = 0; l < L; l++) {
      int64_t src = int64_t(l) * period + phase;
      if (src < N) xn->g().v[size_t(src)] += n->grad.at(l, 0);
    }
  });
}

Var multihead_attention(Tape& t, Var q_in, Var kv_in, AttentionParams& p, int heads) {
  int M = q_in.val().cols();
  if (kv_in.val().cols() != M) fail("shape error: attention query/key width mismatch");
  if (M % heads) fail("shape error: model_dim not divisible by heads");
  int dh = M / heads;
  Var q = linear(t, q_in, t.param(p.wq), t.param(p.bq));
  Var k = linear(t, kv_in, t.param(p.wk), t.param(p.bk));
  Var v = linear(t, kv_in, t.param(p.wv), t.param(p.bv));
  std::vector<Var> outs;
  for (int h = 0; h < heads; h++) {
    Var qh = slice_cols(t, q, h * dh, dh);
    Var kh = slice_cols(t, k, h * dh, dh);
    Var vh = slice_cols(t, v, h * dh, dh);
    Var scores = scale(t, matmul_nt(t, qh, kh), 1.0 / std::sqrt(double(dh)));
    Var attn = softmax_rows(t, scores);
    outs.push_back(matmul(t, attn, vh));
  }
  return linear(t, concat_cols(t, outs), t.param(p.wo), t.param(p.bo));
}

namespace {

Var lstm_direction(Tape& t, Var x, Param& w, Param& u, Param& b, int hidden, bool reverse,
                   std::vector<Var>& out_rows) {
  int T = x.val().rows();
  int H = hidden;
  Var wp = t.param(w), up = t.param(u), bp = t.param(b);
  Var h = t.input(Tensor({1, H}));
  Var c = t.input(Tensor({1, H}));
  out_rows.assign(T, Var{});
  for (int step = 0; step < T; step++) {
    int i = reverse ? T - 1 - step : step;
    Var xt = row(t, x, i);
    Var z = add(t, matmul(t, xt, wp), matmul(t, h, up));
    z = row_broadcast_add(t, z, bp);
    Var ig = sigmoid_(t, slice_cols(t, z, 0, H));
    Var fg = sigmoid_(t, slice_cols(t, z, H, H));
    Var gg = tanh_(t, slice_cols(t, z, 2 * H, H));
    Var og = sigmoid_(t, slice_cols(t, z, 3 * H, H));
    c = add(t, mul(t, fg, c), mul(t, ig, gg));
    h = mul(t, og, tanh_(t, c));
    out_rows[i] = h;
  }
  return h;
}

}  // namespace

Var bilstm(Tape& t, Var x, LstmParams& p, int hidden) {
  std::vector<Var> fwd, bwd;
  lstm_direction(t, x, p.w_fwd, p.u_fwd, p.b_fwd, hidden, false, fwd);
  lstm_direction(t, x, p.w_bwd, p.u_bwd, p.b_bwd, hidden, true, bwd);
  std::vector<Var> rows;
  rows.reserve(fwd.size());
  for (size_t i = 0; i < fwd.size(); i++)
    rows.push_back(concat_cols(t, {fwd[i], bwd[i]}));
  return stack_rows(t, rows);
}

void AdamW::step(const std::vector<std::pair<Param*, const Tensor*>>& grads) {
  for (auto& [p, g] : grads) {
    if (!p->value.same_shape(*g)) fail("shape error: gradient/parameter mismatch for " + p->name);
    if (p->m.v.empty()) {
      p->m = Tensor(p->value.shape);
      p->v = Tensor(p->value.shape);
    }
    p->steps++;
    double bc1 = 1.0 - std::pow(beta1, double(p->steps));
    double bc2 = 1.0 - std::pow(beta2, double(p->steps));
    for (size_t i = 0; i < p->value.v.size(); i++) {
      double gi = g->v[i];
      p->m.v[i] = beta1 * p->m.v[i] + (1.0 - beta1) * gi;
      p->v.v[i] = beta2 * p->v.v[i] + (1.0 - beta2) * gi * gi;
      double mhat = p->m.v[i] / bc1;
      double vhat = p->v.v[i] / bc2;
      p->value.v[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p->value.v[i]);
    }
  }
}

Tensor init_uniform(const std::string& name, std::vector<int> shape, double limit,
                    uint64_t seed) {
  Tensor t(shape);
  Rng rng(mix_seed(seed, fnv1a(name)));
  for (double& v : t.v) v = rng.uniform(-limit, limit);
  return t;
}

Tensor init_xavier(const std::string& name, std::vector<int> shape, uint64_t seed) {
  int64_t numel = 1;
  for (int d : shape) numel *= d;
  double fan_in = double(numel) / shape[0];
  double fan_out = double(numel) / shape[int(shape.size()) - 1];
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  return init_uniform(name, std::move(shape), limit, seed);
}

Tensor init_zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor init_const(std::vector<int> shape, double v) {
  Tensor t(std::move(shape));
  std::fill(t.v.begin(), t.v.end(), v);
  return t;
}

}  // namespace a2a::net
