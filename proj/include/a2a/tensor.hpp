#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "a2a/common.hpp"

namespace a2a {

// Dense row-major tensor of doubles. Rank 1 and 2 cover almost everything
// in this codebase; conv weights use rank 3.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(size_t(numel_of(shape)), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> data)
      : shape(std::move(s)), v(std::move(data)) {
    if (int64_t(v.size()) != numel_of(shape)) fail("shape error: tensor data/shape mismatch");
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  int64_t numel() const { return int64_t(v.size()); }
  int rank() const { return int(shape.size()); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double* data() { return v.data(); }
  const double* data() const { return v.data(); }

  double& at(int i) { return v[size_t(i)]; }
  double at(int i) const { return v[size_t(i)]; }
  double& at(int i, int j) { return v[size_t(i) * cols() + j]; }
  double at(int i, int j) const { return v[size_t(i) * cols() + j]; }

  void zero() { std::fill(v.begin(), v.end(), 0.0); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline Tensor row_vector(std::vector<double> d) {
  int n = int(d.size());
  return Tensor({1, n}, std::move(d));
}

}  // namespace a2a
