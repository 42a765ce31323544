#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "a2a/tensor.hpp"

namespace a2a {

struct Codebook {
  Tensor centroids;  // K x F
  uint64_t training_seed = 0;

  int k() const { return centroids.rows(); }
  int feature_dim() const { return centroids.cols(); }
};

struct RleTokenSequence {
  std::vector<int> tokens;     // no two adjacent equal
  std::vector<int> durations;  // frames per token, all >= 1
};

// Seeded random subset of ceil(fraction * count) indices, sorted ascending.
std::vector<int> pick_training_subset(int count, double fraction, uint64_t seed);

// Lloyd k-means from k-means++ initialization over the pooled frames of all
// feature matrices. Stops when no centroid moves by 1e-4 or after 100
// iterations; empty clusters are re-seeded from the farthest frame. Requires
// at least 10*k pooled frames.
Codebook train_codebook(const std::vector<Tensor>& features, int k, uint64_t seed);

// Nearest-centroid assignment per frame (Euclidean), 1-indexed tokens in
// [1, k], ties broken toward the lowest index.
std::vector<int> tokenize(const Tensor& frames, const Codebook& cb);

RleTokenSequence dedup(const std::vector<int>& tokens);
std::vector<int> dup(const RleTokenSequence& rle);

// Codebook file: magic "A2AC", version u32, K u32, F u32, then little-endian
// float32 centroids row-major. The training seed is not stored.
void write_codebook(const Codebook& cb, const std::string& path);
Codebook read_codebook(const std::string& path);

}  // namespace a2a
