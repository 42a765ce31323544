#include "a2a/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "a2a/common.hpp"

namespace a2a {

namespace {

double dist2(const double* a, const double* b, int f) {
  double d = 0;
  for (int i = 0; i < f; i++) {
    double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

int nearest(const double* x, const Tensor& centroids) {
  int best = 0;
  double best_d = dist2(x, &centroids.v[0], centroids.cols());
  for (int c = 1; c < centroids.rows(); c++) {
    double d = dist2(x, &centroids.v[size_t(c) * centroids.cols()], centroids.cols());
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

std::vector<int> pick_training_subset(int count, double fraction, uint64_t seed) {
  if (count <= 0) fail("parameter error: subset of an empty range");
  if (fraction <= 0.0 || fraction > 1.0)
    fail("parameter error: subset fraction must be in (0, 1], got " + fmt_double(fraction));
  int want = std::min(count, int(std::ceil(fraction * count)));
  std::vector<int> idx(static_cast<size_t>(count));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(mix_seed(seed, 0x737562u));
  for (int i = 0; i < want; i++) {
    int j = i + int(rng.below(uint64_t(count - i)));
    std::swap(idx[size_t(i)], idx[size_t(j)]);
  }
  idx.resize(size_t(want));
  std::sort(idx.begin(), idx.end());
  return idx;
}

Codebook train_codebook(const std::vector<Tensor>& features, int k, uint64_t seed) {
  if (k < 2) fail("parameter error: codebook size must be at least 2, got " + std::to_string(k));
  if (features.empty()) fail("training error: no feature matrices given");
  int f = features[0].cols();
  int64_t n = 0;
  for (const Tensor& m : features) {
    if (m.rank() != 2 || m.cols() != f)
      fail("shape error: feature matrices disagree on dimension");
    n += m.rows();
  }
  if (n < int64_t(10) * k)
    fail("training error: k-means with k=" + std::to_string(k) + " needs at least " +
         std::to_string(10 * k) + " pooled frames, got " + std::to_string(n));

  Tensor pool({int(n), f});
  {
    double* dst = pool.data();
    for (const Tensor& m : features) {
      std::memcpy(dst, m.data(), sizeof(double) * m.v.size());
      dst += m.v.size();
    }
  }
  const auto frame = [&](int i) { return &pool.v[size_t(i) * f]; };

  Rng rng(mix_seed(seed, 0x6b6d6570u));
  Tensor centroids({k, f});
  auto set_centroid = [&](int c, const double* src) {
    std::memcpy(&centroids.v[size_t(c) * f], src, sizeof(double) * size_t(f));
  };

  // k-means++ seeding: next center drawn with probability proportional to the
  // squared distance to the nearest already-chosen one
  std::vector<double> d2(static_cast<size_t>(n));
  set_centroid(0, frame(int(rng.below(uint64_t(n)))));
  for (int i = 0; i < n; i++) d2[size_t(i)] = dist2(frame(i), &centroids.v[0], f);
  for (int c = 1; c < k; c++) {
    double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    int pick;
    if (total > 0) {
      double r = rng.uniform() * total, run = 0;
      pick = int(n) - 1;
      for (int i = 0; i < n; i++) {
        run += d2[size_t(i)];
        if (run >= r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = int(rng.below(uint64_t(n)));
    }
    set_centroid(c, frame(pick));
    for (int i = 0; i < n; i++)
      d2[size_t(i)] = std::min(d2[size_t(i)], dist2(frame(i), &centroids.v[size_t(c) * f], f));
  }

  std::vector<int> assign(static_cast<size_t>(n));
  std::vector<double> best_d(static_cast<size_t>(n));
  double prev_sse = -1;
  for (int iter = 0; iter < 100; iter++) {
    double sse = 0;
    for (int i = 0; i < n; i++) {
      int c = nearest(frame(i), centroids);
      assign[size_t(i)] = c;
      best_d[size_t(i)] = dist2(frame(i), &centroids.v[size_t(c) * f], f);
      sse += best_d[size_t(i)];
    }
    if (prev_sse >= 0 && sse > prev_sse + 1e-9 * std::max(1.0, prev_sse))
      fail("internal error: k-means objective increased");
    prev_sse = sse;

    Tensor sums({k, f});
    std::vector<int64_t> counts(size_t(k), 0);
    for (int i = 0; i < n; i++) {
      int c = assign[size_t(i)];
      counts[size_t(c)]++;
      const double* x = frame(i);
      double* s = &sums.v[size_t(c) * f];
      for (int j = 0; j < f; j++) s[j] += x[j];
    }

    std::vector<char> reseeded(size_t(n), 0);
    double shift = 0;
    for (int c = 0; c < k; c++) {
      double moved = 0;
      if (counts[size_t(c)] == 0) {
        int far_i = 0;
        double far_d = -1;
        for (int i = 0; i < n; i++)
          if (!reseeded[size_t(i)] && best_d[size_t(i)] > far_d) {
            far_d = best_d[size_t(i)];
            far_i = i;
          }
        reseeded[size_t(far_i)] = 1;
        moved = dist2(frame(far_i), &centroids.v[size_t(c) * f], f);
        set_centroid(c, frame(far_i));
      } else {
        for (int j = 0; j < f; j++) {
          double nc = sums.at(c, j) / double(counts[size_t(c)]);
          double t = nc - centroids.at(c, j);
          moved += t * t;
          centroids.at(c, j) = nc;
        }
      }
      shift = std::max(shift, std::sqrt(moved));
    }
    if (shift < 1e-4) break;
  }

  return Codebook{std::move(centroids), seed};
}

std::vector<int> tokenize(const Tensor& frames, const Codebook& cb) {
  if (frames.rank() != 2 || frames.cols() != cb.feature_dim())
    fail("shape error: feature dim " + std::to_string(frames.cols()) +
         " does not match codebook dim " + std::to_string(cb.feature_dim()));
  std::vector<int> out(size_t(frames.rows()));
  for (int t = 0; t < frames.rows(); t++)
    out[size_t(t)] = nearest(&frames.v[size_t(t) * frames.cols()], cb.centroids) + 1;
  return out;
}

RleTokenSequence dedup(const std::vector<int>& tokens) {
  if (tokens.empty()) fail("empty-sequence error: cannot de-duplicate an empty token sequence");
  RleTokenSequence rle;
  rle.tokens.push_back(tokens[0]);
  rle.durations.push_back(1);
  for (size_t i = 1; i < tokens.size(); i++) {
    if (tokens[i] == rle.tokens.back()) {
      rle.durations.back()++;
    } else {
      rle.tokens.push_back(tokens[i]);
      rle.durations.push_back(1);
    }
  }
  return rle;
}

std::vector<int> dup(const RleTokenSequence& rle) {
  if (rle.tokens.size() != rle.durations.size())
    fail("shape error: token/duration length mismatch");
  std::vector<int> out;
  for (size_t i = 0; i < rle.tokens.size(); i++) {
    if (rle.durations[i] < 1)
      fail("invalid-duration error: duration must be positive, got " +
           std::to_string(rle.durations[i]) + " at position " + std::to_string(i));
    out.insert(out.end(), size_t(rle.durations[i]), rle.tokens[i]);
  }
  return out;
}

void write_codebook(const Codebook& cb, const std::string& path) {
  if (cb.k() < 2) fail("parameter error: refusing to write a codebook with fewer than 2 rows");
  std::string out = "A2AC";
  auto put_u32 = [&](uint32_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 24) & 0xff));
  };
  put_u32(1);
  put_u32(uint32_t(cb.k()));
  put_u32(uint32_t(cb.feature_dim()));
  for (double d : cb.centroids.v) {
    float f = float(d);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(bits);
  }
  write_text_file(path, out);
}

Codebook read_codebook(const std::string& path) {
  std::string raw = read_text_file(path);
  if (raw.size() < 16 || raw.compare(0, 4, "A2AC") != 0)
    fail("format error: bad codebook magic: " + path);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(raw.data());
  auto get_u32 = [&](size_t off) {
    return uint32_t(p[off]) | uint32_t(p[off + 1]) << 8 | uint32_t(p[off + 2]) << 16 |
           uint32_t(p[off + 3]) << 24;
  };
  uint32_t version = get_u32(4);
  if (version != 1) fail("format error: unsupported codebook version " + std::to_string(version));
  uint32_t k = get_u32(8), f = get_u32(12);
  if (k < 2) fail("format error: codebook must have at least 2 centroids: " + path);
  if (raw.size() != 16 + size_t(k) * f * 4)
    fail("format error: codebook size mismatch: " + path);
  Codebook cb;
  cb.centroids = Tensor({int(k), int(f)});
  for (size_t i = 0; i < size_t(k) * f; i++) {
    uint32_t bits = get_u32(16 + i * 4);
    float fl;
    std::memcpy(&fl, &bits, 4);
    cb.centroids.v[i] = double(fl);
  }
  if (!cb.centroids.finite()) fail("format error: codebook contains non-finite values: " + path);
  return cb;
}

}  // namespace a2a
