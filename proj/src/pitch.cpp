#include "a2a/pitch.hpp"

#include <algorithm>
#include <cmath>

#include "a2a/common.hpp"

namespace a2a {

PitchConfig pitch_config_from(const RunConfig& cfg) {
  PitchConfig p;
  p.fmin = cfg.pitch_fmin;
  p.fmax = cfg.pitch_fmax;
  return p;
}

namespace {

struct Candidate {
  double f0;
  double strength;  // normalized correlation at the picked lag
};

inline double at_or_zero(const std::vector<double>& x, int64_t i) {
  return (i >= 0 && i < int64_t(x.size())) ? x[size_t(i)] : 0.0;
}

}  // namespace

PitchContour track_pitch(const AudioClip& clip, const FrameConfig& cfg,
                         const PitchConfig& pcfg) {
  int T = frame_count(int64_t(clip.samples.size()), cfg);
  int W = cfg.window;
  int min_lag = std::max(2, int(std::floor(cfg.sample_rate / pcfg.fmax)));
  int max_lag = int(std::ceil(cfg.sample_rate / pcfg.fmin));

  PitchContour out;
  out.f0.assign(T, 0.0);
  out.voiced.assign(T, false);

  std::vector<std::vector<Candidate>> cands(T);
  std::vector<double> seg(W + max_lag + 1);
  std::vector<double> ncc(max_lag + 2, 0.0);

  for (int t = 0; t < T; t++) {
    int64_t start = int64_t(t) * cfg.hop + cfg.hop / 2 - W / 2;
    for (int i = 0; i < W + max_lag + 1; i++) seg[i] = at_or_zero(clip.samples, start + i);

    double e0 = 0;
    for (int i = 0; i < W; i++) e0 += seg[i] * seg[i];
    double rms = std::sqrt(e0 / W);
    if (rms < pcfg.energy_gate) continue;

    // running energy of the lagged window
    double el = 0;
    for (int i = min_lag - 1; i < min_lag - 1 + W; i++) el += seg[i] * seg[i];
    for (int lag = min_lag; lag <= max_lag; lag++) {
      el += seg[lag + W - 1] * seg[lag + W - 1];
      el -= seg[lag - 1] * seg[lag - 1];
      double c = 0;
      for (int i = 0; i < W; i++) c += seg[i] * seg[i + lag];
      ncc[lag] = c / std::sqrt(e0 * el + 1e-12);
    }

    // local maxima, best first, shorter lags slightly preferred
    std::vector<std::pair<double, int>> peaks;
    for (int lag = min_lag + 1; lag < max_lag; lag++) {
      if (ncc[lag] > ncc[lag - 1] && ncc[lag] >= ncc[lag + 1] && ncc[lag] > 0.3) {
        double merit = ncc[lag] - 0.01 * std::log2(double(lag) / min_lag);
        peaks.push_back({merit, lag});
      }
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    if (int(peaks.size()) > pcfg.max_candidates) peaks.resize(pcfg.max_candidates);
    for (auto& [merit, lag] : peaks) {
      // parabolic refinement around the peak
      double y0 = ncc[lag - 1], y1 = ncc[lag], y2 = ncc[lag + 1];
      double denom = y0 - 2 * y1 + y2;
      double shift = std::abs(denom) > 1e-12 ? 0.5 * (y0 - y2) / denom : 0.0;
      shift = std::clamp(shift, -0.5, 0.5);
      double f0 = cfg.sample_rate / (lag + shift);
      f0 = std::clamp(f0, pcfg.fmin, pcfg.fmax);
      cands[t].push_back({f0, ncc[lag]});
    }
  }

  // Viterbi over (candidates + unvoiced) per frame
  const double kBig = 1e18;
  std::vector<std::vector<double>> cost(T);
  std::vector<std::vector<int>> back(T);
  auto n_states = [&](int t) { return int(cands[t].size()) + 1; };  // last = unvoiced
  auto emission = [&](int t, int j) {
    if (j == int(cands[t].size())) return 1.0 - pcfg.voicing_strength;
    return 1.0 - cands[t][j].strength;
  };
  for (int t = 0; t < T; t++) {
    cost[t].assign(n_states(t), kBig);
    back[t].assign(n_states(t), -1);
    for (int j = 0; j < n_states(t); j++) {
      double em = emission(t, j);
      if (t == 0) {
        cost[t][j] = em;
        continue;
      }
      for (int i = 0; i < n_states(t - 1); i++) {
        bool pv = i < int(cands[t - 1].size());
        bool cv = j < int(cands[t].size());
        double trans;
        if (pv && cv)
          trans = pcfg.transition_weight *
                  std::abs(std::log2(cands[t][j].f0 / cands[t - 1][i].f0));
        else if (pv != cv)
          trans = pcfg.switch_cost;
        else
          trans = 0.0;
        double c = cost[t - 1][i] + trans + em;
        if (c < cost[t][j]) {
          cost[t][j] = c;
          back[t][j] = i;
        }
      }
    }
  }
  if (T > 0) {
    int j = 0;
    for (int k = 1; k < n_states(T - 1); k++)
      if (cost[T - 1][k] < cost[T - 1][j]) j = k;
    for (int t = T - 1; t >= 0; t--) {
      if (j < int(cands[t].size())) {
        out.f0[t] = cands[t][j].f0;
        out.voiced[t] = true;
      }
      j = back[t][j];
    }
  }
  return out;
}

}  // namespace a2a
