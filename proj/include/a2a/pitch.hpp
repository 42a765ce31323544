#pragma once

#include <vector>

#include "a2a/audio.hpp"
#include "a2a/dsp.hpp"

namespace a2a {

struct PitchContour {
  std::vector<double> f0;        // Hz, 0 at unvoiced frames
  std::vector<bool> voiced;

  int frames() const { return int(f0.size()); }
};

struct PitchConfig {
  double fmin = 50.0;
  double fmax = 600.0;
  double voicing_strength = 0.55;  // min normalized correlation to call voiced
  double energy_gate = 1e-3;       // rms below this is unvoiced outright
  int max_candidates = 5;
  double transition_weight = 2.0;  // per-octave jump cost
  double switch_cost = 0.3;        // voiced <-> unvoiced
};

PitchConfig pitch_config_from(const RunConfig& cfg);

// Normalized-autocorrelation candidates per frame, smoothed by a Viterbi pass
// over candidate tracks plus an unvoiced state. Degenerate input gives an
// all-unvoiced contour, never an error.
PitchContour track_pitch(const AudioClip& clip, const FrameConfig& cfg,
                         const PitchConfig& pcfg = {});

}  // namespace a2a
