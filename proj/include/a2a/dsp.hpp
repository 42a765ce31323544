#pragma once

#include <string>
#include <vector>

#include "a2a/audio.hpp"
#include "a2a/config.hpp"
#include "a2a/tensor.hpp"

namespace a2a {

struct FrameConfig {
  int hop = 320;     // 20 ms at 16 kHz
  int window = 640;
  int mel_bands = 80;
  double fmin = 40.0;
  double fmax = 7600.0;
  int sample_rate = 16000;

  int fft_size() const;  // smallest power of two >= window
};

FrameConfig frame_config_from(const RunConfig& cfg);

// floor(n_samples / hop); throws "too-short error" if n_samples < hop
int frame_count(int64_t n_samples, const FrameConfig& cfg);

// Hann window of the given length, periodic form
std::vector<double> hann_window(int n);

// Magnitude spectrogram [T x (fft/2+1)], frames centered at t*hop + hop/2,
// reflect-padded at the edges.
Tensor stft_magnitude(const std::vector<double>& samples, const FrameConfig& cfg);

// Triangular mel filterbank [mel_bands x (fft/2+1)]
Tensor mel_filterbank(const FrameConfig& cfg);

// log(max(mel_power, 1e-5)) as [T x mel_bands]
Tensor log_mel(const AudioClip& clip, const FrameConfig& cfg);

struct ContentFeatures {
  Tensor frames;  // T x F
  std::vector<double> band_mean, band_std;  // normalization used, per band
};

// Per-utterance per-band normalized log-mel.
ContentFeatures extract_content_features(const AudioClip& clip, const FrameConfig& cfg);

// Sidecar feature file: magic "A2AF", version u32, T u32, F u32, then
// little-endian float32 row-major.
void write_features(const Tensor& frames, const std::string& path);
Tensor read_features(const std::string& path);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace a2a
