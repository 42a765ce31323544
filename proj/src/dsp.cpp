#include "a2a/dsp.hpp"

#include <cmath>
#include <complex>
#include <cstring>

#include "a2a/common.hpp"
#include "a2a/fft.hpp"

namespace a2a {

int FrameConfig::fft_size() const {
  int n = 1;
  while (n < window) n <<= 1;
  return n;
}

FrameConfig frame_config_from(const RunConfig& cfg) {
  FrameConfig f;
  f.hop = cfg.frame_hop;
  f.window = cfg.frame_window;
  f.mel_bands = cfg.frame_mel_bands;
  f.fmin = cfg.frame_fmin;
  f.fmax = cfg.frame_fmax;
  f.sample_rate = cfg.frame_sample_rate;
  return f;
}

int frame_count(int64_t n_samples, const FrameConfig& cfg) {
  if (n_samples < cfg.hop)
    fail("too-short error: " + std::to_string(n_samples) + " samples, need at least " +
         std::to_string(cfg.hop));
  return int(n_samples / cfg.hop);
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; i++) w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

namespace {

inline double sample_reflect(const std::vector<double>& x, int64_t i) {
  int64_t n = int64_t(x.size());
  if (n == 1) return x[0];
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return x[size_t(i)];
}

}  // namespace

Tensor stft_magnitude(const std::vector<double>& samples, const FrameConfig& cfg) {
  int T = frame_count(int64_t(samples.size()), cfg);
  int nfft = cfg.fft_size();
  int bins = nfft / 2 + 1;
  auto win = hann_window(cfg.window);
  Tensor out({T, bins});
  std::vector<std::complex<double>> buf(nfft);
  for (int t = 0; t < T; t++) {
    int64_t center = int64_t(t) * cfg.hop + cfg.hop / 2;
    int64_t start = center - cfg.window / 2;
    for (int i = 0; i < cfg.window; i++)
      buf[i] = sample_reflect(samples, start + i) * win[i];
    for (int i = cfg.window; i < nfft; i++) buf[i] = 0.0;
    fft::forward(buf.data(), nfft);
    for (int b = 0; b < bins; b++) out.at(t, b) = std::abs(buf[b]);
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Tensor mel_filterbank(const FrameConfig& cfg) {
  int nfft = cfg.fft_size();
  int bins = nfft / 2 + 1;
  int M = cfg.mel_bands;
  double mlo = hz_to_mel(cfg.fmin), mhi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(M + 2);
  for (int i = 0; i < M + 2; i++)
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * i / (M + 1));
  Tensor fb({M, bins});
  for (int m = 0; m < M; m++) {
    double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int b = 0; b < bins; b++) {
      double hz = double(b) * cfg.sample_rate / nfft;
      double v = 0.0;
      if (hz > lo && hz < mid)
        v = (hz - lo) / (mid - lo);
      else if (hz >= mid && hz < hi)
        v = (hi - hz) / (hi - mid);
      fb.at(m, b) = v;
    }
  }
  return fb;
}

Tensor log_mel(const AudioClip& clip, const FrameConfig& cfg) {
  Tensor mag = stft_magnitude(clip.samples, cfg);
  Tensor fb = mel_filterbank(cfg);
  int T = mag.rows(), bins = mag.cols(), M = cfg.mel_bands;
  Tensor out({T, M});
  for (int t = 0; t < T; t++)
    for (int m = 0; m < M; m++) {
      double s = 0;
      for (int b = 0; b < bins; b++) s += fb.at(m, b) * mag.at(t, b) * mag.at(t, b);
      out.at(t, m) = std::log(std::max(s, 1e-5));
    }
  return out;
}

ContentFeatures extract_content_features(const AudioClip& clip, const FrameConfig& cfg) {
  ContentFeatures cf;
  cf.frames = log_mel(clip, cfg);
  int T = cf.frames.rows(), M = cf.frames.cols();
  cf.band_mean.assign(M, 0.0);
  cf.band_std.assign(M, 1.0);
  for (int m = 0; m < M; m++) {
    double mean = 0;
    for (int t = 0; t < T; t++) mean += cf.frames.at(t, m);
    mean /= T;
    double var = 0;
    for (int t = 0; t < T; t++) {
      double d = cf.frames.at(t, m) - mean;
      var += d * d;
    }
    double sd = std::sqrt(var / T);
    if (sd < 1e-8) sd = 1.0;  // constant band, leave it centered only
    cf.band_mean[m] = mean;
    cf.band_std[m] = sd;
    for (int t = 0; t < T; t++) cf.frames.at(t, m) = (cf.frames.at(t, m) - mean) / sd;
  }
  return cf;
}

void write_features(const Tensor& frames, const std::string& path) {
  if (frames.rank() != 2) fail("shape error: features must be 2-D");
  std::string out = "A2AF";
  auto put_u32 = [&](uint32_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 24) & 0xff));
  };
  put_u32(1);
  put_u32(uint32_t(frames.rows()));
  put_u32(uint32_t(frames.cols()));
  for (double d : frames.v) {
    float f = float(d);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(bits);
  }
  write_text_file(path, out);
}

Tensor read_features(const std::string& path) {
  std::string raw = read_text_file(path);
  if (raw.size() < 16 || raw.compare(0, 4, "A2AF") != 0)
    fail("format error: bad feature file magic: " + path);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(raw.data());
  auto get_u32 = [&](size_t off) {
    return uint32_t(p[off]) | uint32_t(p[off + 1]) << 8 | uint32_t(p[off + 2]) << 16 |
           uint32_t(p[off + 3]) << 24;
  };
  uint32_t version = get_u32(4);
  if (version != 1) fail("format error: unsupported feature file version " + std::to_string(version));
  uint32_t T = get_u32(8), F = get_u32(12);
  if (raw.size() != 16 + size_t(T) * F * 4)
    fail("format error: feature file size mismatch: " + path);
  Tensor out({int(T), int(F)});
  for (size_t i = 0; i < size_t(T) * F; i++) {
    uint32_t bits = get_u32(16 + i * 4);
    float f;
    std::memcpy(&f, &bits, 4);
    out.v[i] = double(f);
  }
  return out;
}

}  // namespace a2a
