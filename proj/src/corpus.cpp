#include "a2a/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

namespace a2a {

namespace {

constexpr int kVoicedUnits = 12;
constexpr int kNoiseUnits = 4;
constexpr int kHarmonics = 8;

// two-formant targets per voiced unit
const double kF1[] = {280, 430, 580, 730};
const double kF2[] = {900, 1600, 2300};

// 4..8 frames at rest
const int kBaseFrames[] = {5, 7, 4, 8, 6, 5, 7, 4, 6, 8, 5, 7, 4, 6, 5, 7};

double unit_hash01(uint64_t a, uint64_t b) {
  Rng r(mix_seed(a, b));
  return r.uniform();
}

// per-(emotion, unit) duration modulation, mean-centered in log space
double duration_mod(int emotion_id, int unit) {
  double z = 2.0 * unit_hash01(0x9e3779b97f4a7c15ull + emotion_id, 0x2545f4914f6cdd1dull + unit) - 1.0;
  return std::exp(0.16 * z);
}

double contour_dev(ContourShape shape, double p) {
  switch (shape) {
    case ContourShape::kFlat:
      return 0.0;
    case ContourShape::kRising:
      return 0.12 * (2.0 * p - 1.0);
    case ContourShape::kFalling:
      return -0.12 * (2.0 * p - 1.0);
    case ContourShape::kVibrato:
      return 0.10 * std::sin(2.0 * M_PI * 5.5 * p);  // 5.5 cycles across the utterance
    case ContourShape::kPeaked:
      return 0.12 * (2.0 * (1.0 - std::abs(2.0 * p - 1.0)) - 1.0);
  }
  return 0.0;
}

void check_units(const std::vector<int>& units) {
  if (units.empty()) fail("invalid-content error: empty unit sequence");
  for (int u : units)
    if (u < 0 || u >= num_content_units())
      fail("invalid-content error: unknown unit id " + std::to_string(u));
}

}  // namespace

int num_content_units() { return kVoicedUnits + kNoiseUnits; }
bool unit_is_voiced(int unit) { return unit < kVoicedUnits; }
int unit_base_frames(int unit) { return kBaseFrames[unit]; }

SpeakerProfile make_speaker_profile(int speaker_id, uint64_t corpus_seed) {
  SpeakerProfile sp;
  sp.speaker_id = speaker_id;
  Rng rng(mix_seed(corpus_seed, 0xabcd0000ull + speaker_id));
  sp.base_f0 = 110.0 + 150.0 * rng.uniform();
  double rolloff = 0.60 + 0.25 * rng.uniform();
  sp.harmonic_amplitudes.resize(kHarmonics);
  sp.harmonic_amplitudes[0] = 1.0;
  for (int h = 1; h < kHarmonics; h++)
    sp.harmonic_amplitudes[h] = sp.harmonic_amplitudes[h - 1] * rolloff;
  sp.formant_shift = 0.88 + 0.27 * rng.uniform();
  return sp;
}

EmotionProfile make_emotion_profile(int emotion_id) {
  static const ContourShape shapes[] = {ContourShape::kFlat, ContourShape::kRising,
                                        ContourShape::kFalling, ContourShape::kVibrato,
                                        ContourShape::kPeaked};
  static const double rates[] = {1.00, 0.80, 1.20, 0.90, 1.25};
  static const double ranges[] = {1.00, 1.60, 1.30, 2.00, 0.70};
  static const double tilts[] = {0.00, 0.15, -0.15, 0.05, -0.10};
  EmotionProfile e;
  e.emotion_id = emotion_id;
  int k = emotion_id % 5;
  e.contour_shape = shapes[k];
  e.rate_multiplier = rates[k];
  e.f0_range_multiplier = ranges[k];
  e.energy_tilt = tilts[k];
  if (emotion_id >= 5) {
    // extra emotions get jittered variants of the base five
    Rng rng(0x5151u + emotion_id);
    e.rate_multiplier = std::clamp(e.rate_multiplier * (0.9 + 0.2 * rng.uniform()), 0.6, 1.6);
    e.f0_range_multiplier = std::clamp(e.f0_range_multiplier * (0.8 + 0.4 * rng.uniform()), 0.5, 2.5);
  }
  return e;
}

std::vector<int> unit_durations(const std::vector<int>& content_units,
                                const EmotionProfile& emotion) {
  check_units(content_units);
  std::vector<int> out(content_units.size());
  double cum = 0.0;
  int prev = 0;
  for (size_t k = 0; k < content_units.size(); k++) {
    int u = content_units[k];
    cum += kBaseFrames[u] * duration_mod(emotion.emotion_id, u) / emotion.rate_multiplier;
    int b = int(std::floor(cum + 0.5));
    if (b <= prev) b = prev + 1;
    out[k] = b - prev;
    prev = b;
  }
  return out;
}

AudioClip synth_utterance(const std::vector<int>& content_units,
                          const SpeakerProfile& speaker,
                          const EmotionProfile& emotion, uint64_t seed,
                          const FrameConfig& frame) {
  check_units(content_units);
  auto durs = unit_durations(content_units, emotion);
  int T = std::accumulate(durs.begin(), durs.end(), 0);
  int64_t N = int64_t(T) * frame.hop;
  int sr = frame.sample_rate;

  AudioClip clip;
  clip.sample_rate = sr;
  clip.samples.assign(N, 0.0);

  Rng rng(mix_seed(seed, 0xfeedull));

  // slow f0 jitter, one normal per frame, linearly interpolated
  std::vector<double> jitter(T + 1);
  for (int t = 0; t <= T; t++) jitter[t] = 1.0 + 0.004 * rng.normal();

  // per-sample f0
  std::vector<double> f0(N);
  for (int64_t n = 0; n < N; n++) {
    double p = double(n) / double(N);
    double tf = double(n) / frame.hop;
    int ti = int(tf);
    double frac = tf - ti;
    double j = jitter[ti] * (1 - frac) + jitter[std::min(ti + 1, T)] * frac;
    double dev = contour_dev(emotion.contour_shape, p) * emotion.f0_range_multiplier;
    f0[n] = speaker.base_f0 * (1.0 + dev) * j;
  }

  // noise filter state shared across units so edges stay smooth
  double lp = 0.0, prev_white = 0.0;

  double phase[kHarmonics] = {0};
  int64_t pos = 0;
  int fade = sr / 250;  // 4 ms edges
  for (size_t k = 0; k < content_units.size(); k++) {
    int u = content_units[k];
    int64_t len = int64_t(durs[k]) * frame.hop;
    for (int64_t i = 0; i < len; i++) {
      int64_t n = pos + i;
      for (int h = 0; h < kHarmonics; h++)
        phase[h] += 2.0 * M_PI * (h + 1) * f0[n] / sr;
      double v = 0.0;
      if (unit_is_voiced(u)) {
        double f1 = kF1[u % 4] * speaker.formant_shift;
        double f2 = kF2[(u / 4) % 3] * speaker.formant_shift;
        for (int h = 0; h < kHarmonics; h++) {
          double fh = (h + 1) * f0[n];
          double d1 = (fh - f1) / 150.0, d2 = (fh - f2) / 220.0;
          double env = 0.12 + std::exp(-0.5 * d1 * d1) + 0.7 * std::exp(-0.5 * d2 * d2);
          v += speaker.harmonic_amplitudes[h] * env * std::sin(phase[h]);
        }
        v *= 0.35;
      } else {
        double white = rng.normal();
        switch (u - kVoicedUnits) {
          case 0: v = white; break;
          case 1: v = white - 0.92 * prev_white; break;       // high tilt
          case 2: lp = 0.25 * white + 0.75 * lp; v = 3.0 * lp; break;  // low band
          default: lp = 0.55 * white + 0.45 * lp; v = white - lp; break;
        }
        prev_white = white;
        v *= 0.18;
      }
      double edge = 1.0;
      if (i < fade) edge = 0.5 - 0.5 * std::cos(M_PI * i / fade);
      if (len - 1 - i < fade) edge = std::min(edge, 0.5 - 0.5 * std::cos(M_PI * (len - 1 - i) / fade));
      clip.samples[n] = v * edge;
    }
    pos += len;
  }

  // emotion energy tilt across frames, then noise floor
  for (int64_t n = 0; n < N; n++) {
    double t_rel = double(n) / frame.hop - 0.5 * T;
    double gain = std::pow(10.0, emotion.energy_tilt * t_rel / 20.0);
    gain = std::clamp(gain, 0.25, 4.0);
    clip.samples[n] = clip.samples[n] * gain + 0.002 * rng.normal();
  }

  double peak = 0.0;
  for (double v : clip.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0) {
    double g = 0.89 / peak;
    for (double& v : clip.samples) v *= g;
  }
  return clip;
}

std::vector<int> sentence_units(uint64_t corpus_seed, int sentence_index) {
  Rng rng(mix_seed(corpus_seed, 1000 + sentence_index));
  int len = 6 + int(rng.below(4));
  std::vector<int> units(len);
  int voiced = 0;
  for (int i = 0; i < len; i++) {
    units[i] = int(rng.below(num_content_units()));
    if (unit_is_voiced(units[i])) voiced++;
  }
  for (int i = 0; voiced < 2 && i < len; i++) {
    if (!unit_is_voiced(units[i])) {
      units[i] = int(rng.below(kVoicedUnits));
      voiced++;
    }
  }
  return units;
}

const UtteranceRecord& Manifest::find(const std::string& utt_id) const {
  for (const auto& r : records)
    if (r.utt_id == utt_id) return r;
  fail("manifest error: unknown utt_id " + utt_id);
}

bool Manifest::has(const std::string& utt_id) const {
  for (const auto& r : records)
    if (r.utt_id == utt_id) return true;
  return false;
}

Manifest generate_corpus(const CorpusSpec& spec, const FrameConfig& frame) {
  if (spec.speakers < 4) fail("config error: need at least 4 speakers");
  if (spec.emotions < 4) fail("config error: need at least 4 emotions");
  if (spec.sentences < 20) fail("config error: need at least 20 sentences");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(spec.out_dir) / "wav", ec);
  if (ec) fail("I/O error: cannot create " + spec.out_dir + ": " + ec.message());

  // sentence-level base split, deterministic shuffle
  std::vector<int> order(spec.sentences);
  std::iota(order.begin(), order.end(), 0);
  Rng shuf(mix_seed(spec.seed, 77));
  for (int i = spec.sentences - 1; i > 0; i--)
    std::swap(order[i], order[int(shuf.below(uint64_t(i) + 1))]);
  int n_train = int(std::ceil(0.70 * spec.sentences));
  int n_valid = int(std::ceil(0.15 * spec.sentences));
  std::vector<std::string> base_split(spec.sentences);
  for (int i = 0; i < spec.sentences; i++) {
    if (i < n_train) base_split[order[i]] = "train";
    else if (i < n_train + n_valid) base_split[order[i]] = "valid";
    else base_split[order[i]] = "test";
  }

  auto held = [](const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };

  Manifest man;
  man.sample_rate = frame.sample_rate;
  man.corpus_seed = spec.seed;
  for (int sp = 0; sp < spec.speakers; sp++) {
    SpeakerProfile spk = make_speaker_profile(sp, spec.seed);
    for (int em = 0; em < spec.emotions; em++) {
      EmotionProfile emo = make_emotion_profile(em);
      for (int se = 0; se < spec.sentences; se++) {
        UtteranceRecord rec;
        char buf[64];
        std::snprintf(buf, sizeof buf, "s%02d_e%02d_t%03d", sp, em, se);
        rec.utt_id = buf;
        rec.wav_path = "wav/" + rec.utt_id + ".wav";  // relative to the manifest
        rec.speaker_id = sp;
        rec.emotion_id = em;
        rec.content_units = sentence_units(spec.seed, se);
        auto durs = unit_durations(rec.content_units, emo);
        int acc = 0;
        for (int d : durs) rec.unit_boundaries.push_back(acc += d);
        rec.split = base_split[se];
        if (rec.split == "train" &&
            (held(spec.held_out_speakers, sp) || held(spec.held_out_emotions, em)))
          rec.split = (sp + em + se) % 2 ? "test" : "valid";

        uint64_t utt_seed = mix_seed(spec.seed, fnv1a(rec.utt_id));
        AudioClip clip = synth_utterance(rec.content_units, spk, emo, utt_seed, frame);
        write_wav(clip, (fs::path(spec.out_dir) / rec.wav_path).string());
        man.records.push_back(std::move(rec));
      }
    }
  }
  write_manifest(man, (fs::path(spec.out_dir) / "manifest.tsv").string());
  return man;
}

void write_manifest(const Manifest& m, const std::string& path) {
  std::string out = "# sample_rate=" + std::to_string(m.sample_rate) +
                    " corpus_seed=" + std::to_string(m.corpus_seed) + "\n";
  for (const auto& r : m.records) {
    std::vector<std::string> units, bounds;
    for (int u : r.content_units) units.push_back(std::to_string(u));
    for (int b : r.unit_boundaries) bounds.push_back(std::to_string(b));
    out += r.utt_id + "\t" + r.wav_path + "\t" + std::to_string(r.speaker_id) + "\t" +
           std::to_string(r.emotion_id) + "\t" + r.split + "\t" + join(units, ",") +
           "\t" + join(bounds, ",") + "\n";
  }
  write_text_file(path, out);
}

Manifest read_manifest(const std::string& path) {
  Manifest m;
  std::set<std::string> ids;
  for (const std::string& line : split(read_text_file(path), '\n')) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      for (const std::string& tok : split(line.substr(1), ' ')) {
        auto kv = split(tok, '=');
        if (kv.size() != 2) continue;
        if (kv[0] == "sample_rate") m.sample_rate = std::stoi(kv[1]);
        if (kv[0] == "corpus_seed") m.corpus_seed = std::stoull(kv[1]);
      }
      continue;
    }
    auto f = split(line, '\t');
    if (f.size() != 7) fail("format error: manifest row needs 7 fields, got " +
                            std::to_string(f.size()));
    UtteranceRecord r;
    r.utt_id = f[0];
    r.wav_path = f[1];
    r.speaker_id = std::stoi(f[2]);
    r.emotion_id = std::stoi(f[3]);
    r.split = f[4];
    if (r.split != "train" && r.split != "valid" && r.split != "test")
      fail("format error: bad split value '" + r.split + "'");
    for (const std::string& u : split(f[5], ',')) r.content_units.push_back(std::stoi(u));
    int prev = 0;
    for (const std::string& b : split(f[6], ',')) {
      int x = std::stoi(b);
      if (x <= prev) fail("format error: unit_boundaries not strictly increasing in " + r.utt_id);
      r.unit_boundaries.push_back(x);
      prev = x;
    }
    if (r.content_units.size() != r.unit_boundaries.size())
      fail("format error: unit/boundary count mismatch in " + r.utt_id);
    if (!ids.insert(r.utt_id).second) fail("format error: duplicate utt_id " + r.utt_id);
    m.records.push_back(std::move(r));
  }
  return m;
}

CorpusSpec parse_corpus_config(const std::string& path) {
  CorpusSpec spec;
  int lineno = 0;
  for (const std::string& raw : split(read_text_file(path), '\n')) {
    lineno++;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail("config error: line " + std::to_string(lineno) + " is not key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    auto int_list = [&](const std::string& v) {
      std::vector<int> out;
      for (const std::string& tok : split(v, ','))
        if (!trim(tok).empty()) out.push_back(std::stoi(trim(tok)));
      return out;
    };
    if (key == "speakers") spec.speakers = std::stoi(val);
    else if (key == "emotions") spec.emotions = std::stoi(val);
    else if (key == "sentences") spec.sentences = std::stoi(val);
    else if (key == "seed") spec.seed = std::stoull(val);
    else if (key == "out_dir") spec.out_dir = val;
    else if (key == "held_out_speakers") spec.held_out_speakers = int_list(val);
    else if (key == "held_out_emotions") spec.held_out_emotions = int_list(val);
    else fail("config error: unknown key '" + key + "'");
  }
  return spec;
}

}  // namespace a2a
