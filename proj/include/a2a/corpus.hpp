#pragma once

#include <string>
#include <vector>

#include "a2a/audio.hpp"
#include "a2a/common.hpp"
#include "a2a/dsp.hpp"

namespace a2a {

struct SpeakerProfile {
  int speaker_id = 0;
  double base_f0 = 160.0;                    // Hz, in [80, 300]
  std::vector<double> harmonic_amplitudes;   // first = 1.0, nonnegative
  double formant_shift = 1.0;
};

enum class ContourShape { kFlat, kRising, kFalling, kVibrato, kPeaked };

struct EmotionProfile {
  int emotion_id = 0;
  ContourShape contour_shape = ContourShape::kFlat;
  double rate_multiplier = 1.0;      // in [0.6, 1.6]
  double f0_range_multiplier = 1.0;  // in [0.5, 2.5]
  double energy_tilt = 0.0;          // dB per frame
};

struct UtteranceRecord {
  std::string utt_id;
  std::string wav_path;
  int speaker_id = 0;
  int emotion_id = 0;
  std::vector<int> content_units;
  std::vector<int> unit_boundaries;  // strictly increasing, last = frame count
  std::string split;                 // train | valid | test
};

struct Manifest {
  std::vector<UtteranceRecord> records;
  int sample_rate = 16000;
  uint64_t corpus_seed = 0;

  const UtteranceRecord& find(const std::string& utt_id) const;
  bool has(const std::string& utt_id) const;
};

struct CorpusSpec {
  int speakers = 5;
  int emotions = 5;
  int sentences = 20;
  uint64_t seed = 42;
  std::string out_dir = "corpus";
  std::vector<int> held_out_speakers;
  std::vector<int> held_out_emotions;
};

// 16 content units: 0..11 voiced (two-formant harmonic), 12..15 unvoiced noise.
int num_content_units();
bool unit_is_voiced(int unit);
int unit_base_frames(int unit);

SpeakerProfile make_speaker_profile(int speaker_id, uint64_t corpus_seed);
EmotionProfile make_emotion_profile(int emotion_id);

// Frame durations per unit after emotion rate scaling, cumulative rounding.
std::vector<int> unit_durations(const std::vector<int>& content_units,
                                const EmotionProfile& emotion);

AudioClip synth_utterance(const std::vector<int>& content_units,
                          const SpeakerProfile& speaker,
                          const EmotionProfile& emotion, uint64_t seed,
                          const FrameConfig& frame = {});

Manifest generate_corpus(const CorpusSpec& spec, const FrameConfig& frame = {});

CorpusSpec parse_corpus_config(const std::string& path);

void write_manifest(const Manifest& m, const std::string& path);
Manifest read_manifest(const std::string& path);

// The deterministic unit sequence of sentence i under this corpus seed.
std::vector<int> sentence_units(uint64_t corpus_seed, int sentence_index);

}  // namespace a2a
