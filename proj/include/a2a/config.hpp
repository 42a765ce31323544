#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace a2a {

// Every tunable of the pipeline with its default value. Sections mirror the
// stage that consumes them; parse/dump round-trip exactly.
struct RunConfig {
  // [corpus]
  int corpus_speakers = 5;
  int corpus_emotions = 5;
  int corpus_sentences = 20;
  uint64_t corpus_seed = 42;
  std::vector<int> corpus_held_out_speakers = {4};
  std::vector<int> corpus_held_out_emotions = {4};

  // [frame]
  int frame_hop = 320;
  int frame_window = 640;
  int frame_mel_bands = 80;
  double frame_fmin = 40.0;
  double frame_fmax = 7600.0;
  int frame_sample_rate = 16000;

  // [pitch]
  double pitch_fmin = 50.0;
  double pitch_fmax = 600.0;

  // [tokenizer]
  int tokenizer_k = 100;
  double tokenizer_sample_fraction = 0.1;
  uint64_t tokenizer_seed = 101;

  // [speaker]
  int speaker_dim = 64;
  int speaker_hidden = 128;
  double speaker_lambda_adv_emotion = 10.0;
  int speaker_epochs = 10;
  int speaker_batch = 32;
  double speaker_lr = 1e-4;
  uint64_t speaker_seed = 202;

  // [emotion]
  int emotion_dim = 64;
  int emotion_hidden = 128;
  double emotion_lambda_adv_speaker = 1.0;

  // [joint]
  double joint_lambda_emotion = 1000.0;
  double joint_lambda_f0 = 1.0;
  double joint_lambda_duration = 10.0;
  int joint_epochs = 200;
  int joint_batch = 32;
  double joint_lr = 1e-4;
  int joint_content_dim = 256;
  int joint_attention_heads = 4;
  int joint_attention_dim = 256;
  int joint_pitch_hidden = 256;
  int joint_duration_hidden = 256;
  int joint_duration_kernel = 3;
  uint64_t joint_seed = 303;

  // [vocoder]
  int vocoder_base_channels = 128;
  int vocoder_steps = 600;
  int vocoder_batch = 16;
  double vocoder_lr = 1e-4;
  int vocoder_crop_frames = 12;
  uint64_t vocoder_seed = 404;

  // [convert]
  double convert_duration_clamp = 0.4;

  // [eval]
  int eval_scorer_epochs = 40;
  int eval_scorer_batch = 32;
  double eval_scorer_lr = 1e-3;
  uint64_t eval_scorer_seed = 505;
  int eval_bootstrap_samples = 1000;
  uint64_t eval_seed = 606;
};

// Strict INI parse: [section] headers, key = value lines, full-line '#'
// comments. Unknown sections/keys, malformed values, and duplicates all
// throw "config error"; missing keys keep their defaults.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Canonical dump: fixed section/key order, shortest round-trip numbers.
// parse(dump(c)) == c, and the hash below is taken over this exact text.
std::string dump_run_config(const RunConfig& cfg);

uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace a2a
