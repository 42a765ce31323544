#include "a2a/config.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <variant>

#include "a2a/common.hpp"

namespace a2a {

namespace {

using Field = std::variant<int RunConfig::*, double RunConfig::*, uint64_t RunConfig::*,
                           std::vector<int> RunConfig::*>;

struct SchemaRow {
  const char* section;
  const char* key;
  Field field;
};

const std::vector<SchemaRow>& schema() {
  static const std::vector<SchemaRow> rows = {
      {"corpus", "speakers", &RunConfig::corpus_speakers},
      {"corpus", "emotions", &RunConfig::corpus_emotions},
      {"corpus", "sentences", &RunConfig::corpus_sentences},
      {"corpus", "seed", &RunConfig::corpus_seed},
      {"corpus", "held_out_speakers", &RunConfig::corpus_held_out_speakers},
      {"corpus", "held_out_emotions", &RunConfig::corpus_held_out_emotions},
      {"frame", "hop", &RunConfig::frame_hop},
      {"frame", "window", &RunConfig::frame_window},
      {"frame", "mel_bands", &RunConfig::frame_mel_bands},
      {"frame", "fmin", &RunConfig::frame_fmin},
      {"frame", "fmax", &RunConfig::frame_fmax},
      {"frame", "sample_rate", &RunConfig::frame_sample_rate},
      {"pitch", "fmin", &RunConfig::pitch_fmin},
      {"pitch", "fmax", &RunConfig::pitch_fmax},
      {"tokenizer", "k", &RunConfig::tokenizer_k},
      {"tokenizer", "sample_fraction", &RunConfig::tokenizer_sample_fraction},
      {"tokenizer", "seed", &RunConfig::tokenizer_seed},
      {"speaker", "dim", &RunConfig::speaker_dim},
      {"speaker", "hidden", &RunConfig::speaker_hidden},
      {"speaker", "lambda_adv_emotion", &RunConfig::speaker_lambda_adv_emotion},
      {"speaker", "epochs", &RunConfig::speaker_epochs},
      {"speaker", "batch", &RunConfig::speaker_batch},
      {"speaker", "lr", &RunConfig::speaker_lr},
      {"speaker", "seed", &RunConfig::speaker_seed},
      {"emotion", "dim", &RunConfig::emotion_dim},
      {"emotion", "hidden", &RunConfig::emotion_hidden},
      {"emotion", "lambda_adv_speaker", &RunConfig::emotion_lambda_adv_speaker},
      {"joint", "lambda_emotion", &RunConfig::joint_lambda_emotion},
      {"joint", "lambda_f0", &RunConfig::joint_lambda_f0},
      {"joint", "lambda_duration", &RunConfig::joint_lambda_duration},
      {"joint", "epochs", &RunConfig::joint_epochs},
      {"joint", "batch", &RunConfig::joint_batch},
      {"joint", "lr", &RunConfig::joint_lr},
      {"joint", "content_dim", &RunConfig::joint_content_dim},
      {"joint", "attention_heads", &RunConfig::joint_attention_heads},
      {"joint", "attention_dim", &RunConfig::joint_attention_dim},
      {"joint", "pitch_hidden", &RunConfig::joint_pitch_hidden},
      {"joint", "duration_hidden", &RunConfig::joint_duration_hidden},
      {"joint", "duration_kernel", &RunConfig::joint_duration_kernel},
      {"joint", "seed", &RunConfig::joint_seed},
      {"vocoder", "base_channels", &RunConfig::vocoder_base_channels},
      {"vocoder", "steps", &RunConfig::vocoder_steps},
      {"vocoder", "batch", &RunConfig::vocoder_batch},
      {"vocoder", "lr", &RunConfig::vocoder_lr},
      {"vocoder", "crop_frames", &RunConfig::vocoder_crop_frames},
      {"vocoder", "seed", &RunConfig::vocoder_seed},
      {"convert", "duration_clamp", &RunConfig::convert_duration_clamp},
      {"eval", "scorer_epochs", &RunConfig::eval_scorer_epochs},
      {"eval", "scorer_batch", &RunConfig::eval_scorer_batch},
      {"eval", "scorer_lr", &RunConfig::eval_scorer_lr},
      {"eval", "scorer_seed", &RunConfig::eval_scorer_seed},
      {"eval", "bootstrap_samples", &RunConfig::eval_bootstrap_samples},
      {"eval", "seed", &RunConfig::eval_seed},
  };
  return rows;
}

std::string fmt_exact(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

int64_t parse_i64(const std::string& s, const std::string& where) {
  int64_t out = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail("config error: key '" + where + "' expects an integer, got '" + s + "'");
  return out;
}

uint64_t parse_u64(const std::string& s, const std::string& where) {
  uint64_t out = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail("config error: key '" + where + "' expects an unsigned integer, got '" + s + "'");
  return out;
}

double parse_f64(const std::string& s, const std::string& where) {
  double out = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail("config error: key '" + where + "' expects a number, got '" + s + "'");
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& where) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  for (const std::string& part : split(s, ','))
    out.push_back(int(parse_i64(trim(part), where)));
  return out;
}

std::string fmt_int_list(const std::vector<int>& v) {
  std::vector<std::string> parts;
  for (int x : v) parts.push_back(std::to_string(x));
  return join(parts, ",");
}

void validate(const RunConfig& c) {
  auto positive = [](int64_t v, const char* what) {
    if (v <= 0) fail(std::string("config error: ") + what + " must be positive");
  };
  positive(c.corpus_speakers, "corpus.speakers");
  positive(c.corpus_emotions, "corpus.emotions");
  positive(c.corpus_sentences, "corpus.sentences");
  positive(c.frame_hop, "frame.hop");
  positive(c.frame_mel_bands, "frame.mel_bands");
  positive(c.frame_sample_rate, "frame.sample_rate");
  positive(c.tokenizer_k, "tokenizer.k");
  positive(c.speaker_dim, "speaker.dim");
  positive(c.speaker_hidden, "speaker.hidden");
  positive(c.speaker_epochs, "speaker.epochs");
  positive(c.speaker_batch, "speaker.batch");
  positive(c.emotion_dim, "emotion.dim");
  positive(c.emotion_hidden, "emotion.hidden");
  positive(c.joint_epochs, "joint.epochs");
  positive(c.joint_batch, "joint.batch");
  positive(c.joint_content_dim, "joint.content_dim");
  positive(c.joint_attention_heads, "joint.attention_heads");
  positive(c.joint_attention_dim, "joint.attention_dim");
  positive(c.joint_pitch_hidden, "joint.pitch_hidden");
  positive(c.joint_duration_hidden, "joint.duration_hidden");
  positive(c.joint_duration_kernel, "joint.duration_kernel");
  positive(c.vocoder_base_channels, "vocoder.base_channels");
  positive(c.vocoder_steps, "vocoder.steps");
  positive(c.vocoder_batch, "vocoder.batch");
  positive(c.vocoder_crop_frames, "vocoder.crop_frames");
  positive(c.eval_scorer_epochs, "eval.scorer_epochs");
  positive(c.eval_scorer_batch, "eval.scorer_batch");
  positive(c.eval_bootstrap_samples, "eval.bootstrap_samples");

  if (c.frame_window < c.frame_hop) fail("config error: frame.window must be >= frame.hop");
  if (c.frame_fmin <= 0 || c.frame_fmax <= c.frame_fmin)
    fail("config error: frame mel range must satisfy 0 < fmin < fmax");
  if (c.pitch_fmin <= 0 || c.pitch_fmax <= c.pitch_fmin)
    fail("config error: pitch range must satisfy 0 < fmin < fmax");
  if (c.tokenizer_k < 2) fail("config error: tokenizer.k must be at least 2");
  if (c.tokenizer_sample_fraction <= 0 || c.tokenizer_sample_fraction > 1)
    fail("config error: tokenizer.sample_fraction must be in (0, 1]");
  if (c.speaker_lr <= 0 || c.joint_lr <= 0 || c.vocoder_lr <= 0 || c.eval_scorer_lr <= 0)
    fail("config error: learning rates must be positive");
  if (c.speaker_lambda_adv_emotion < 0 || c.emotion_lambda_adv_speaker < 0)
    fail("config error: adversarial weights must be nonnegative");
  if (c.joint_lambda_emotion < 0 || c.joint_lambda_f0 < 0 || c.joint_lambda_duration < 0)
    fail("config error: joint loss weights must be nonnegative");
  if (c.joint_attention_dim % c.joint_attention_heads)
    fail("config error: joint.attention_dim must be divisible by joint.attention_heads");
  if (c.joint_duration_kernel % 2 == 0)
    fail("config error: joint.duration_kernel must be odd");
  if (c.convert_duration_clamp <= 0 || c.convert_duration_clamp >= 1)
    fail("config error: convert.duration_clamp must be in (0, 1)");
  for (int s : c.corpus_held_out_speakers)
    if (s < 0 || s >= c.corpus_speakers)
      fail("config error: corpus.held_out_speakers entry " + std::to_string(s) + " out of range");
  for (int e : c.corpus_held_out_emotions)
    if (e < 0 || e >= c.corpus_emotions)
      fail("config error: corpus.held_out_emotions entry " + std::to_string(e) + " out of range");
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, const SchemaRow*> by_name;
  std::map<std::string, bool> known_section;
  for (const SchemaRow& row : schema()) {
    by_name[std::string(row.section) + "." + row.key] = &row;
    known_section[row.section] = true;
  }

  std::string section;
  std::map<std::string, bool> seen;
  int line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    line_no++;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail("config error: line " + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section.count(section)) fail("config error: unknown section '" + section + "'");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("config error: line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      fail("config error: line " + std::to_string(line_no) + ": key outside any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::string full = section + "." + key;
    auto it = by_name.find(full);
    if (it == by_name.end()) fail("config error: unknown key '" + full + "'");
    if (seen.count(full)) fail("config error: duplicate key '" + full + "'");
    seen[full] = true;

    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, int>)
            cfg.*member = int(parse_i64(value, full));
          else if constexpr (std::is_same_v<T, uint64_t>)
            cfg.*member = parse_u64(value, full);
          else if constexpr (std::is_same_v<T, double>)
            cfg.*member = parse_f64(value, full);
          else
            cfg.*member = parse_int_list(value, full);
        },
        it->second->field);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

std::string dump_run_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const SchemaRow& row : schema()) {
    if (section != row.section) {
      if (!out.empty()) out += "\n";
      section = row.section;
      out += "[" + section + "]\n";
    }
    out += std::string(row.key) + " = ";
    std::visit(
        [&](auto member) {
          using T = std::remove_cv_t<std::remove_reference_t<decltype(cfg.*member)>>;
          if constexpr (std::is_same_v<T, int>)
            out += std::to_string(cfg.*member);
          else if constexpr (std::is_same_v<T, uint64_t>)
            out += std::to_string(cfg.*member);
          else if constexpr (std::is_same_v<T, double>)
            out += fmt_exact(cfg.*member);
          else
            out += fmt_int_list(cfg.*member);
        },
        row.field);
    out += "\n";
  }
  return out;
}

uint64_t config_hash(const RunConfig& cfg) { return fnv1a(dump_run_config(cfg)); }

std::string config_hash_hex(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return std::string(buf);
}

}  // namespace a2a
