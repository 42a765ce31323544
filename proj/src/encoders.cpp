#include "a2a/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "a2a/audio.hpp"
#include "a2a/dsp.hpp"

namespace a2a {

using namespace net;

namespace {

AttentionParams make_attention(const std::string& prefix, int dim, uint64_t seed) {
  AttentionParams p;
  p.wq = {prefix + ".wq", init_xavier(prefix + ".wq", {dim, dim}, seed)};
  p.wk = {prefix + ".wk", init_xavier(prefix + ".wk", {dim, dim}, seed)};
  p.wv = {prefix + ".wv", init_xavier(prefix + ".wv", {dim, dim}, seed)};
  p.wo = {prefix + ".wo", init_xavier(prefix + ".wo", {dim, dim}, seed)};
  p.bq = {prefix + ".bq", init_zeros({1, dim})};
  p.bk = {prefix + ".bk", init_zeros({1, dim})};
  p.bv = {prefix + ".bv", init_zeros({1, dim})};
  p.bo = {prefix + ".bo", init_zeros({1, dim})};
  return p;
}

void collect_attention(AttentionParams& p, std::vector<Param*>& out) {
  for (Param* q : {&p.wq, &p.wk, &p.wv, &p.wo, &p.bq, &p.bk, &p.bv, &p.bo}) out.push_back(q);
}

Param conv_w(const std::string& name, int oc, int k, int ic, uint64_t seed) {
  return {name, init_xavier(name, {oc, k, ic}, seed)};
}

}  // namespace

FrameEncoder::FrameEncoder(const std::string& prefix, int in_dim, int hidden, int kernel,
                           int heads, uint64_t seed)
    : in_dim_(in_dim),
      hidden_(hidden),
      kernel_(kernel),
      heads_(heads),
      c1w_(conv_w(prefix + ".c1.w", hidden, kernel, in_dim, seed)),
      c1b_{prefix + ".c1.b", init_zeros({1, hidden})},
      c2w_(conv_w(prefix + ".c2.w", hidden, kernel, hidden, seed)),
      c2b_{prefix + ".c2.b", init_zeros({1, hidden})},
      c3w_(conv_w(prefix + ".c3.w", hidden, kernel, hidden, seed)),
      c3b_{prefix + ".c3.b", init_zeros({1, hidden})},
      attn1_(make_attention(prefix + ".attn1", hidden, seed)),
      attn2_(make_attention(prefix + ".attn2", hidden, seed)) {
  if (hidden % heads) fail("parameter error: encoder hidden size not divisible by heads");
}

Var FrameEncoder::forward(Tape& t, Var x) {
  if (x.val().rows() < 1) fail("shape error: encoder needs at least one frame");
  if (x.val().cols() != in_dim_)
    fail("shape error: encoder expects " + std::to_string(in_dim_) + " bands, got " +
         std::to_string(x.val().cols()));
  Var h = tanh_(t, conv1d(t, x, t.param(c1w_), t.param(c1b_), 1, kernels::Pad::kReplicate));
  h = tanh_(t, conv1d(t, h, t.param(c2w_), t.param(c2b_), 1, kernels::Pad::kReplicate));
  h = tanh_(t, conv1d(t, h, t.param(c3w_), t.param(c3b_), 1, kernels::Pad::kReplicate));
  h = tanh_(t, add(t, h, multihead_attention(t, h, h, attn1_, heads_)));
  h = tanh_(t, add(t, h, multihead_attention(t, h, h, attn2_, heads_)));
  return h;
}

void FrameEncoder::collect(std::vector<Param*>& out) {
  for (Param* p : {&c1w_, &c1b_, &c2w_, &c2b_, &c3w_, &c3b_}) out.push_back(p);
  collect_attention(attn1_, out);
  collect_attention(attn2_, out);
}

SpeakerEncoder::SpeakerEncoder(const RunConfig& cfg, int n_speakers, int n_emotions)
    : s_dim_(cfg.speaker_dim),
      n_speakers_(n_speakers),
      n_emotions_(n_emotions),
      lambda_(cfg.speaker_lambda_adv_emotion),
      enc_("spk.enc", cfg.frame_mel_bands, cfg.speaker_hidden, 1, 2, cfg.speaker_seed),
      fc1w_{"spk.fc1.w",
            init_xavier("spk.fc1.w", {2 * cfg.speaker_hidden, cfg.speaker_hidden},
                        cfg.speaker_seed)},
      fc1b_{"spk.fc1.b", init_zeros({1, cfg.speaker_hidden})},
      fc2w_{"spk.fc2.w", init_xavier("spk.fc2.w", {cfg.speaker_hidden, s_dim_}, cfg.speaker_seed)},
      fc2b_{"spk.fc2.b", init_zeros({1, s_dim_})},
      spk_w_{"spk.head_s.w", init_xavier("spk.head_s.w", {s_dim_, n_speakers}, cfg.speaker_seed)},
      spk_b_{"spk.head_s.b", init_zeros({1, n_speakers})},
      emo_w_{"spk.head_e.w", init_xavier("spk.head_e.w", {s_dim_, n_emotions}, cfg.speaker_seed)},
      emo_b_{"spk.head_e.b", init_zeros({1, n_emotions})} {
  if (n_speakers < 1 || n_emotions < 1) fail("parameter error: class counts must be positive");
}

Var SpeakerEncoder::embed(Tape& t, const Tensor& mel) {
  Var h = enc_.forward(t, t.input(mel));
  Var pooled = mean_std_pool(t, h);
  Var z = tanh_(t, linear(t, pooled, t.param(fc1w_), t.param(fc1b_)));
  return linear(t, z, t.param(fc2w_), t.param(fc2b_));
}

SpeakerForward SpeakerEncoder::forward(Tape& t, const Tensor& mel) {
  SpeakerForward f;
  f.s = embed(t, mel);
  f.speaker_logits = linear(t, f.s, t.param(spk_w_), t.param(spk_b_));
  Var rev = grl(t, f.s, lambda_);
  f.emotion_logits = linear(t, rev, t.param(emo_w_), t.param(emo_b_));
  return f;
}

std::vector<Param*> SpeakerEncoder::params() {
  std::vector<Param*> out;
  enc_.collect(out);
  for (Param* p : {&fc1w_, &fc1b_, &fc2w_, &fc2b_, &spk_w_, &spk_b_, &emo_w_, &emo_b_})
    out.push_back(p);
  return out;
}

EmotionClassifier::EmotionClassifier(const RunConfig& cfg, int n_speakers, int n_emotions,
                                     uint64_t seed)
    : d_dim_(cfg.emotion_dim),
      n_speakers_(n_speakers),
      n_emotions_(n_emotions),
      lambda_(cfg.emotion_lambda_adv_speaker),
      enc_("emo.enc", cfg.frame_mel_bands, cfg.emotion_hidden, 3, 2, seed),
      proj_w_{"emo.proj.w", init_xavier("emo.proj.w", {cfg.emotion_hidden, d_dim_}, seed)},
      proj_b_{"emo.proj.b", init_zeros({1, d_dim_})},
      emo_w_{"emo.head_e.w", init_xavier("emo.head_e.w", {d_dim_, n_emotions}, seed)},
      emo_b_{"emo.head_e.b", init_zeros({1, n_emotions})},
      spk_w_{"emo.head_s.w", init_xavier("emo.head_s.w", {d_dim_, n_speakers}, seed)},
      spk_b_{"emo.head_s.b", init_zeros({1, n_speakers})} {
  if (n_speakers < 1 || n_emotions < 1) fail("parameter error: class counts must be positive");
}

EmotionForward EmotionClassifier::forward(Tape& t, const Tensor& mel) {
  EmotionForward f;
  Var h = enc_.forward(t, t.input(mel));
  f.E = linear(t, h, t.param(proj_w_), t.param(proj_b_));
  f.e_bar = mean_rows(t, f.E);
  f.emotion_logits = linear(t, f.e_bar, t.param(emo_w_), t.param(emo_b_));
  Var rev = grl(t, f.e_bar, lambda_);
  f.speaker_logits = linear(t, rev, t.param(spk_w_), t.param(spk_b_));
  return f;
}

std::vector<Param*> EmotionClassifier::params() {
  std::vector<Param*> out;
  enc_.collect(out);
  for (Param* p : {&proj_w_, &proj_b_, &emo_w_, &emo_b_, &spk_w_, &spk_b_}) out.push_back(p);
  return out;
}

AdvLoss adversarial_loss(Tape& t, Var main_logits, const std::vector<int>& main_labels,
                         Var adv_logits, const std::vector<int>& adv_labels, double lambda) {
  AdvLoss l;
  l.main_ce = cross_entropy(t, main_logits, main_labels);
  l.adv_ce = cross_entropy(t, adv_logits, adv_labels);
  l.objective = add(t, l.main_ce, l.adv_ce);
  l.value = adversarial_objective_value(l.main_ce.val().v[0], l.adv_ce.val().v[0], lambda);
  return l;
}

std::vector<Tensor> load_split_mels(const Manifest& man, const std::string& base_dir,
                                    const RunConfig& cfg, const std::string& split,
                                    std::vector<int>* record_indices) {
  FrameConfig fc = frame_config_from(cfg);
  std::vector<Tensor> mels;
  for (size_t i = 0; i < man.records.size(); i++) {
    const UtteranceRecord& r = man.records[i];
    if (r.split != split) continue;
    AudioClip clip = read_wav(base_dir + "/" + r.wav_path);
    mels.push_back(log_mel(clip, fc));
    if (record_indices) record_indices->push_back(int(i));
  }
  return mels;
}

int count_speakers(const Manifest& man) {
  int n = 0;
  for (const auto& r : man.records) n = std::max(n, r.speaker_id + 1);
  return n;
}

int count_emotions(const Manifest& man) {
  int n = 0;
  for (const auto& r : man.records) n = std::max(n, r.emotion_id + 1);
  return n;
}

SpeakerEncoder train_speaker_encoder(const Manifest& man, const std::string& base_dir,
                                     const RunConfig& cfg, std::string* log_csv) {
  std::set<int> spk_seen, emo_seen;
  for (const auto& r : man.records) {
    if (r.split != "train") continue;
    spk_seen.insert(r.speaker_id);
    emo_seen.insert(r.emotion_id);
  }
  if (spk_seen.empty()) fail("degenerate-data error: train split is empty");
  if (spk_seen.size() < 2)
    fail("degenerate-data error: train split needs at least 2 speaker classes");
  if (emo_seen.size() < 2)
    fail("degenerate-data error: train split needs at least 2 emotion classes");

  std::vector<int> rec_idx;
  std::vector<Tensor> mels = load_split_mels(man, base_dir, cfg, "train", &rec_idx);

  SpeakerEncoder model(cfg, count_speakers(man), count_emotions(man));
  AdamW opt;
  opt.lr = cfg.speaker_lr;
  Rng rng(mix_seed(cfg.speaker_seed, 0x7472616eu));

  if (log_csv) *log_csv += "epoch,L_spk,L_emo,L_total\n";
  int n = int(mels.size());
  std::vector<int> order(mels.size());
  for (int i = 0; i < n; i++) order[size_t(i)] = i;

  for (int epoch = 1; epoch <= cfg.speaker_epochs; epoch++) {
    for (int i = n - 1; i > 0; i--)
      std::swap(order[size_t(i)], order[size_t(rng.below(i + 1))]);

    double sum_spk = 0, sum_emo = 0;
    for (int start = 0; start < n; start += cfg.speaker_batch) {
      int bsz = std::min(cfg.speaker_batch, n - start);
      Tape t;
      std::vector<Var> spk_rows, emo_rows;
      std::vector<int> spk_labels, emo_labels;
      for (int b = 0; b < bsz; b++) {
        int i = order[size_t(start + b)];
        SpeakerForward f = model.forward(t, mels[size_t(i)]);
        spk_rows.push_back(f.speaker_logits);
        emo_rows.push_back(f.emotion_logits);
        const UtteranceRecord& r = man.records[size_t(rec_idx[size_t(i)])];
        spk_labels.push_back(r.speaker_id);
        emo_labels.push_back(r.emotion_id);
      }
      AdvLoss l = adversarial_loss(t, stack_rows(t, spk_rows), spk_labels,
                                   stack_rows(t, emo_rows), emo_labels, model.lambda_adv());
      if (!std::isfinite(l.main_ce.val().v[0]) || !std::isfinite(l.adv_ce.val().v[0]))
        fail("numeric error: non-finite speaker-encoder loss at epoch " + std::to_string(epoch));
      t.backward(l.objective);
      opt.step(t.param_grads());
      sum_spk += l.main_ce.val().v[0] * bsz;
      sum_emo += l.adv_ce.val().v[0] * bsz;
    }

    double l_spk = sum_spk / n, l_emo = sum_emo / n;
    if (log_csv)
      *log_csv += std::to_string(epoch) + "," + fmt_double(l_spk) + "," + fmt_double(l_emo) + "," +
                  fmt_double(adversarial_objective_value(l_spk, l_emo, model.lambda_adv())) + "\n";
  }
  return model;
}

}  // namespace a2a
