#pragma once

#include <string>
#include <vector>

#include "a2a/config.hpp"
#include "a2a/corpus.hpp"
#include "a2a/net.hpp"
#include "a2a/tensor.hpp"

namespace a2a {

// Three conv blocks plus two self-attention layers over frames; the shared
// trunk of both utterance encoders. kernel 1 keeps the speaker path
// permutation-invariant, kernel 3 gives the emotion path local context.
class FrameEncoder {
 public:
  FrameEncoder(const std::string& prefix, int in_dim, int hidden, int kernel, int heads,
               uint64_t seed);

  net::Var forward(net::Tape& t, net::Var x);  // [T x in_dim] -> [T x hidden]
  void collect(std::vector<net::Param*>& out);

  int in_dim() const { return in_dim_; }
  int hidden() const { return hidden_; }

 private:
  int in_dim_, hidden_, kernel_, heads_;
  net::Param c1w_, c1b_, c2w_, c2b_, c3w_, c3b_;
  net::AttentionParams attn1_, attn2_;
};

struct SpeakerForward {
  net::Var s;               // [1 x S]
  net::Var speaker_logits;  // [1 x n_speakers]
  net::Var emotion_logits;  // [1 x n_emotions], behind gradient reversal
};

class SpeakerEncoder {
 public:
  SpeakerEncoder(const RunConfig& cfg, int n_speakers, int n_emotions);

  net::Var embed(net::Tape& t, const Tensor& mel);  // s only
  SpeakerForward forward(net::Tape& t, const Tensor& mel);
  std::vector<net::Param*> params();

  int s_dim() const { return s_dim_; }
  int n_speakers() const { return n_speakers_; }
  int n_emotions() const { return n_emotions_; }
  double lambda_adv() const { return lambda_; }

 private:
  int s_dim_, n_speakers_, n_emotions_;
  double lambda_;
  FrameEncoder enc_;
  net::Param fc1w_, fc1b_, fc2w_, fc2b_;
  net::Param spk_w_, spk_b_, emo_w_, emo_b_;
};

struct EmotionForward {
  net::Var E;               // [T x D]
  net::Var e_bar;           // [1 x D], row mean of E
  net::Var emotion_logits;  // [1 x n_emotions]
  net::Var speaker_logits;  // [1 x n_speakers], behind gradient reversal
};

class EmotionClassifier {
 public:
  EmotionClassifier(const RunConfig& cfg, int n_speakers, int n_emotions, uint64_t seed);

  EmotionForward forward(net::Tape& t, const Tensor& mel);
  std::vector<net::Param*> params();

  int d_dim() const { return d_dim_; }
  int n_speakers() const { return n_speakers_; }
  int n_emotions() const { return n_emotions_; }
  double lambda_adv() const { return lambda_; }

 private:
  int d_dim_, n_speakers_, n_emotions_;
  double lambda_;
  FrameEncoder enc_;
  net::Param proj_w_, proj_b_;
  net::Param emo_w_, emo_b_, spk_w_, spk_b_;
};

// Reported adversarial objective: main CE minus lambda times adversary CE.
inline double adversarial_objective_value(double main_ce, double adv_ce, double lambda) {
  return main_ce - lambda * adv_ce;
}

// Cross-entropies over stacked logits. `objective` is what the optimizer
// minimizes (main + adversary CE; the reversal layer inside the forward pass
// already scales the adversary gradient by -lambda on its way into the
// trunk). `value` is the reported quantity main - lambda * adversary.
struct AdvLoss {
  net::Var objective;
  net::Var main_ce, adv_ce;
  double value = 0;
};

AdvLoss adversarial_loss(net::Tape& t, net::Var main_logits, const std::vector<int>& main_labels,
                         net::Var adv_logits, const std::vector<int>& adv_labels, double lambda);

// Per-utterance mel inputs for a manifest split, cached in memory.
std::vector<Tensor> load_split_mels(const Manifest& man, const std::string& base_dir,
                                    const RunConfig& cfg, const std::string& split,
                                    std::vector<int>* record_indices = nullptr);

// Counts classes over the whole manifest (all splits), so held-out ids keep
// stable head positions.
int count_speakers(const Manifest& man);
int count_emotions(const Manifest& man);

// Minimizes the Eq. 1 objective on the train split. Appends one CSV row per
// epoch to *log_csv ("epoch,L_spk,L_emo,L_total" header included).
SpeakerEncoder train_speaker_encoder(const Manifest& man, const std::string& base_dir,
                                     const RunConfig& cfg, std::string* log_csv);

}  // namespace a2a
