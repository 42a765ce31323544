#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "a2a/checkpoint.hpp"
#include "a2a/common.hpp"
#include "a2a/corpus.hpp"
#include "a2a/encoders.hpp"

using namespace a2a;

namespace {

Tensor randn_mel(Rng& rng, int t, int f = 80, double scl = 1.0) {
  Tensor m({t, f});
  for (double& v : m.v) v = scl * rng.normal();
  return m;
}

RunConfig base_cfg() { return RunConfig{}; }

}  // namespace

TEST_CASE("speaker forward produces declared shapes at any length") {
  Rng rng(51);
  SpeakerEncoder enc(base_cfg(), 5, 5);
  net::Tape t(false);
  SpeakerForward f = enc.forward(t, randn_mel(rng, 50));
  CHECK(f.s.val().rows() == 1);
  CHECK(f.s.val().cols() == 64);
  CHECK(f.speaker_logits.val().cols() == 5);
  CHECK(f.emotion_logits.val().cols() == 5);

  SpeakerForward g = enc.forward(t, randn_mel(rng, 23));
  CHECK(g.s.val().cols() == 64);

  Tensor empty({0, 80});
  CHECK_THROWS_WITH_AS(enc.forward(t, empty), doctest::Contains("shape error"), a2a::Error);
  Tensor narrow({10, 40});
  CHECK_THROWS_WITH_AS(enc.forward(t, narrow), doctest::Contains("shape error"), a2a::Error);
}

TEST_CASE("speaker embedding is invariant to frame permutation") {
  Rng rng(52);
  SpeakerEncoder enc(base_cfg(), 5, 5);
  Tensor mel = randn_mel(rng, 40);
  Tensor perm({40, 80});
  std::vector<int> order(40);
  for (int i = 0; i < 40; i++) order[size_t(i)] = i;
  for (int i = 39; i > 0; i--) std::swap(order[size_t(i)], order[size_t(rng.below(i + 1))]);
  for (int i = 0; i < 40; i++)
    for (int j = 0; j < 80; j++) perm.at(i, j) = mel.at(order[size_t(i)], j);

  net::Tape t(false);
  Tensor s1 = enc.embed(t, mel).val();
  Tensor s2 = enc.embed(t, perm).val();
  for (int j = 0; j < 64; j++)
    CHECK(s1.at(0, j) == doctest::Approx(s2.at(0, j)).epsilon(1e-9));
}

TEST_CASE("embeddings stay finite on extreme inputs") {
  Rng rng(53);
  SpeakerEncoder spk(base_cfg(), 5, 5);
  EmotionClassifier emo(base_cfg(), 5, 5, 900);
  Tensor mel({30, 80});
  for (size_t i = 0; i < mel.v.size(); i++) mel.v[i] = (i % 2 ? 1e3 : -1e3);
  net::Tape t(false);
  CHECK(spk.embed(t, mel).val().finite());
  EmotionForward f = emo.forward(t, mel);
  CHECK(f.E.val().finite());
  CHECK(f.e_bar.val().finite());
}

TEST_CASE("emotion forward: E shape and exact mean pooling") {
  Rng rng(54);
  EmotionClassifier emo(base_cfg(), 5, 5, 901);
  Tensor mel = randn_mel(rng, 37);
  net::Tape t(false);
  EmotionForward f = emo.forward(t, mel);
  REQUIRE(f.E.val().rows() == 37);
  REQUIRE(f.E.val().cols() == 64);
  REQUIRE(f.e_bar.val().cols() == 64);
  for (int j = 0; j < 64; j++) {
    double m = 0;
    for (int i = 0; i < 37; i++) m += f.E.val().at(i, j);
    m /= 37;
    CHECK(f.e_bar.val().at(0, j) == doctest::Approx(m).epsilon(1e-12));
  }
  CHECK(f.emotion_logits.val().cols() == 5);
  CHECK(f.speaker_logits.val().cols() == 5);
}

TEST_CASE("constant input frames give identical emotion embedding rows") {
  Rng rng(55);
  EmotionClassifier emo(base_cfg(), 5, 5, 902);
  Tensor mel({12, 80});
  for (int j = 0; j < 80; j++) {
    double v = rng.normal();
    for (int i = 0; i < 12; i++) mel.at(i, j) = v;
  }
  net::Tape t(false);
  Tensor e = emo.forward(t, mel).E.val();
  for (int i = 1; i < 12; i++)
    for (int j = 0; j < 64; j++) CHECK(e.at(i, j) == e.at(0, j));
}

TEST_CASE("adversarial objective arithmetic") {
  CHECK(adversarial_objective_value(2.0, 1.6, 10.0) == doctest::Approx(-14.0).epsilon(1e-12));
  CHECK(adversarial_objective_value(1.2, 0.8, 1.0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(adversarial_objective_value(3.0, 1.0, 0.0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("adversarial loss is linear in lambda and checks labels") {
  Rng rng(56);
  Tensor main_logits({4, 5}), adv_logits({4, 3});
  for (double& v : main_logits.v) v = rng.normal();
  for (double& v : adv_logits.v) v = rng.normal();
  std::vector<int> ml = {0, 2, 4, 1}, al = {1, 0, 2, 2};

  net::Tape t;
  AdvLoss a = adversarial_loss(t, t.input(main_logits), ml, t.input(adv_logits), al, 7.0);
  AdvLoss z = adversarial_loss(t, t.input(main_logits), ml, t.input(adv_logits), al, 0.0);
  CHECK(a.value - z.value == doctest::Approx(-7.0 * a.adv_ce.val().v[0]).epsilon(1e-12));
  CHECK(z.value == doctest::Approx(z.main_ce.val().v[0]).epsilon(1e-12));

  std::vector<int> bad = {0, 2, 9, 1};
  CHECK_THROWS_WITH_AS(adversarial_loss(t, t.input(main_logits), bad, t.input(adv_logits), al, 1.0),
                       doctest::Contains("label error"), a2a::Error);
}

TEST_CASE("degenerate train splits are rejected before any file access") {
  Manifest m;
  m.records.push_back({"u0", "missing/u0.wav", 0, 0, {1, 2}, {3, 6}, "train"});
  m.records.push_back({"u1", "missing/u1.wav", 0, 1, {1, 2}, {3, 6}, "train"});
  RunConfig cfg;
  std::string log;
  CHECK_THROWS_WITH_AS(train_speaker_encoder(m, ".", cfg, &log),
                       doctest::Contains("degenerate-data error"), a2a::Error);

  m.records[1].speaker_id = 1;
  m.records[1].emotion_id = 0;
  CHECK_THROWS_WITH_AS(train_speaker_encoder(m, ".", cfg, &log),
                       doctest::Contains("degenerate-data error"), a2a::Error);

  Manifest empty;
  CHECK_THROWS_WITH_AS(train_speaker_encoder(empty, ".", cfg, &log),
                       doctest::Contains("degenerate-data error"), a2a::Error);
}

TEST_CASE("speaker training lowers the speaker CE and checkpoints restore exactly") {
  CorpusSpec spec;
  spec.speakers = 4;
  spec.emotions = 4;
  spec.sentences = 20;
  spec.seed = 77;
  spec.out_dir = "enc_corpus";
  Manifest man = generate_corpus(spec, {});

  RunConfig cfg;
  cfg.speaker_epochs = 4;
  cfg.speaker_batch = 16;
  cfg.speaker_lr = 1e-3;
  std::string log;
  SpeakerEncoder model = train_speaker_encoder(man, "enc_corpus", cfg, &log);

  std::vector<std::string> lines = split(trim(log), '\n');
  REQUIRE(int(lines.size()) == cfg.speaker_epochs + 1);
  CHECK(lines[0] == "epoch,L_spk,L_emo,L_total");
  double first = std::stod(split(lines[1], ',')[1]);
  double last = std::stod(split(lines.back(), ',')[1]);
  CHECK(last < first);

  ParamArchive a = snapshot(model.params(), 42);
  write_params(a, "enc_ckpt.a2ap");
  ParamArchive r = read_params("enc_ckpt.a2ap");
  CHECK(r.config_hash == 42);

  SpeakerEncoder m1(cfg, model.n_speakers(), model.n_emotions());
  SpeakerEncoder m2(cfg, model.n_speakers(), model.n_emotions());
  load_into(r, m1.params());
  load_into(r, m2.params());
  Rng rng(57);
  Tensor mel = randn_mel(rng, 25);
  net::Tape t(false);
  Tensor s1 = m1.embed(t, mel).val();
  Tensor s2 = m2.embed(t, mel).val();
  for (size_t i = 0; i < s1.v.size(); i++) CHECK(s1.v[i] == s2.v[i]);
  CHECK(s1.finite());
}
