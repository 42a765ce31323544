#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "a2a/checkpoint.hpp"
#include "a2a/common.hpp"
#include "a2a/config.hpp"

using namespace a2a;

TEST_CASE("config defaults round-trip through dump and parse") {
  RunConfig def;
  std::string text = dump_run_config(def);
  RunConfig back = parse_run_config(text);
  CHECK(dump_run_config(back) == text);
  CHECK(config_hash(back) == config_hash(def));
  CHECK(back.tokenizer_k == 100);
  CHECK(back.speaker_lambda_adv_emotion == 10.0);
  CHECK(back.emotion_lambda_adv_speaker == 1.0);
  CHECK(back.joint_lambda_emotion == 1000.0);
  CHECK(back.joint_lambda_f0 == 1.0);
  CHECK(back.joint_lambda_duration == 10.0);
  CHECK(back.joint_epochs == 200);
  CHECK(back.joint_batch == 32);
  CHECK(back.joint_lr == 1e-4);
  CHECK(back.speaker_epochs == 10);
  CHECK(back.speaker_batch == 32);
  CHECK(back.vocoder_batch == 16);
  CHECK(back.joint_attention_heads == 4);
  CHECK(back.joint_attention_dim == 256);
  CHECK(back.joint_duration_kernel == 3);
  CHECK(back.convert_duration_clamp == 0.4);
}

TEST_CASE("config hash ignores comments and whitespace but not values") {
  RunConfig def;
  std::string noisy =
      "# run config\n"
      "[tokenizer]\n"
      "   k   =   100\n"
      "\n"
      "# another comment\n"
      "[joint]\n"
      "epochs = 200\n";
  CHECK(config_hash(parse_run_config(noisy)) == config_hash(def));

  RunConfig other = parse_run_config("[tokenizer]\nk = 50\n");
  CHECK(config_hash(other) != config_hash(def));
  CHECK(config_hash_hex(def).size() == 16);
}

TEST_CASE("config parser rejects unknown and malformed input") {
  CHECK_THROWS_WITH_AS(parse_run_config("[nope]\n"), doctest::Contains("unknown section"),
                       a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[tokenizer]\nbogus = 1\n"),
                       doctest::Contains("unknown key 'tokenizer.bogus'"), a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("k = 100\n"), doctest::Contains("outside any section"),
                       a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[tokenizer]\nk = 100\nk = 50\n"),
                       doctest::Contains("duplicate key"), a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[tokenizer]\nk is 100\n"),
                       doctest::Contains("expected key = value"), a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[tokenizer]\nk = ten\n"),
                       doctest::Contains("expects an integer"), a2a::Error);
}

TEST_CASE("config validation catches structural mistakes") {
  CHECK_THROWS_WITH_AS(parse_run_config("[joint]\nattention_dim = 250\n"),
                       doctest::Contains("divisible"), a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[joint]\nduration_kernel = 4\n"),
                       doctest::Contains("odd"), a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[convert]\nduration_clamp = 1.5\n"),
                       doctest::Contains("duration_clamp"), a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[frame]\nwindow = 100\n"),
                       doctest::Contains("window"), a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[corpus]\nheld_out_speakers = 7\n"),
                       doctest::Contains("out of range"), a2a::Error);
  CHECK_THROWS_WITH_AS(parse_run_config("[tokenizer]\nk = -5\n"),
                       doctest::Contains("positive"), a2a::Error);
}

TEST_CASE("config numbers survive dump/parse exactly") {
  RunConfig cfg;
  cfg.joint_lr = 1e-4;
  cfg.frame_fmax = 7600.0;
  cfg.tokenizer_sample_fraction = 0.1;
  RunConfig back = parse_run_config(dump_run_config(cfg));
  CHECK(back.joint_lr == cfg.joint_lr);
  CHECK(back.frame_fmax == cfg.frame_fmax);
  CHECK(back.tokenizer_sample_fraction == cfg.tokenizer_sample_fraction);
}

TEST_CASE("checkpoint archive round-trips names, shapes, hash") {
  Rng rng(41);
  ParamArchive a;
  a.config_hash = 0xdeadbeefcafef00dULL;
  Tensor w({3, 4});
  for (double& x : w.v) x = rng.normal();
  Tensor b({1, 4}, {0.5, -0.25, 0.0, 2.0});
  a.add("enc.w", w);
  a.add("enc.b", b);
  write_params(a, "ckpt_test.a2ap");

  ParamArchive r = read_params("ckpt_test.a2ap");
  CHECK(r.config_hash == a.config_hash);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].first == "enc.w");
  CHECK(r.entries[1].first == "enc.b");
  const Tensor* rw = r.find("enc.w");
  REQUIRE(rw != nullptr);
  CHECK(rw->shape == w.shape);
  for (size_t i = 0; i < w.v.size(); i++) CHECK(rw->v[i] == double(float(w.v[i])));
  CHECK(r.find("nope") == nullptr);
}

TEST_CASE("checkpoint load_into enforces an exact parameter match") {
  net::Param w{"enc.w", Tensor({2, 2}, {1, 2, 3, 4})};
  net::Param b{"enc.b", Tensor({1, 2}, {5, 6})};
  ParamArchive a = snapshot({&w, &b}, 7);
  write_params(a, "ckpt_load.a2ap");
  ParamArchive r = read_params("ckpt_load.a2ap");

  net::Param w2{"enc.w", Tensor({2, 2})};
  net::Param b2{"enc.b", Tensor({1, 2})};
  load_into(r, {&w2, &b2});
  CHECK(w2.value.v == w.value.v);
  CHECK(b2.value.v == b.value.v);

  net::Param wrong_shape{"enc.w", Tensor({2, 3})};
  CHECK_THROWS_WITH_AS(load_into(r, {&wrong_shape, &b2}), doctest::Contains("shape error"),
                       a2a::Error);
  net::Param wrong_name{"enc.missing", Tensor({2, 2})};
  CHECK_THROWS_WITH_AS(load_into(r, {&wrong_name, &b2}), doctest::Contains("missing parameter"),
                       a2a::Error);
  net::Param extra{"enc.extra", Tensor({1, 1})};
  CHECK_THROWS_WITH_AS(load_into(r, {&w2, &b2, &extra}), doctest::Contains("model expects"),
                       a2a::Error);
}

TEST_CASE("checkpoint reader rejects malformed files") {
  write_text_file("ckpt_bad.a2ap", "WRNG");
  CHECK_THROWS_WITH_AS(read_params("ckpt_bad.a2ap"), doctest::Contains("format error"),
                       a2a::Error);

  ParamArchive a;
  a.add("w", Tensor({2, 2}, {1, 2, 3, 4}));
  write_params(a, "ckpt_trunc.a2ap");
  std::string raw = read_text_file("ckpt_trunc.a2ap");
  write_text_file("ckpt_trunc.a2ap", raw.substr(0, raw.size() - 6));
  CHECK_THROWS_WITH_AS(read_params("ckpt_trunc.a2ap"), doctest::Contains("truncated"),
                       a2a::Error);

  ParamArchive dup;
  dup.add("w", Tensor({1, 1}, {1}));
  CHECK_THROWS_WITH_AS(dup.add("w", Tensor({1, 1}, {2})), doctest::Contains("duplicate"),
                       a2a::Error);
}
