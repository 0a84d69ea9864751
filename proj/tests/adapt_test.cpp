#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "mtab/adapt.hpp"

using namespace mtab;

namespace {

TweetRecord rec(std::string id, std::string text, const std::string& lang) {
  TweetRecord r;
  r.id = std::move(id);
  r.raw_text = std::move(text);
  r.lang = LanguageTag(lang);
  return r;
}

Dataset word_pool(const std::string& prefix, const std::string& lang,
                  const std::vector<std::string>& words, int n) {
  std::vector<TweetRecord> rs;
  for (int i = 0; i < n; ++i) {
    std::string text = words[i % words.size()] + " " +
                       words[(i + 1) % words.size()] + " " +
                       words[(i / 2) % words.size()];
    rs.push_back(rec(prefix + std::to_string(i), text, lang));
  }
  return Dataset(prefix, std::move(rs));
}

struct Fixture {
  Dataset src = word_pool("s", "en", {"alpha", "beta", "gamma", "delta"}, 30);
  Dataset tgt = word_pool("t", "x1", {"zork", "quux", "fnord", "blarg"}, 30);
  Tokenizer tok;
  EncoderParams enc;
  ClassifierParams cls = ClassifierParams::init(16, 5, 0.3);

  Fixture()
      : tok(build_vocab(std::vector<const Dataset*>{&src, &tgt}, 1, 12)),
        enc(EncoderParams::init(config(), 9, 0.3)) {}

  EncoderConfig config() const {
    EncoderConfig cfg;
    cfg.vocab_size = tok.vocab_size();
    cfg.d_model = 16;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_ff = 24;
    cfg.dropout = 0.0;
    cfg.max_len = 12;
    return cfg;
  }
};

AdaptationConfig quick(int epochs) {
  AdaptationConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.lr_discriminator = 1e-4;
  cfg.lr_generator = 1e-4;
  cfg.probe_size = 6;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("zero adaptation epochs returns the source encoder unchanged") {
  Fixture f;
  auto res = adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, f.src, quick(0));
  REQUIRE(res.tgt_enc.same_values(f.enc));
  REQUIRE(res.state.epochs.empty());
  REQUIRE(res.state.probe_pre == -1.0);
}

TEST_CASE("target-encoder-only scope freezes the classifier") {
  Fixture f;
  const ClassifierParams cls_before = f.cls;
  auto res = adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, f.src, quick(2));
  REQUIRE(f.cls.same_values(cls_before));
  // The target encoder must actually have moved.
  REQUIRE_FALSE(res.tgt_enc.same_values(f.enc));
  REQUIRE(res.state.epochs.size() == 2);
}

TEST_CASE("encoder-and-classifier scope updates the classifier too") {
  Fixture f;
  const ClassifierParams cls_before = f.cls;
  AdaptationConfig cfg = quick(2);
  cfg.update_scope = UpdateScope::EncoderAndClassifier;
  cfg.distill_weight = 1.0;
  auto res = adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, f.src, cfg);
  REQUIRE_FALSE(f.cls.same_values(cls_before));
  REQUIRE_FALSE(res.tgt_enc.same_values(f.enc));
}

TEST_CASE("adaptation is deterministic in the seed") {
  Fixture f1, f2;
  auto a = adapt_target_encoder(f1.enc, f1.cls, f1.tok, f1.tgt, f1.src, quick(2));
  auto b = adapt_target_encoder(f2.enc, f2.cls, f2.tok, f2.tgt, f2.src, quick(2));
  REQUIRE(a.tgt_enc.same_values(b.tgt_enc));
  REQUIRE(a.state.probe_pre == b.state.probe_pre);
  for (std::size_t e = 0; e < a.state.epochs.size(); ++e) {
    REQUIRE(a.state.epochs[e].d_loss == b.state.epochs[e].d_loss);
    REQUIRE(a.state.epochs[e].g_adv_loss == b.state.epochs[e].g_adv_loss);
    REQUIRE(a.state.epochs[e].distill_loss == b.state.epochs[e].distill_loss);
    REQUIRE(a.state.epochs[e].probe_accuracy ==
            b.state.epochs[e].probe_accuracy);
  }

  Fixture f3;
  AdaptationConfig other = quick(2);
  other.seed = 8;
  auto c = adapt_target_encoder(f3.enc, f3.cls, f3.tok, f3.tgt, f3.src, other);
  REQUIRE_FALSE(a.tgt_enc.same_values(c.tgt_enc));
}

TEST_CASE("fresh discriminator starts at chance, losses near ln 2") {
  Fixture f;
  AdaptationConfig cfg = quick(1);
  cfg.lr_discriminator = 1e-7;
  cfg.lr_generator = 1e-7;
  auto res = adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, f.src, cfg);
  // The discriminator init is near-zero, so its first-epoch mean losses sit
  // within a few percent of -log(1/2) on both sides.
  REQUIRE(res.state.epochs[0].d_loss ==
          Catch::Approx(std::log(2.0)).margin(0.05));
  REQUIRE(res.state.epochs[0].g_adv_loss ==
          Catch::Approx(std::log(2.0)).margin(0.05));
  REQUIRE(res.state.epochs[0].distill_loss >= 0.0);
}

TEST_CASE("distillation anchors the target encoder near its start") {
  // The student begins as an exact copy of the teacher, so the distillation
  // term starts at zero and acts purely as a leash. Under the same seed the
  // only difference between these runs is the leash strength; the heavily
  // weighted run must end with its parameters (and teacher disagreement)
  // closer to the source encoder.
  auto drift = [](double lambda) {
    Fixture f;
    AdaptationConfig cfg = quick(6);
    cfg.lr_generator = 1e-3;
    cfg.distill_weight = lambda;
    cfg.distill_temperature = 1.0;
    auto res = adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, f.src, cfg);
    double dist = 0.0;
    auto a = res.tgt_enc.param_refs();
    auto b = f.enc.param_refs();
    for (std::size_t i = 0; i < a.size(); ++i)
      dist += (*a[i].tensor - *b[i].tensor).norm();
    return std::make_pair(dist, res.state.epochs.back().distill_loss);
  };
  const auto [free_dist, free_kd] = drift(0.0);
  const auto [anchored_dist, anchored_kd] = drift(25.0);
  REQUIRE(anchored_dist < free_dist);
  REQUIRE(anchored_kd <= free_kd);
  REQUIRE(free_kd > 0.0);
}

TEST_CASE("adaptation pool validation") {
  Fixture f;
  REQUIRE_THROWS_AS(
      adapt_target_encoder(f.enc, f.cls, f.tok, Dataset(), f.src, quick(1)),
      EmptyPoolError);
  REQUIRE_THROWS_AS(
      adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, Dataset(), quick(1)),
      EmptyPoolError);

  std::vector<TweetRecord> mixed_records = {rec("m0", "zork quux", "x1"),
                                            rec("m1", "zork quux", "x2")};
  Dataset mixed("mixed", std::move(mixed_records));
  REQUIRE_THROWS_AS(
      adapt_target_encoder(f.enc, f.cls, f.tok, mixed, f.src, quick(1)),
      PreconditionError);

  AdaptationConfig bad = quick(1);
  bad.distill_temperature = 0.0;
  REQUIRE_THROWS_AS(
      adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, f.src, bad),
      ConfigError);
  bad = quick(1);
  bad.distill_weight = -1.0;
  REQUIRE_THROWS_AS(
      adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, f.src, bad),
      ConfigError);
}

TEST_CASE("probe separates disjoint-vocabulary pools and not identical ones") {
  Fixture f;
  // Disjoint token sets map to distinct pooled clusters even under a random
  // encoder; a freshly fitted probe should tell them apart nearly perfectly.
  const double separated = discriminator_probe(
      f.enc, f.enc, f.tok, f.src.records(), f.tgt.records(), 3);
  REQUIRE(separated >= 0.9);

  // Identical texts through the same encoder give identical embeddings on
  // both sides: any threshold is wrong on exactly one half.
  std::vector<TweetRecord> same_src, same_tgt;
  for (int i = 0; i < 20; ++i) {
    same_src.push_back(rec("a" + std::to_string(i), "zork zork", "en"));
    same_tgt.push_back(rec("b" + std::to_string(i), "zork zork", "x1"));
  }
  const double chance =
      discriminator_probe(f.enc, f.enc, f.tok, same_src, same_tgt, 3);
  REQUIRE(chance == Catch::Approx(0.5).margin(1e-12));

  REQUIRE_THROWS_AS(discriminator_probe(f.enc, f.enc, f.tok, {same_src[0]},
                                        same_tgt, 3),
                    EmptyPoolError);
}

TEST_CASE("probe hold-out never exceeds a fifth of the pool") {
  // With pools of 30 and probe_size 6 the carve keeps 24 active records. A
  // probe_size larger than pool/5 is capped rather than starving adaptation.
  Fixture f;
  AdaptationConfig cfg = quick(1);
  cfg.probe_size = 1000;
  auto res = adapt_target_encoder(f.enc, f.cls, f.tok, f.tgt, f.src, cfg);
  REQUIRE(res.state.probe_pre >= 0.0);  // probing still happened
  REQUIRE(res.state.epochs[0].probe_accuracy >= 0.0);
}

TEST_CASE("adaptation log serializes to json and csv") {
  AdaptationState s;
  s.probe_pre = 0.97;
  AdaptationEpoch e1{1, 0.69, 0.70, 0.05, 0.9};
  AdaptationEpoch e2{2, 0.65, 0.72, 0.04, 0.8};
  s.epochs = {e1, e2};

  const auto j = adaptation_state_to_json(s);
  REQUIRE(j.at("schema") == "mtab.adaptation.v1");
  REQUIRE(j.at("probe_pre") == 0.97);
  REQUIRE(j.at("epochs").size() == 2);
  REQUIRE(j.at("epochs").at(1).at("epoch") == 2);
  REQUIRE(j.at("epochs").at(0).at("d_loss") == 0.69);

  const std::string csv = adaptation_state_to_csv(s);
  REQUIRE(csv.rfind("epoch,d_loss,g_adv_loss,distill_loss,probe_accuracy\n",
                    0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 3);
  REQUIRE(csv.find("\n2,") != std::string::npos);
}

TEST_CASE("update scope strings round-trip") {
  REQUIRE(update_scope_from_string("target_encoder_only") ==
          UpdateScope::TargetEncoderOnly);
  REQUIRE(update_scope_from_string("encoder_and_classifier") ==
          UpdateScope::EncoderAndClassifier);
  REQUIRE(to_string(UpdateScope::TargetEncoderOnly) == "target_encoder_only");
  REQUIRE(to_string(UpdateScope::EncoderAndClassifier) ==
          "encoder_and_classifier");
  REQUIRE_THROWS_AS(update_scope_from_string("nope"), ConfigError);
}
