#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mtab/train.hpp"

using namespace mtab;

namespace {

TweetRecord rec(std::string id, std::string text, StanceLabel label) {
  TweetRecord r;
  r.id = std::move(id);
  r.raw_text = std::move(text);
  r.lang = LanguageTag("en");
  r.label = label;
  return r;
}

// Twelve short texts where the stance is carried by a single cue token.
Dataset cue_corpus() {
  std::vector<TweetRecord> rs;
  const char* pos[] = {"great stuff today", "really great game",
                       "great and sunny", "so great here"};
  const char* neg[] = {"awful stuff today", "really awful game",
                       "awful and rainy", "so awful here"};
  const char* neu[] = {"plain stuff today", "really plain game",
                       "plain and grey", "so plain here"};
  for (int i = 0; i < 4; ++i) {
    rs.push_back(rec("p" + std::to_string(i), pos[i], StanceLabel::Positive));
    rs.push_back(rec("n" + std::to_string(i), neg[i], StanceLabel::Negative));
    rs.push_back(rec("u" + std::to_string(i), neu[i], StanceLabel::Neutral));
  }
  return Dataset("cues", std::move(rs));
}

EncoderConfig tiny_cfg(int vocab) {
  EncoderConfig cfg;
  cfg.vocab_size = vocab;
  cfg.d_model = 16;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 24;
  cfg.dropout = 0.0;
  cfg.max_len = 8;
  return cfg;
}

TrainConfig fast_train(int epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 4;
  cfg.learning_rate = 5e-3;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("supervised training overfits a separable cue corpus") {
  const Dataset data = cue_corpus();
  const Tokenizer tok = build_vocab(data, 1, 8);
  EncoderParams enc = EncoderParams::init(tiny_cfg(tok.vocab_size()), 11, 0.1);
  ClassifierParams cls = ClassifierParams::init(16, 12, 0.1);

  const double before = eval_macro_f1(enc, cls, tok, data);
  const TrainLog log =
      train_supervised(enc, cls, tok, data, nullptr, fast_train(40),
                       TrainMode::Joint);
  REQUIRE(log.epochs.size() == 40);
  const double after = eval_macro_f1(enc, cls, tok, data);
  REQUIRE(after == 1.0);
  REQUIRE(after > before);
  // Mean loss must come down by an order of magnitude on a memorized set.
  REQUIRE(log.epochs.back().mean_loss < log.epochs.front().mean_loss / 10.0);
  // No dev set was passed, so the per-epoch dev score stays at the sentinel.
  REQUIRE(log.epochs.front().dev_macro_f1 == -1.0);
}

TEST_CASE("training is deterministic in the seed") {
  const Dataset data = cue_corpus();
  const Tokenizer tok = build_vocab(data, 1, 8);
  const auto cfg = tiny_cfg(tok.vocab_size());

  auto run = [&](std::uint64_t train_seed) {
    EncoderParams enc = EncoderParams::init(cfg, 11, 0.1);
    ClassifierParams cls = ClassifierParams::init(16, 12, 0.1);
    TrainConfig tc = fast_train(3);
    tc.seed = train_seed;
    const TrainLog log =
        train_supervised(enc, cls, tok, data, nullptr, tc, TrainMode::Joint);
    return std::make_tuple(std::move(enc), std::move(cls), log);
  };

  auto [enc_a, cls_a, log_a] = run(7);
  auto [enc_b, cls_b, log_b] = run(7);
  auto [enc_c, cls_c, log_c] = run(8);

  REQUIRE(enc_a.same_values(enc_b));
  REQUIRE(cls_a.same_values(cls_b));
  for (std::size_t e = 0; e < log_a.epochs.size(); ++e)
    REQUIRE(log_a.epochs[e].mean_loss == log_b.epochs[e].mean_loss);
  REQUIRE_FALSE(enc_a.same_values(enc_c));
}

TEST_CASE("dev scores are tracked when a dev set is supplied") {
  const Dataset data = cue_corpus();
  const Tokenizer tok = build_vocab(data, 1, 8);
  EncoderParams enc = EncoderParams::init(tiny_cfg(tok.vocab_size()), 11, 0.1);
  ClassifierParams cls = ClassifierParams::init(16, 12, 0.1);
  const TrainLog log =
      train_supervised(enc, cls, tok, data, &data, fast_train(2),
                       TrainMode::Split);
  for (const auto& e : log.epochs) {
    REQUIRE(e.dev_macro_f1 >= 0.0);
    REQUIRE(e.dev_macro_f1 <= 1.0);
  }
}

TEST_CASE("prediction is invariant to batch size") {
  const Dataset data = cue_corpus();
  const Tokenizer tok = build_vocab(data, 1, 8);
  EncoderParams enc = EncoderParams::init(tiny_cfg(tok.vocab_size()), 3, 0.4);
  ClassifierParams cls = ClassifierParams::init(16, 4, 0.4);

  const auto one = predict(enc, cls, tok, data.records(), 1);
  const auto five = predict(enc, cls, tok, data.records(), 5);
  const auto big = predict(enc, cls, tok, data.records(), 64);
  REQUIRE(one.size() == data.size());
  REQUIRE(five.size() == data.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    REQUIRE(one[i].label == five[i].label);
    REQUIRE(one[i].label == big[i].label);
    for (int c = 0; c < kNumClasses; ++c) {
      REQUIRE(one[i].probs[c] == Catch::Approx(five[i].probs[c]).margin(1e-12));
      REQUIRE(one[i].probs[c] == Catch::Approx(big[i].probs[c]).margin(1e-12));
    }
  }
}

TEST_CASE("prediction probabilities are normalized") {
  const Dataset data = cue_corpus();
  const Tokenizer tok = build_vocab(data, 1, 8);
  const EncoderParams enc =
      EncoderParams::init(tiny_cfg(tok.vocab_size()), 3, 0.4);
  const ClassifierParams cls = ClassifierParams::init(16, 4, 0.4);
  for (const auto& p : predict(enc, cls, tok, data.records())) {
    double sum = 0.0;
    for (double v : p.probs) sum += v;
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("training input validation") {
  const Dataset data = cue_corpus();
  const Tokenizer tok = build_vocab(data, 1, 8);
  EncoderParams enc = EncoderParams::init(tiny_cfg(tok.vocab_size()), 11, 0.1);
  ClassifierParams cls = ClassifierParams::init(16, 12, 0.1);

  REQUIRE_THROWS_AS(train_supervised(enc, cls, tok, Dataset(), nullptr,
                                     fast_train(1), TrainMode::Joint),
                    EmptyCorpusError);

  TweetRecord unlabeled;
  unlabeled.id = "q";
  unlabeled.raw_text = "no label here";
  unlabeled.lang = LanguageTag("en");
  Dataset mixed("mixed", {unlabeled});
  REQUIRE_THROWS_AS(train_supervised(enc, cls, tok, mixed, nullptr,
                                     fast_train(1), TrainMode::Joint),
                    PreconditionError);
  REQUIRE_THROWS_AS(eval_macro_f1(enc, cls, tok, mixed), PreconditionError);

  TrainConfig bad = fast_train(1);
  bad.learning_rate = 0.0;
  REQUIRE_THROWS_AS(train_supervised(enc, cls, tok, data, nullptr, bad,
                                     TrainMode::Joint),
                    ConfigError);
  bad = fast_train(1);
  bad.batch_size = 0;
  REQUIRE_THROWS_AS(train_supervised(enc, cls, tok, data, nullptr, bad,
                                     TrainMode::Joint),
                    ConfigError);
}

TEST_CASE("zero epochs is a no-op") {
  const Dataset data = cue_corpus();
  const Tokenizer tok = build_vocab(data, 1, 8);
  EncoderParams enc = EncoderParams::init(tiny_cfg(tok.vocab_size()), 11, 0.1);
  EncoderParams before = enc;
  ClassifierParams cls = ClassifierParams::init(16, 12, 0.1);
  const TrainLog log = train_supervised(enc, cls, tok, data, nullptr,
                                        fast_train(0), TrainMode::Joint);
  REQUIRE(log.epochs.empty());
  REQUIRE(enc.same_values(before));
}

TEST_CASE("non-finite loss raises DivergenceError") {
  const Dataset data = cue_corpus();
  const Tokenizer tok = build_vocab(data, 1, 8);
  EncoderParams enc = EncoderParams::init(tiny_cfg(tok.vocab_size()), 11, 0.1);
  ClassifierParams cls = ClassifierParams::init(16, 12, 0.1);
  // Poisoned parameters surface as a non-finite batch loss immediately.
  // Row 2 is the CLS embedding, which every sequence reads.
  enc.tok_emb(2, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(train_supervised(enc, cls, tok, data, nullptr,
                                     fast_train(1), TrainMode::Joint),
                    DivergenceError);
}

TEST_CASE("train mode strings round-trip") {
  REQUIRE(train_mode_from_string("joint") == TrainMode::Joint);
  REQUIRE(train_mode_from_string("split") == TrainMode::Split);
  REQUIRE(to_string(TrainMode::Joint) == "joint");
  REQUIRE(to_string(TrainMode::Split) == "split");
  REQUIRE_THROWS_AS(train_mode_from_string("other"), ConfigError);
}
