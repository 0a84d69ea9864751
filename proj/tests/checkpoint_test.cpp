#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mtab/checkpoint.hpp"

using namespace mtab;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("mtab_ckpt_test_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

EncoderConfig demo_config() {
  EncoderConfig cfg;
  cfg.vocab_size = 17;
  cfg.d_model = 8;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 12;
  cfg.dropout = 0.1;
  cfg.max_len = 9;
  return cfg;
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit exact") {
  TempDir tmp;
  const auto cfg = demo_config();
  EncoderParams enc = EncoderParams::init(cfg, 42, 0.3);
  ClassifierParams cls = ClassifierParams::init(cfg.d_model, 43, 0.3);
  // Perturb a few entries to oddball values that stress the serializer.
  enc.tok_emb(0, 0) = 1.0 / 3.0;
  enc.tok_emb(1, 1) = -1e-17;
  cls.b(0, 2) = 1e300;

  const auto file = tmp.path / "checkpoint.json";
  save_checkpoint(file, enc, cls);
  Checkpoint back = load_checkpoint(file);

  REQUIRE(back.encoder.config.vocab_size == cfg.vocab_size);
  REQUIRE(back.encoder.config.d_model == cfg.d_model);
  REQUIRE(back.encoder.config.n_layers == cfg.n_layers);
  REQUIRE(back.encoder.config.dropout == cfg.dropout);
  REQUIRE(back.encoder.same_values(enc));
  REQUIRE(back.classifier.same_values(cls));
  REQUIRE(back.classifier.b(0, 2) == 1e300);
  REQUIRE(back.encoder.tok_emb(1, 1) == -1e-17);
}

TEST_CASE("saving twice produces identical bytes") {
  TempDir tmp;
  const auto cfg = demo_config();
  const EncoderParams enc = EncoderParams::init(cfg, 7, 0.2);
  const ClassifierParams cls = ClassifierParams::init(cfg.d_model, 8, 0.2);
  save_checkpoint(tmp.path / "a.json", enc, cls);
  save_checkpoint(tmp.path / "b.json", enc, cls);
  REQUIRE(read_text_file(tmp.path / "a.json") ==
          read_text_file(tmp.path / "b.json"));
}

TEST_CASE("missing checkpoint raises MissingArtifactError") {
  REQUIRE_THROWS_AS(load_checkpoint("/nonexistent/dir/checkpoint.json"),
                    MissingArtifactError);
}

TEST_CASE("malformed checkpoint raises ParseError") {
  TempDir tmp;
  const auto file = tmp.path / "checkpoint.json";
  std::ofstream(file) << "this is not json {";
  REQUIRE_THROWS_AS(load_checkpoint(file), ParseError);

  std::ofstream(file, std::ios::trunc) << "{\"schema\":\"other.v9\"}\n";
  REQUIRE_THROWS_AS(load_checkpoint(file), ParseError);

  std::ofstream(file, std::ios::trunc) << "{\"schema\":\"mtab.checkpoint.v1\"}\n";
  REQUIRE_THROWS_AS(load_checkpoint(file), ParseError);
}

TEST_CASE("tensor shape mismatch raises ShapeError") {
  TempDir tmp;
  const auto cfg = demo_config();
  const EncoderParams enc = EncoderParams::init(cfg, 7, 0.2);
  const ClassifierParams cls = ClassifierParams::init(cfg.d_model, 8, 0.2);
  const auto file = tmp.path / "checkpoint.json";
  save_checkpoint(file, enc, cls);

  // Claim a different width in the stored config: all tensors mismatch.
  auto j = nlohmann::json::parse(read_text_file(file));
  j["encoder_config"]["d_model"] = 16;
  j["encoder_config"]["n_heads"] = 4;
  write_text_file(file, j.dump());
  REQUIRE_THROWS_AS(load_checkpoint(file), ShapeError);

  // Tamper with a single tensor's element count instead.
  j = nlohmann::json::parse(read_text_file(file));
  j["encoder_config"]["d_model"] = 8;
  j["encoder_config"]["n_heads"] = 2;
  j["tensors"]["cls.w"]["data"].push_back(0.0);
  write_text_file(file, j.dump());
  REQUIRE_THROWS_AS(load_checkpoint(file), ShapeError);
}

TEST_CASE("checkpoint rejects an invalid stored config") {
  TempDir tmp;
  const auto cfg = demo_config();
  const EncoderParams enc = EncoderParams::init(cfg, 7, 0.2);
  const ClassifierParams cls = ClassifierParams::init(cfg.d_model, 8, 0.2);
  const auto file = tmp.path / "checkpoint.json";
  save_checkpoint(file, enc, cls);
  auto j = nlohmann::json::parse(read_text_file(file));
  j["encoder_config"]["n_heads"] = 3;  // does not divide d_model=8
  write_text_file(file, j.dump());
  REQUIRE_THROWS_AS(load_checkpoint(file), ConfigError);
}
