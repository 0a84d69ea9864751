#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtab/classifier.hpp"
#include "mtab/encoder.hpp"
#include "mtab/fs.hpp"

namespace mtab {

inline nlohmann::json encoder_config_to_json(const EncoderConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},
          {"n_layers", c.n_layers},     {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},             {"dropout", c.dropout},
          {"max_len", c.max_len}};
}

inline EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.max_len = j.at("max_len").get<int>();
  return c;
}

namespace detail {

inline nlohmann::json tensor_to_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline void tensor_from_json(const nlohmann::json& j, const std::string& name,
                             Matrix& out) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows != out.rows() || cols != out.cols())
    throw ShapeError("checkpoint tensor '" + name + "' has shape " +
                     std::to_string(rows) + "x" + std::to_string(cols) +
                     ", expected " + std::to_string(out.rows()) + "x" +
                     std::to_string(out.cols()));
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ShapeError("checkpoint tensor '" + name + "' has wrong element count");
  Eigen::Index i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = data[i++].get<double>();
}

}  // namespace detail

struct Checkpoint {
  EncoderParams encoder;
  ClassifierParams classifier;
};

inline void save_checkpoint(const std::filesystem::path& path,
                            const EncoderParams& enc,
                            const ClassifierParams& cls) {
  nlohmann::json j;
  j["schema"] = "mtab.checkpoint.v1";
  j["artifact_version"] = kVersion;
  j["encoder_config"] = encoder_config_to_json(enc.config);
  auto& tensors = j["tensors"];
  // param_refs only exists in a mutable flavour (the optimizer needs writable
  // tensors); serialization reads through the same refs.
  for (auto ref : const_cast<EncoderParams&>(enc).param_refs())
    tensors[ref.name] = detail::tensor_to_json(*ref.tensor);
  for (auto ref : const_cast<ClassifierParams&>(cls).param_refs())
    tensors[ref.name] = detail::tensor_to_json(*ref.tensor);
  write_text_file(path, j.dump() + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw MissingArtifactError("checkpoint not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("schema") != "mtab.checkpoint.v1")
      throw ParseError("unsupported checkpoint schema in " + path.string());
    const EncoderConfig cfg = encoder_config_from_json(j.at("encoder_config"));
    Checkpoint out{EncoderParams::init(cfg, 0, 0.0),
                   ClassifierParams::init(cfg.d_model, 0, 0.0)};
    const auto& tensors = j.at("tensors");
    for (auto ref : out.encoder.param_refs())
      detail::tensor_from_json(tensors.at(ref.name), ref.name, *ref.tensor);
    for (auto ref : out.classifier.param_refs())
      detail::tensor_from_json(tensors.at(ref.name), ref.name, *ref.tensor);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace mtab
