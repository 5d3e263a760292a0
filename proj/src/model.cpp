#include "golomb/model.hpp"

#include <filesystem>
#include <utility>

#include "json.hpp"

#include "golomb/config.hpp"
#include "golomb/errors.hpp"
#include "golomb/json_io.hpp"
#include "golomb/rng.hpp"

namespace golomb {
namespace {

HeadsConfig heads_config(const EncoderConfig& ecfg, const AssemblyConfig& acfg) {
  HeadsConfig hcfg;
  hcfg.hidden_size = ecfg.hidden_size;
  hcfg.categorical_head = acfg.categorical_head;
  hcfg.max_categorical_values = acfg.max_categorical_values;
  return hcfg;
}

EncoderConfig with_vocab(EncoderConfig ecfg, const Vocabulary& vocab) {
  if (ecfg.vocab_size == 0) {
    ecfg.vocab_size = vocab.size();
  } else if (ecfg.vocab_size != vocab.size()) {
    throw ConfigError("encoder vocab_size " + std::to_string(ecfg.vocab_size) +
                      " does not match vocabulary of " +
                      std::to_string(vocab.size()) + " tokens");
  }
  return ecfg;
}

}  // namespace

void DecodingConfig::validate() const {
  if (max_span_len < 1) throw ConfigError("max_span_len must be positive");
}

Model::Model(EncoderConfig ecfg, AssemblyConfig acfg, DecodingConfig dcfg,
             Vocabulary vocabulary)
    : encoder_cfg(with_vocab(std::move(ecfg), vocabulary)),
      assembly_cfg(std::move(acfg)),
      decoding_cfg(dcfg),
      vocab(std::move(vocabulary)),
      encoder(encoder_cfg),
      heads(heads_config(encoder_cfg, assembly_cfg)) {
  encoder_cfg.validate();
  assembly_cfg.validate();
  decoding_cfg.validate();
  if (encoder_cfg.max_seq_len < assembly_cfg.max_seq_len) {
    throw ConfigError("encoder max_seq_len " +
                      std::to_string(encoder_cfg.max_seq_len) +
                      " is shorter than assembled inputs (assembly "
                      "max_seq_len " +
                      std::to_string(assembly_cfg.max_seq_len) + ")");
  }
  encoder.register_params(params);
  heads.register_params(params);
  params.freeze();
}

void Model::init_params(std::uint64_t seed) {
  encoder.init_params(params, derive_seed(seed, "encoder"));
  heads.init_params(params, derive_seed(seed, "heads"));
}

HeadOutputs Model::predict(const EncoderInput& input,
                           const SlotSchema& slot) const {
  EncoderOutput enc = encoder.encode(input, params);
  return heads.forward(enc, input, slot, params);
}

void Model::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  save_params(params, dir);
  vocab.save(dir + "/vocab.txt");
  nlohmann::json j{
      {"encoder", config_to_json(encoder_cfg)},
      {"assembly", config_to_json(assembly_cfg)},
      {"decoding", config_to_json(decoding_cfg)},
  };
  write_text_file(dir + "/model_config.json", j.dump(2) + "\n");
}

Model Model::load(const std::string& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(dir + "/model_config.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model_config.json is not valid JSON: " +
                    std::string(e.what()));
  }
  EncoderConfig ecfg;
  AssemblyConfig acfg;
  DecodingConfig dcfg;
  if (j.contains("encoder")) config_from_json(j.at("encoder"), ecfg);
  if (j.contains("assembly")) config_from_json(j.at("assembly"), acfg);
  if (j.contains("decoding")) config_from_json(j.at("decoding"), dcfg);
  Vocabulary vocab = Vocabulary::load(dir + "/vocab.txt");
  Model model(std::move(ecfg), std::move(acfg), dcfg, std::move(vocab));
  load_params(model.params, dir);
  return model;
}

}  // namespace golomb
