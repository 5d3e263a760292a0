#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "golomb/assembly.hpp"
#include "golomb/encoder.hpp"
#include "golomb/model.hpp"
#include "golomb/synth.hpp"
#include "golomb/training.hpp"

namespace golomb {

// Config objects serialize to flat JSON objects, one key per field. Reading
// uses merge semantics: keys present in the JSON override the current value,
// everything else keeps its default. Unknown keys are an error so typos in
// config files fail loudly instead of being ignored.

std::string to_string(CategoricalHead head);
CategoricalHead categorical_head_from_string(const std::string& name);

nlohmann::json config_to_json(const EncoderConfig& cfg);
nlohmann::json config_to_json(const AssemblyConfig& cfg);
nlohmann::json config_to_json(const DecodingConfig& cfg);
nlohmann::json config_to_json(const TrainConfig& cfg);
nlohmann::json config_to_json(const SynthConfig& cfg);

void config_from_json(const nlohmann::json& j, EncoderConfig& cfg);
void config_from_json(const nlohmann::json& j, AssemblyConfig& cfg);
void config_from_json(const nlohmann::json& j, DecodingConfig& cfg);
void config_from_json(const nlohmann::json& j, TrainConfig& cfg);
void config_from_json(const nlohmann::json& j, SynthConfig& cfg);

// One experiment = one JSON document with five named sections plus paths.
// Flags override file values through dotted paths ("--train.learning_rate").
struct RunConfig {
  EncoderConfig encoder;
  AssemblyConfig assembly;
  DecodingConfig decoding;
  TrainConfig train;
  SynthConfig synth;

  std::string schemas_path;
  std::string dialogues_path;
  std::string model_dir;
  std::string output_dir = "out";
  int max_vocab_size = 4000;

  RunConfig();  // reconciles the library defaults across sections

  void validate() const;
};

nlohmann::json config_to_json(const RunConfig& cfg);
void config_from_json(const nlohmann::json& j, RunConfig& cfg);

RunConfig load_run_config(const std::string& path);

// Applies "section.key=value" pairs; values parse as JSON scalars with a
// string fallback. Unknown sections or keys throw ConfigError.
void apply_override(RunConfig& cfg, const std::string& dotted_key,
                    const std::string& value);

}  // namespace golomb
