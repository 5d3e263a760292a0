#include "golomb/config.hpp"

#include <set>

#include "golomb/errors.hpp"
#include "golomb/json_io.hpp"

namespace golomb {
namespace {

// Rejects keys that none of the readers consumed.
void check_known_keys(const nlohmann::json& j, const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (known.find(it.key()) == known.end()) {
      throw ConfigError("unknown config key: " + it.key());
    }
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for config key ") + key + ": " + e.what());
  }
}

}  // namespace

std::string to_string(CategoricalHead head) {
  return head == CategoricalHead::kCls ? "cls" : "pv";
}

CategoricalHead categorical_head_from_string(const std::string& name) {
  if (name == "pv") return CategoricalHead::kPv;
  if (name == "cls") return CategoricalHead::kCls;
  throw ConfigError("categorical_head must be \"pv\" or \"cls\", got \"" + name + "\"");
}

nlohmann::json config_to_json(const EncoderConfig& cfg) {
  return nlohmann::json{
      {"num_layers", cfg.num_layers},     {"hidden_size", cfg.hidden_size},
      {"num_heads", cfg.num_heads},       {"ffn_size", cfg.ffn_size},
      {"max_seq_len", cfg.max_seq_len},   {"dropout", cfg.dropout},
      {"vocab_size", cfg.vocab_size},
  };
}

nlohmann::json config_to_json(const AssemblyConfig& cfg) {
  return nlohmann::json{
      {"max_hist_len", cfg.max_hist_len},
      {"max_intent_len", cfg.max_intent_len},
      {"max_seq_len", cfg.max_seq_len},
      {"use_nld", cfg.use_nld},
      {"use_intents", cfg.use_intents},
      {"categorical_head", to_string(cfg.categorical_head)},
      {"cat_neg_sampling_prob", cfg.cat_neg_sampling_prob},
      {"noncat_neg_sampling_prob", cfg.noncat_neg_sampling_prob},
      {"max_categorical_values", cfg.max_categorical_values},
      {"max_intents", cfg.max_intents},
  };
}

nlohmann::json config_to_json(const DecodingConfig& cfg) {
  return nlohmann::json{{"max_span_len", cfg.max_span_len}};
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
  return nlohmann::json{
      {"learning_rate", cfg.learning_rate},
      {"weight_decay", cfg.weight_decay},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"grad_accum_steps", cfg.grad_accum_steps},
      {"adam_beta1", cfg.adam_beta1},
      {"adam_beta2", cfg.adam_beta2},
      {"adam_eps", cfg.adam_eps},
      {"seed", cfg.seed},
  };
}

nlohmann::json config_to_json(const SynthConfig& cfg) {
  nlohmann::json j{
      {"num_services", cfg.num_services},
      {"unseen_services", cfg.unseen_services},
      {"slots_per_service", cfg.slots_per_service},
      {"categorical_fraction", cfg.categorical_fraction},
      {"values_per_categorical", cfg.values_per_categorical},
      {"intents_per_service", cfg.intents_per_service},
      {"dialogues_per_service", cfg.dialogues_per_service},
      {"turns_per_dialogue", cfg.turns_per_dialogue},
      {"domain_switch_fraction", cfg.domain_switch_fraction},
      {"seed", cfg.seed},
  };
  if (!cfg.description_paraphrase_pool.empty())
    j["description_paraphrase_pool"] = cfg.description_paraphrase_pool;
  return j;
}

void config_from_json(const nlohmann::json& j, EncoderConfig& cfg) {
  check_known_keys(j, {"num_layers", "hidden_size", "num_heads", "ffn_size",
                       "max_seq_len", "dropout", "vocab_size"});
  read_field(j, "num_layers", cfg.num_layers);
  read_field(j, "hidden_size", cfg.hidden_size);
  read_field(j, "num_heads", cfg.num_heads);
  read_field(j, "ffn_size", cfg.ffn_size);
  read_field(j, "max_seq_len", cfg.max_seq_len);
  read_field(j, "dropout", cfg.dropout);
  read_field(j, "vocab_size", cfg.vocab_size);
}

void config_from_json(const nlohmann::json& j, AssemblyConfig& cfg) {
  check_known_keys(j, {"max_hist_len", "max_intent_len", "max_seq_len",
                       "use_nld", "use_intents", "categorical_head",
                       "cat_neg_sampling_prob", "noncat_neg_sampling_prob",
                       "max_categorical_values", "max_intents"});
  read_field(j, "max_hist_len", cfg.max_hist_len);
  read_field(j, "max_intent_len", cfg.max_intent_len);
  read_field(j, "max_seq_len", cfg.max_seq_len);
  read_field(j, "use_nld", cfg.use_nld);
  read_field(j, "use_intents", cfg.use_intents);
  if (j.contains("categorical_head")) {
    std::string name;
    read_field(j, "categorical_head", name);
    cfg.categorical_head = categorical_head_from_string(name);
  }
  read_field(j, "cat_neg_sampling_prob", cfg.cat_neg_sampling_prob);
  read_field(j, "noncat_neg_sampling_prob", cfg.noncat_neg_sampling_prob);
  read_field(j, "max_categorical_values", cfg.max_categorical_values);
  read_field(j, "max_intents", cfg.max_intents);
}

void config_from_json(const nlohmann::json& j, DecodingConfig& cfg) {
  check_known_keys(j, {"max_span_len"});
  read_field(j, "max_span_len", cfg.max_span_len);
}

void config_from_json(const nlohmann::json& j, TrainConfig& cfg) {
  check_known_keys(j, {"learning_rate", "weight_decay", "epochs", "batch_size",
                       "grad_accum_steps", "adam_beta1", "adam_beta2",
                       "adam_eps", "seed"});
  read_field(j, "learning_rate", cfg.learning_rate);
  read_field(j, "weight_decay", cfg.weight_decay);
  read_field(j, "epochs", cfg.epochs);
  read_field(j, "batch_size", cfg.batch_size);
  read_field(j, "grad_accum_steps", cfg.grad_accum_steps);
  read_field(j, "adam_beta1", cfg.adam_beta1);
  read_field(j, "adam_beta2", cfg.adam_beta2);
  read_field(j, "adam_eps", cfg.adam_eps);
  read_field(j, "seed", cfg.seed);
}

void config_from_json(const nlohmann::json& j, SynthConfig& cfg) {
  check_known_keys(j, {"num_services", "unseen_services", "slots_per_service",
                       "categorical_fraction", "values_per_categorical",
                       "intents_per_service", "dialogues_per_service",
                       "turns_per_dialogue", "domain_switch_fraction",
                       "description_paraphrase_pool", "seed"});
  read_field(j, "num_services", cfg.num_services);
  read_field(j, "unseen_services", cfg.unseen_services);
  read_field(j, "slots_per_service", cfg.slots_per_service);
  read_field(j, "categorical_fraction", cfg.categorical_fraction);
  read_field(j, "values_per_categorical", cfg.values_per_categorical);
  read_field(j, "intents_per_service", cfg.intents_per_service);
  read_field(j, "dialogues_per_service", cfg.dialogues_per_service);
  read_field(j, "turns_per_dialogue", cfg.turns_per_dialogue);
  read_field(j, "domain_switch_fraction", cfg.domain_switch_fraction);
  read_field(j, "description_paraphrase_pool", cfg.description_paraphrase_pool);
  read_field(j, "seed", cfg.seed);
}

RunConfig::RunConfig() {
  // The assembled layout (250 history + 50 intents + value region) needs the
  // full BERT-style window, so the encoder default is raised to match.
  encoder.max_seq_len = assembly.max_seq_len;
}

void RunConfig::validate() const {
  EncoderConfig e = encoder;
  if (e.vocab_size == 0) e.vocab_size = 1;  // filled once a vocabulary exists
  e.validate();
  assembly.validate();
  decoding.validate();
  train.validate();
  synth.validate();
  if (encoder.max_seq_len < assembly.max_seq_len)
    throw ConfigError("encoder.max_seq_len must be >= assembly.max_seq_len");
  if (max_vocab_size <= 6)
    throw ConfigError("max_vocab_size must exceed the reserved token count");
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  return nlohmann::json{
      {"encoder", config_to_json(cfg.encoder)},
      {"assembly", config_to_json(cfg.assembly)},
      {"decoding", config_to_json(cfg.decoding)},
      {"train", config_to_json(cfg.train)},
      {"synth", config_to_json(cfg.synth)},
      {"paths",
       {{"schemas", cfg.schemas_path},
        {"dialogues", cfg.dialogues_path},
        {"model_dir", cfg.model_dir},
        {"output_dir", cfg.output_dir}}},
      {"max_vocab_size", cfg.max_vocab_size},
  };
}

void config_from_json(const nlohmann::json& j, RunConfig& cfg) {
  check_known_keys(j, {"encoder", "assembly", "decoding", "train", "synth",
                       "paths", "max_vocab_size"});
  if (j.contains("encoder")) config_from_json(j.at("encoder"), cfg.encoder);
  if (j.contains("assembly")) config_from_json(j.at("assembly"), cfg.assembly);
  if (j.contains("decoding")) config_from_json(j.at("decoding"), cfg.decoding);
  if (j.contains("train")) config_from_json(j.at("train"), cfg.train);
  if (j.contains("synth")) config_from_json(j.at("synth"), cfg.synth);
  if (j.contains("paths")) {
    const nlohmann::json& p = j.at("paths");
    check_known_keys(p, {"schemas", "dialogues", "model_dir", "output_dir"});
    read_field(p, "schemas", cfg.schemas_path);
    read_field(p, "dialogues", cfg.dialogues_path);
    read_field(p, "model_dir", cfg.model_dir);
    read_field(p, "output_dir", cfg.output_dir);
  }
  read_field(j, "max_vocab_size", cfg.max_vocab_size);
}

RunConfig load_run_config(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config file " + path + " is not valid JSON: " + e.what());
  }
  RunConfig cfg;
  config_from_json(j, cfg);
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& dotted_key,
                    const std::string& value) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
    if (!parsed.is_primitive()) parsed = value;
  } catch (const nlohmann::json::exception&) {
    parsed = value;  // bare strings are fine
  }

  auto dot = dotted_key.find('.');
  if (dot == std::string::npos) {
    config_from_json(nlohmann::json{{dotted_key, parsed}}, cfg);
    return;
  }
  std::string section = dotted_key.substr(0, dot);
  std::string key = dotted_key.substr(dot + 1);
  nlohmann::json patch{{key, parsed}};
  if (section == "encoder") {
    config_from_json(patch, cfg.encoder);
  } else if (section == "assembly") {
    config_from_json(patch, cfg.assembly);
  } else if (section == "decoding") {
    config_from_json(patch, cfg.decoding);
  } else if (section == "train") {
    config_from_json(patch, cfg.train);
  } else if (section == "synth") {
    config_from_json(patch, cfg.synth);
  } else if (section == "paths") {
    config_from_json(nlohmann::json{{"paths", patch}}, cfg);
  } else {
    throw ConfigError("unknown config section: " + section);
  }
}

}  // namespace golomb
