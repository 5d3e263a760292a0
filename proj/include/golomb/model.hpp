#pragma once

#include <cstdint>
#include <string>

#include "golomb/assembly.hpp"
#include "golomb/encoder.hpp"
#include "golomb/heads.hpp"
#include "golomb/tensor.hpp"
#include "golomb/tokenizer.hpp"

namespace golomb {

struct DecodingConfig {
  int max_span_len = 12;

  void validate() const;
};

// Encoder + heads + vocabulary + the configs they were built with. The
// checkpoint directory holds the tensor manifest/blobs, the vocabulary and
// a config echo so a model loads back exactly as trained.
struct Model {
  EncoderConfig encoder_cfg;
  AssemblyConfig assembly_cfg;
  DecodingConfig decoding_cfg;
  Vocabulary vocab;
  Encoder encoder;
  Heads heads;
  ParamStore params;

  Model(EncoderConfig ecfg, AssemblyConfig acfg, DecodingConfig dcfg,
        Vocabulary vocabulary);

  void init_params(std::uint64_t seed);

  HeadOutputs predict(const EncoderInput& input, const SlotSchema& slot) const;

  void save(const std::string& dir) const;
  static Model load(const std::string& dir);
};

}  // namespace golomb
