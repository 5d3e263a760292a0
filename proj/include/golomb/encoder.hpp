#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "golomb/assembly.hpp"
#include "golomb/rng.hpp"
#include "golomb/tensor.hpp"

namespace golomb {

struct EncoderConfig {
  int num_layers = 2;
  int hidden_size = 64;
  int num_heads = 4;
  int ffn_size = 256;
  int max_seq_len = 384;
  double dropout = 0.1;
  int vocab_size = 0;  // set from the vocabulary before use

  void validate() const;
};

struct EncoderOutput {
  // seq_len x H. Rows at padded positions are materialized but carry no
  // information; heads must only read positions named by the EncoderInput
  // index maps.
  Matrix token_states;
};

// Saved activations of one train-mode forward pass. backward() consumes it.
struct EncoderTape {
  bool recorded = false;
  int active_len = 0;
  Matrix embedding_sum;       // S x H, before layer norm
  Matrix embedded;            // S x H, after layer norm (+ dropout)
  Vector emb_inv_std;         // per row
  Matrix emb_normalized;      // S x H
  Matrix emb_dropout_mask;    // empty when dropout is off

  struct Layer {
    Matrix input;             // S x H
    Matrix q, k, v;           // S x H each
    std::vector<Matrix> probs;         // per head, S x S, post-softmax
    std::vector<Matrix> probs_dropped; // per head, after dropout (or empty)
    std::vector<Matrix> prob_dropout_mask;
    Matrix attn_concat;       // S x H, heads concatenated, before Wo
    Matrix attn_proj;         // S x H, after Wo (+ bias)
    Matrix attn_dropout_mask;
    Matrix ln1_normalized;    // S x H
    Vector ln1_inv_std;
    Matrix ln1_out;           // S x H (FFN input)
    Matrix ffn_pre;           // S x F, before activation
    Matrix ffn_act;           // S x F
    Matrix ffn_proj;          // S x H
    Matrix ffn_dropout_mask;
    Matrix ln2_normalized;
    Vector ln2_inv_std;
  };
  std::vector<Layer> layers;
};

// BERT-style encoder: learned token/position/segment embeddings, post-layer-
// norm blocks, GELU feed-forward, computed in doubles for exact gradient
// checking. Parameters live in an external ParamStore under "encoder.*".
class Encoder {
 public:
  explicit Encoder(EncoderConfig cfg);

  const EncoderConfig& config() const { return cfg_; }

  void register_params(ParamStore& store) const;
  // Weights N(0, 0.02^2); biases and layer-norm offsets zero, gains one.
  void init_params(ParamStore& store, std::uint64_t seed) const;

  // Eval mode: deterministic, no dropout.
  EncoderOutput encode(const EncoderInput& input, const ParamStore& params) const;

  // Train mode: records the tape; dropout uses the provided rng when
  // cfg.dropout > 0.
  EncoderOutput forward(const EncoderInput& input, const ParamStore& params,
                        EncoderTape& tape, Rng* dropout_rng) const;

  // Accumulates parameter gradients into grads (ParamStore layout) and
  // returns nothing else; d_output rows beyond the active length are ignored.
  void backward(const EncoderInput& input, const ParamStore& params,
                const EncoderTape& tape, const Matrix& d_output,
                std::vector<double>& grads) const;

 private:
  EncoderOutput run(const EncoderInput& input, const ParamStore& params,
                    EncoderTape* tape, Rng* dropout_rng) const;

  EncoderConfig cfg_;
};

}  // namespace golomb
