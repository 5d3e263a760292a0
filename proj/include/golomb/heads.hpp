#pragma once

#include <cstdint>

#include "golomb/assembly.hpp"
#include "golomb/encoder.hpp"
#include "golomb/tensor.hpp"

namespace golomb {

// Slot gate classes, in logit order.
inline constexpr int kGateNone = 0;
inline constexpr int kGateDontcare = 1;
inline constexpr int kGatePtr = 2;

// Requested-slot classes, in logit order.
inline constexpr int kReqRequested = 0;
inline constexpr int kReqNotRequested = 1;

// Numerically safe softmax; -inf logits come out as exactly 0.
Vector softmax(const Vector& logits);

// y = W x + b.
Vector linear(const Vector& x, ConstMatrixMap w, ConstMatrixMap b);

struct HeadsConfig {
  int hidden_size = 64;
  CategoricalHead categorical_head = CategoricalHead::kPv;
  int max_categorical_values = 16;  // CLS-variant capacity
};

struct HeadOutputs {
  Vector gate_dist;    // {none, dontcare, ptr}
  Vector cat_dist;     // PV: k+1 with NONE first; CLS: m+1 with NONE last
  Vector start_dist;   // full sequence length, zero outside the history
  Vector stop_dist;
  Vector req_dist;     // {requested, not_requested}
  Vector intent_dist;  // s+1 with NONE first
};

// Upstream gradients w.r.t. each head's logits; empty vectors mean the head
// contributed no loss term.
struct HeadLogitGrads {
  Vector gate;
  Vector cat;
  Vector start;
  Vector stop;
  Vector req;
  Vector intent;
};

// The five task heads, each a single affine map over encoder rows selected by
// the EncoderInput index maps.
class Heads {
 public:
  explicit Heads(HeadsConfig cfg);

  const HeadsConfig& config() const { return cfg_; }

  void register_params(ParamStore& store) const;
  void init_params(ParamStore& store, std::uint64_t seed) const;

  Vector slot_gate(const Vector& u_cls, const ParamStore& params) const;
  Vector requested_gate(const Vector& u_cls, const ParamStore& params) const;
  // candidates: one row per [pv] position, NONE first.
  Vector categorical_filler(const Matrix& candidates,
                            const ParamStore& params) const;
  // CLS variant: k real values, positions k..m-1 masked to zero probability,
  // NONE at the final index.
  Vector cls_categorical_filler(const Vector& u_cls, int k,
                                const ParamStore& params) const;
  // Start/stop distributions over history positions, zero elsewhere.
  std::pair<Vector, Vector> free_form_filler(const Matrix& token_states,
                                             std::pair<int, int> history_range,
                                             const ParamStore& params) const;
  Vector intent_classifier(const Matrix& candidates,
                           const ParamStore& params) const;

  // Full forward over all heads for one assembled input.
  HeadOutputs forward(const EncoderOutput& enc, const EncoderInput& input,
                      const SlotSchema& slot, const ParamStore& params) const;

  // Routes logit gradients back into head parameters and the encoder rows
  // they read; d_token_states must be pre-sized seq_len x H.
  void backward(const EncoderOutput& enc, const EncoderInput& input,
                const HeadLogitGrads& d_logits, const ParamStore& params,
                std::vector<double>& grads, Matrix& d_token_states) const;

 private:
  HeadsConfig cfg_;
};

}  // namespace golomb
