#include "golomb/heads.hpp"

#include <cmath>
#include <limits>

#include "golomb/errors.hpp"

namespace golomb {

Vector softmax(const Vector& logits) {
  if (logits.size() == 0) throw InternalError("softmax over an empty vector");
  double m = logits.maxCoeff();
  if (!std::isfinite(m))
    throw InternalError("softmax with every logit masked");
  // Scalar exp keeps masked entries exactly 0: Eigen's vectorized exp clamps
  // its argument, mapping -inf to a subnormal instead.
  Vector e(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    e(i) = std::exp(logits(i) - m);
  return e / e.sum();
}

Vector linear(const Vector& x, ConstMatrixMap w, ConstMatrixMap b) {
  if (w.cols() != x.size() || b.cols() != w.rows())
    throw InternalError("linear: shape mismatch");
  return w * x + b.row(0).transpose();
}

Heads::Heads(HeadsConfig cfg) : cfg_(cfg) {
  if (cfg_.hidden_size < 1) throw ConfigError("heads hidden_size must be positive");
  if (cfg_.max_categorical_values < 1)
    throw ConfigError("max_categorical_values must be positive");
}

void Heads::register_params(ParamStore& store) const {
  const int h = cfg_.hidden_size;
  store.add("heads.status.w", 3, h);
  store.add("heads.status.b", 1, 3, false);
  store.add("heads.cat_slot.w", 1, h);
  store.add("heads.cat_slot.b", 1, 1, false);
  store.add("heads.start.w", 1, h);
  store.add("heads.start.b", 1, 1, false);
  store.add("heads.stop.w", 1, h);
  store.add("heads.stop.b", 1, 1, false);
  store.add("heads.req_slot.w", 2, h);
  store.add("heads.req_slot.b", 1, 2, false);
  store.add("heads.intent.w", 1, h);
  store.add("heads.intent.b", 1, 1, false);
  if (cfg_.categorical_head == CategoricalHead::kCls) {
    store.add("heads.cls_cat.w", cfg_.max_categorical_values + 1, h);
    store.add("heads.cls_cat.b", 1, cfg_.max_categorical_values + 1, false);
  }
}

void Heads::init_params(ParamStore& store, std::uint64_t seed) const {
  Rng rng(seed);
  for (const TensorSpec& spec : store.specs()) {
    if (spec.name.rfind("heads.", 0) != 0) continue;
    MatrixMap m = store.view(spec);
    if (spec.name.size() >= 2 &&
        spec.name.compare(spec.name.size() - 2, 2, ".b") == 0) {
      m.setZero();
    } else {
      for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, 0.02);
    }
  }
}

Vector Heads::slot_gate(const Vector& u_cls, const ParamStore& params) const {
  return softmax(linear(u_cls, params.view("heads.status.w"),
                        params.view("heads.status.b")));
}

Vector Heads::requested_gate(const Vector& u_cls,
                             const ParamStore& params) const {
  return softmax(linear(u_cls, params.view("heads.req_slot.w"),
                        params.view("heads.req_slot.b")));
}

namespace {

// Shared shape of the categorical and intent heads: one scalar logit per
// candidate embedding through the same affine map.
Vector per_candidate_logits(const Matrix& candidates, ConstMatrixMap w,
                            ConstMatrixMap b) {
  Vector logits(candidates.rows());
  for (int i = 0; i < candidates.rows(); ++i)
    logits(i) = w.row(0).dot(candidates.row(i)) + b(0, 0);
  return logits;
}

}  // namespace

Vector Heads::categorical_filler(const Matrix& candidates,
                                 const ParamStore& params) const {
  if (candidates.rows() < 2)
    throw InternalError("categorical_filler needs NONE plus >= 1 candidate");
  return softmax(per_candidate_logits(candidates,
                                      params.view("heads.cat_slot.w"),
                                      params.view("heads.cat_slot.b")));
}

Vector Heads::cls_categorical_filler(const Vector& u_cls, int k,
                                     const ParamStore& params) const {
  const int m = cfg_.max_categorical_values;
  if (k < 1 || k > m)
    throw DataError("categorical slot has " + std::to_string(k) +
                    " values, the CLS filler supports at most " +
                    std::to_string(m));
  Vector logits = linear(u_cls, params.view("heads.cls_cat.w"),
                         params.view("heads.cls_cat.b"));
  // Candidates are value_0..value_{k-1} plus NONE at the last position;
  // unused positions get zero probability.
  for (int i = k; i < m; ++i)
    logits(i) = -std::numeric_limits<double>::infinity();
  return softmax(logits);
}

std::pair<Vector, Vector> Heads::free_form_filler(
    const Matrix& token_states, std::pair<int, int> history_range,
    const ParamStore& params) const {
  const auto [begin, end] = history_range;
  if (begin >= end) throw InternalError("free_form_filler: empty history");
  const int seq_len = static_cast<int>(token_states.rows());
  Vector start_logits =
      Vector::Constant(seq_len, -std::numeric_limits<double>::infinity());
  Vector stop_logits = start_logits;
  ConstMatrixMap ws = params.view("heads.start.w");
  ConstMatrixMap bs = params.view("heads.start.b");
  ConstMatrixMap we = params.view("heads.stop.w");
  ConstMatrixMap be = params.view("heads.stop.b");
  for (int i = begin; i < end; ++i) {
    start_logits(i) = ws.row(0).dot(token_states.row(i)) + bs(0, 0);
    stop_logits(i) = we.row(0).dot(token_states.row(i)) + be(0, 0);
  }
  return {softmax(start_logits), softmax(stop_logits)};
}

Vector Heads::intent_classifier(const Matrix& candidates,
                                const ParamStore& params) const {
  if (candidates.rows() < 1)
    throw InternalError("intent_classifier with no candidates");
  return softmax(per_candidate_logits(candidates, params.view("heads.intent.w"),
                                      params.view("heads.intent.b")));
}

namespace {

Matrix gather_rows(const Matrix& states, const std::vector<int>& positions) {
  Matrix out(static_cast<int>(positions.size()), states.cols());
  for (size_t i = 0; i < positions.size(); ++i)
    out.row(static_cast<int>(i)) = states.row(positions[i]);
  return out;
}

}  // namespace

HeadOutputs Heads::forward(const EncoderOutput& enc, const EncoderInput& input,
                           const SlotSchema& slot,
                           const ParamStore& params) const {
  HeadOutputs out;
  Vector u_cls = enc.token_states.row(input.cls_index).transpose();
  out.gate_dist = slot_gate(u_cls, params);
  out.req_dist = requested_gate(u_cls, params);
  if (!input.int_positions.empty())
    out.intent_dist = intent_classifier(
        gather_rows(enc.token_states, input.int_positions), params);
  if (slot.is_categorical) {
    if (cfg_.categorical_head == CategoricalHead::kPv) {
      if (input.pv_positions.empty())
        throw InternalError("PV head requires pv_positions in the input");
      out.cat_dist = categorical_filler(
          gather_rows(enc.token_states, input.pv_positions), params);
    } else {
      out.cat_dist = cls_categorical_filler(
          u_cls, static_cast<int>(slot.possible_values.size()), params);
    }
  } else {
    auto [start, stop] =
        free_form_filler(enc.token_states, input.history_range, params);
    out.start_dist = std::move(start);
    out.stop_dist = std::move(stop);
  }
  return out;
}

void Heads::backward(const EncoderOutput& enc, const EncoderInput& input,
                     const HeadLogitGrads& d_logits, const ParamStore& params,
                     std::vector<double>& grads, Matrix& d_token_states) const {
  const Vector u_cls = enc.token_states.row(input.cls_index).transpose();
  auto grad_view = [&](const std::string& name) {
    return params.view_in(grads, name);
  };
  auto affine_back = [&](const Vector& d_y, const Vector& x,
                         const std::string& w_name, const std::string& b_name,
                         int row) {
    grad_view(w_name) += d_y * x.transpose();
    grad_view(b_name).row(0) += d_y.transpose();
    d_token_states.row(row) +=
        (params.view(w_name).transpose() * d_y).transpose();
  };

  if (d_logits.gate.size() > 0)
    affine_back(d_logits.gate, u_cls, "heads.status.w", "heads.status.b",
                input.cls_index);
  if (d_logits.req.size() > 0)
    affine_back(d_logits.req, u_cls, "heads.req_slot.w", "heads.req_slot.b",
                input.cls_index);

  if (d_logits.intent.size() > 0) {
    MatrixMap dw = grad_view("heads.intent.w");
    MatrixMap db = grad_view("heads.intent.b");
    ConstMatrixMap w = params.view("heads.intent.w");
    for (size_t i = 0; i < input.int_positions.size(); ++i) {
      double g = d_logits.intent(static_cast<int>(i));
      int pos = input.int_positions[i];
      dw.row(0) += g * enc.token_states.row(pos);
      db(0, 0) += g;
      d_token_states.row(pos) += g * w.row(0);
    }
  }

  if (d_logits.cat.size() > 0) {
    if (cfg_.categorical_head == CategoricalHead::kPv) {
      MatrixMap dw = grad_view("heads.cat_slot.w");
      MatrixMap db = grad_view("heads.cat_slot.b");
      ConstMatrixMap w = params.view("heads.cat_slot.w");
      for (size_t i = 0; i < input.pv_positions.size(); ++i) {
        double g = d_logits.cat(static_cast<int>(i));
        int pos = input.pv_positions[i];
        dw.row(0) += g * enc.token_states.row(pos);
        db(0, 0) += g;
        d_token_states.row(pos) += g * w.row(0);
      }
    } else {
      affine_back(d_logits.cat, u_cls, "heads.cls_cat.w", "heads.cls_cat.b",
                  input.cls_index);
    }
  }

  auto span_back = [&](const Vector& d_y, const std::string& w_name,
                       const std::string& b_name) {
    if (d_y.size() == 0) return;
    MatrixMap dw = grad_view(w_name);
    MatrixMap db = grad_view(b_name);
    ConstMatrixMap w = params.view(w_name);
    for (int i = input.history_range.first; i < input.history_range.second; ++i) {
      double g = d_y(i);
      if (g == 0.0) continue;
      dw.row(0) += g * enc.token_states.row(i);
      db(0, 0) += g;
      d_token_states.row(i) += g * w.row(0);
    }
  };
  span_back(d_logits.start, "heads.start.w", "heads.start.b");
  span_back(d_logits.stop, "heads.stop.w", "heads.stop.b");
}

}  // namespace golomb
