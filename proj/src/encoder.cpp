#include "golomb/encoder.hpp"

#include <cmath>
#include <limits>

#include "golomb/errors.hpp"

namespace golomb {

namespace {

constexpr double kLnEps = 1e-12;
constexpr int kNumSegments = 4;

std::string layer_prefix(int layer) {
  return "encoder.layer" + std::to_string(layer) + ".";
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Row-wise layer norm. Returns y; fills normalized and inv_std for backward.
Matrix layer_norm(const Matrix& x, ConstMatrixMap gain, ConstMatrixMap bias,
                  Matrix& normalized, Vector& inv_std) {
  const int rows = static_cast<int>(x.rows());
  const int cols = static_cast<int>(x.cols());
  normalized.resize(rows, cols);
  inv_std.resize(rows);
  Matrix y(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().mean();
    double is = 1.0 / std::sqrt(var + kLnEps);
    inv_std(r) = is;
    normalized.row(r) = (x.row(r).array() - mean) * is;
    y.row(r) = normalized.row(r).cwiseProduct(gain.row(0)) + bias.row(0);
  }
  return y;
}

// d_x from d_y; accumulates gain/bias gradients.
Matrix layer_norm_backward(const Matrix& d_y, const Matrix& normalized,
                           const Vector& inv_std, ConstMatrixMap gain,
                           MatrixMap d_gain, MatrixMap d_bias) {
  const int rows = static_cast<int>(d_y.rows());
  const int cols = static_cast<int>(d_y.cols());
  Matrix d_x(rows, cols);
  for (int r = 0; r < rows; ++r) {
    d_gain.row(0) += d_y.row(r).cwiseProduct(normalized.row(r));
    d_bias.row(0) += d_y.row(r);
    Eigen::RowVectorXd d_norm = d_y.row(r).cwiseProduct(gain.row(0));
    double mean_dn = d_norm.mean();
    double mean_dn_xhat = d_norm.cwiseProduct(normalized.row(r)).mean();
    d_x.row(r) =
        inv_std(r) * (d_norm.array() - mean_dn -
                      normalized.row(r).array() * mean_dn_xhat)
            .matrix();
  }
  return d_x;
}

// In-place inverted dropout; returns the keep mask scaled by 1/(1-p).
Matrix apply_dropout(Matrix& x, double p, Rng& rng) {
  Matrix mask(x.rows(), x.cols());
  const double scale = 1.0 / (1.0 - p);
  for (int r = 0; r < x.rows(); ++r)
    for (int c = 0; c < x.cols(); ++c)
      mask(r, c) = rng.uniform() < p ? 0.0 : scale;
  x = x.cwiseProduct(mask);
  return mask;
}

}  // namespace

void EncoderConfig::validate() const {
  if (num_layers < 1) throw ConfigError("encoder num_layers must be >= 1");
  if (hidden_size < 1 || num_heads < 1)
    throw ConfigError("encoder hidden_size and num_heads must be positive");
  if (hidden_size % num_heads != 0)
    throw ConfigError("hidden_size " + std::to_string(hidden_size) +
                      " is not divisible by num_heads " +
                      std::to_string(num_heads));
  if (ffn_size < 1) throw ConfigError("encoder ffn_size must be positive");
  if (max_seq_len < 1) throw ConfigError("encoder max_seq_len must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("encoder dropout must lie in [0, 1)");
  if (vocab_size <= 0)
    throw ConfigError("encoder vocab_size must be set before use");
}

Encoder::Encoder(EncoderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Encoder::register_params(ParamStore& store) const {
  const int h = cfg_.hidden_size;
  store.add("encoder.emb.token", cfg_.vocab_size, h);
  store.add("encoder.emb.position", cfg_.max_seq_len, h);
  store.add("encoder.emb.segment", kNumSegments, h);
  store.add("encoder.emb.ln.gain", 1, h, /*weight_decay=*/false);
  store.add("encoder.emb.ln.bias", 1, h, /*weight_decay=*/false);
  for (int l = 0; l < cfg_.num_layers; ++l) {
    const std::string p = layer_prefix(l);
    store.add(p + "attn.wq", h, h);
    store.add(p + "attn.bq", 1, h, false);
    store.add(p + "attn.wk", h, h);
    store.add(p + "attn.bk", 1, h, false);
    store.add(p + "attn.wv", h, h);
    store.add(p + "attn.bv", 1, h, false);
    store.add(p + "attn.wo", h, h);
    store.add(p + "attn.bo", 1, h, false);
    store.add(p + "ln1.gain", 1, h, false);
    store.add(p + "ln1.bias", 1, h, false);
    store.add(p + "ffn.w1", h, cfg_.ffn_size);
    store.add(p + "ffn.b1", 1, cfg_.ffn_size, false);
    store.add(p + "ffn.w2", cfg_.ffn_size, h);
    store.add(p + "ffn.b2", 1, h, false);
    store.add(p + "ln2.gain", 1, h, false);
    store.add(p + "ln2.bias", 1, h, false);
  }
}

void Encoder::init_params(ParamStore& store, std::uint64_t seed) const {
  Rng rng(seed);
  for (const TensorSpec& spec : store.specs()) {
    if (spec.name.rfind("encoder.", 0) != 0) continue;
    MatrixMap m = store.view(spec);
    bool is_gain = spec.name.find(".ln") != std::string::npos &&
                   spec.name.find(".gain") != std::string::npos;
    bool is_bias_like = spec.rows == 1 || is_gain;
    if (is_gain) {
      m.setOnes();
    } else if (is_bias_like) {
      m.setZero();
    } else {
      for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, 0.02);
    }
  }
}

EncoderOutput Encoder::encode(const EncoderInput& input,
                              const ParamStore& params) const {
  return run(input, params, nullptr, nullptr);
}

EncoderOutput Encoder::forward(const EncoderInput& input,
                               const ParamStore& params, EncoderTape& tape,
                               Rng* dropout_rng) const {
  return run(input, params, &tape, dropout_rng);
}

EncoderOutput Encoder::run(const EncoderInput& input, const ParamStore& params,
                           EncoderTape* tape, Rng* dropout_rng) const {
  if (input.seq_len() > cfg_.max_seq_len)
    throw DataError("input sequence length " + std::to_string(input.seq_len()) +
                    " exceeds encoder max_seq_len " +
                    std::to_string(cfg_.max_seq_len));
  const int h = cfg_.hidden_size;
  const int heads = cfg_.num_heads;
  const int dh = h / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  // Trailing padding carries no information and is skipped entirely; interior
  // padding stays in range and is handled by the attention mask.
  const int S = std::max(input.active_len(), 1);
  const bool use_dropout =
      tape != nullptr && cfg_.dropout > 0.0 && dropout_rng != nullptr;

  if (tape) {
    tape->recorded = true;
    tape->active_len = S;
    tape->layers.assign(static_cast<size_t>(cfg_.num_layers), {});
  }

  ConstMatrixMap tok = params.view("encoder.emb.token");
  ConstMatrixMap pos = params.view("encoder.emb.position");
  ConstMatrixMap seg = params.view("encoder.emb.segment");

  Matrix x(S, h);
  for (int i = 0; i < S; ++i) {
    int id = input.token_ids[static_cast<size_t>(i)];
    if (id < 0 || id >= cfg_.vocab_size)
      throw DataError("token id " + std::to_string(id) +
                      " outside the encoder vocabulary");
    x.row(i) = tok.row(id) + pos.row(i) +
               seg.row(input.segment_ids[static_cast<size_t>(i)]);
  }
  if (tape) tape->embedding_sum = x;

  {
    Matrix normalized;
    Vector inv_std;
    x = layer_norm(x, params.view("encoder.emb.ln.gain"),
                   params.view("encoder.emb.ln.bias"), normalized, inv_std);
    if (tape) {
      tape->emb_normalized = std::move(normalized);
      tape->emb_inv_std = std::move(inv_std);
    }
  }
  if (use_dropout) tape->emb_dropout_mask = apply_dropout(x, cfg_.dropout, *dropout_rng);
  if (tape) tape->embedded = x;

  // Additive key bias: -inf on padded positions removes them from every
  // softmax, so masked positions are attended by nothing.
  Eigen::RowVectorXd key_bias = Eigen::RowVectorXd::Zero(S);
  for (int i = 0; i < S; ++i)
    if (!input.attention_mask[static_cast<size_t>(i)])
      key_bias(i) = -std::numeric_limits<double>::infinity();

  for (int l = 0; l < cfg_.num_layers; ++l) {
    const std::string p = layer_prefix(l);
    EncoderTape::Layer* lt = tape ? &tape->layers[static_cast<size_t>(l)] : nullptr;
    if (lt) lt->input = x;

    Matrix q = (x * params.view(p + "attn.wq")).rowwise() +
               params.view(p + "attn.bq").row(0);
    Matrix k = (x * params.view(p + "attn.wk")).rowwise() +
               params.view(p + "attn.bk").row(0);
    Matrix v = (x * params.view(p + "attn.wv")).rowwise() +
               params.view(p + "attn.bv").row(0);
    if (lt) {
      lt->q = q;
      lt->k = k;
      lt->v = v;
      lt->probs.resize(static_cast<size_t>(heads));
      lt->probs_dropped.resize(static_cast<size_t>(heads));
      lt->prob_dropout_mask.resize(static_cast<size_t>(heads));
    }

    Matrix attn_concat(S, h);
    for (int head = 0; head < heads; ++head) {
      auto qh = q.middleCols(head * dh, dh);
      auto kh = k.middleCols(head * dh, dh);
      auto vh = v.middleCols(head * dh, dh);
      Matrix scores = (qh * kh.transpose()) * inv_sqrt_dh;
      scores.rowwise() += key_bias;
      // Row softmax with max subtraction; fully masked columns become 0.
      Matrix probs(S, S);
      for (int r = 0; r < S; ++r) {
        double m = scores.row(r).maxCoeff();
        if (!std::isfinite(m)) {  // every key masked; row is never read
          probs.row(r).setZero();
          continue;
        }
        // Scalar exp: Eigen's vectorized exp clamps its argument and turns
        // exp(-inf) into a subnormal instead of 0, leaking masked keys.
        Eigen::RowVectorXd e(S);
        for (int c = 0; c < S; ++c) e(c) = std::exp(scores(r, c) - m);
        probs.row(r) = e / e.sum();
      }
      Matrix probs_used = probs;
      Matrix prob_mask;
      if (use_dropout)
        prob_mask = apply_dropout(probs_used, cfg_.dropout, *dropout_rng);
      attn_concat.middleCols(head * dh, dh) = probs_used * vh;
      if (lt) {
        lt->probs[static_cast<size_t>(head)] = std::move(probs);
        lt->probs_dropped[static_cast<size_t>(head)] = std::move(probs_used);
        lt->prob_dropout_mask[static_cast<size_t>(head)] = std::move(prob_mask);
      }
    }
    if (lt) lt->attn_concat = attn_concat;

    Matrix attn_proj = (attn_concat * params.view(p + "attn.wo")).rowwise() +
                       params.view(p + "attn.bo").row(0);
    if (lt) lt->attn_proj = attn_proj;
    if (use_dropout)
      lt->attn_dropout_mask = apply_dropout(attn_proj, cfg_.dropout, *dropout_rng);

    Matrix z1 = x + attn_proj;
    Matrix ln1_normalized;
    Vector ln1_inv_std;
    Matrix u = layer_norm(z1, params.view(p + "ln1.gain"),
                          params.view(p + "ln1.bias"), ln1_normalized,
                          ln1_inv_std);
    if (lt) {
      lt->ln1_normalized = std::move(ln1_normalized);
      lt->ln1_inv_std = std::move(ln1_inv_std);
      lt->ln1_out = u;
    }

    Matrix ffn_pre = (u * params.view(p + "ffn.w1")).rowwise() +
                     params.view(p + "ffn.b1").row(0);
    Matrix ffn_act = ffn_pre.unaryExpr([](double s) { return gelu(s); });
    Matrix ffn_proj = (ffn_act * params.view(p + "ffn.w2")).rowwise() +
                      params.view(p + "ffn.b2").row(0);
    if (lt) {
      lt->ffn_pre = std::move(ffn_pre);
      lt->ffn_act = std::move(ffn_act);
      lt->ffn_proj = ffn_proj;
    }
    if (use_dropout)
      lt->ffn_dropout_mask = apply_dropout(ffn_proj, cfg_.dropout, *dropout_rng);

    Matrix z2 = u + ffn_proj;
    Matrix ln2_normalized;
    Vector ln2_inv_std;
    x = layer_norm(z2, params.view(p + "ln2.gain"), params.view(p + "ln2.bias"),
                   ln2_normalized, ln2_inv_std);
    if (lt) {
      lt->ln2_normalized = std::move(ln2_normalized);
      lt->ln2_inv_std = std::move(ln2_inv_std);
    }
  }

  EncoderOutput out;
  out.token_states = Matrix::Zero(input.seq_len(), h);
  out.token_states.topRows(S) = x;
  if (!out.token_states.allFinite())
    throw InternalError("encoder produced non-finite activations");
  return out;
}

void Encoder::backward(const EncoderInput& input, const ParamStore& params,
                       const EncoderTape& tape, const Matrix& d_output,
                       std::vector<double>& grads) const {
  if (!tape.recorded)
    throw InternalError("encoder backward called without a recorded forward");
  const int h = cfg_.hidden_size;
  const int heads = cfg_.num_heads;
  const int dh = h / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const int S = tape.active_len;

  auto grad_view = [&](const std::string& name) {
    return params.view_in(grads, name);
  };

  Matrix d_x = d_output.topRows(S);

  for (int l = cfg_.num_layers - 1; l >= 0; --l) {
    const std::string p = layer_prefix(l);
    const EncoderTape::Layer& lt = tape.layers[static_cast<size_t>(l)];

    // ln2: z2 = u + ffn_proj_dropped
    Matrix d_z2 = layer_norm_backward(d_x, lt.ln2_normalized, lt.ln2_inv_std,
                                      params.view(p + "ln2.gain"),
                                      grad_view(p + "ln2.gain"),
                                      grad_view(p + "ln2.bias"));
    Matrix d_u = d_z2;
    Matrix d_ffn_proj = d_z2;
    if (lt.ffn_dropout_mask.size() > 0)
      d_ffn_proj = d_ffn_proj.cwiseProduct(lt.ffn_dropout_mask);

    grad_view(p + "ffn.w2") += lt.ffn_act.transpose() * d_ffn_proj;
    grad_view(p + "ffn.b2").row(0) += d_ffn_proj.colwise().sum();
    Matrix d_act = d_ffn_proj * params.view(p + "ffn.w2").transpose();
    Matrix d_pre =
        d_act.cwiseProduct(lt.ffn_pre.unaryExpr([](double s) { return gelu_grad(s); }));
    grad_view(p + "ffn.w1") += lt.ln1_out.transpose() * d_pre;
    grad_view(p + "ffn.b1").row(0) += d_pre.colwise().sum();
    d_u += d_pre * params.view(p + "ffn.w1").transpose();

    // ln1: z1 = x + attn_proj_dropped
    Matrix d_z1 = layer_norm_backward(d_u, lt.ln1_normalized, lt.ln1_inv_std,
                                      params.view(p + "ln1.gain"),
                                      grad_view(p + "ln1.gain"),
                                      grad_view(p + "ln1.bias"));
    Matrix d_input = d_z1;
    Matrix d_attn_proj = d_z1;
    if (lt.attn_dropout_mask.size() > 0)
      d_attn_proj = d_attn_proj.cwiseProduct(lt.attn_dropout_mask);

    grad_view(p + "attn.wo") += lt.attn_concat.transpose() * d_attn_proj;
    grad_view(p + "attn.bo").row(0) += d_attn_proj.colwise().sum();
    Matrix d_attn_concat = d_attn_proj * params.view(p + "attn.wo").transpose();

    Matrix d_q = Matrix::Zero(S, h);
    Matrix d_k = Matrix::Zero(S, h);
    Matrix d_v = Matrix::Zero(S, h);
    for (int head = 0; head < heads; ++head) {
      auto d_oh = d_attn_concat.middleCols(head * dh, dh);
      const Matrix& probs = lt.probs[static_cast<size_t>(head)];
      const Matrix& probs_used = lt.probs_dropped[static_cast<size_t>(head)];
      auto vh = lt.v.middleCols(head * dh, dh);

      Matrix d_probs_used = d_oh * vh.transpose();
      d_v.middleCols(head * dh, dh) = probs_used.transpose() * d_oh;
      Matrix d_probs = d_probs_used;
      const Matrix& mask = lt.prob_dropout_mask[static_cast<size_t>(head)];
      if (mask.size() > 0) d_probs = d_probs.cwiseProduct(mask);

      // softmax backward: dS = P .* (dP - rowsum(dP .* P))
      Matrix d_scores(S, S);
      for (int r = 0; r < S; ++r) {
        double dot = d_probs.row(r).cwiseProduct(probs.row(r)).sum();
        d_scores.row(r) =
            (probs.row(r).array() * (d_probs.row(r).array() - dot)).matrix();
      }
      d_scores *= inv_sqrt_dh;

      auto qh = lt.q.middleCols(head * dh, dh);
      auto kh = lt.k.middleCols(head * dh, dh);
      d_q.middleCols(head * dh, dh) = d_scores * kh;
      d_k.middleCols(head * dh, dh) = d_scores.transpose() * qh;
    }

    grad_view(p + "attn.wq") += lt.input.transpose() * d_q;
    grad_view(p + "attn.bq").row(0) += d_q.colwise().sum();
    grad_view(p + "attn.wk") += lt.input.transpose() * d_k;
    grad_view(p + "attn.bk").row(0) += d_k.colwise().sum();
    grad_view(p + "attn.wv") += lt.input.transpose() * d_v;
    grad_view(p + "attn.bv").row(0) += d_v.colwise().sum();
    d_input += d_q * params.view(p + "attn.wq").transpose();
    d_input += d_k * params.view(p + "attn.wk").transpose();
    d_input += d_v * params.view(p + "attn.wv").transpose();

    d_x = std::move(d_input);
  }

  if (tape.emb_dropout_mask.size() > 0)
    d_x = d_x.cwiseProduct(tape.emb_dropout_mask);
  Matrix d_emb_sum = layer_norm_backward(
      d_x, tape.emb_normalized, tape.emb_inv_std,
      params.view("encoder.emb.ln.gain"), grad_view("encoder.emb.ln.gain"),
      grad_view("encoder.emb.ln.bias"));

  MatrixMap d_tok = grad_view("encoder.emb.token");
  MatrixMap d_pos = grad_view("encoder.emb.position");
  MatrixMap d_seg = grad_view("encoder.emb.segment");
  for (int i = 0; i < S; ++i) {
    d_tok.row(input.token_ids[static_cast<size_t>(i)]) += d_emb_sum.row(i);
    d_pos.row(i) += d_emb_sum.row(i);
    d_seg.row(input.segment_ids[static_cast<size_t>(i)]) += d_emb_sum.row(i);
  }
}

}  // namespace golomb
