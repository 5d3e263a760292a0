#include "doctest.h"

#include <cmath>
#include <limits>

#include "golomb/errors.hpp"
#include "golomb/heads.hpp"
#include "golomb/rng.hpp"

using namespace golomb;

namespace {

constexpr int kH = 8;

struct Rig {
  Heads heads;
  ParamStore params;

  explicit Rig(CategoricalHead kind = CategoricalHead::kPv,
               int max_cat_values = 5)
      : heads(HeadsConfig{kH, kind, max_cat_values}) {
    heads.register_params(params);
    params.freeze();
    heads.init_params(params, 21);
  }

  // Makes head "name" compute logit = x[0] (weight picks the first
  // coordinate, bias zero), so candidate embeddings choose the logits.
  void pin_scalar_head(const std::string& name) {
    auto w = params.view("heads." + name + ".w");
    w.setZero();
    w(0, 0) = 1.0;
    params.view("heads." + name + ".b").setZero();
  }
};

Vector embedding(double first_coord) {
  Vector v = Vector::Zero(kH);
  v(0) = first_coord;
  return v;
}

double sum_abs_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().sum();
}

}  // namespace

TEST_CASE("softmax matches the exp/normalize oracle") {
  Vector v(3);
  v << 1, 2, 3;
  Vector s = softmax(v);
  double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(std::abs(s(0) - std::exp(1.0) / z) < 1e-9);
  CHECK(std::abs(s(1) - std::exp(2.0) / z) < 1e-9);
  CHECK(std::abs(s(2) - std::exp(3.0) / z) < 1e-9);

  SUBCASE("uniform logits give the uniform distribution") {
    Vector u = softmax(Vector::Zero(3));
    for (int i = 0; i < 3; ++i) CHECK(u(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }
  SUBCASE("pinned example") {
    Vector w(3);
    w << 2, 0, 0;
    Vector p = softmax(w);
    CHECK(p(0) == doctest::Approx(0.7870).epsilon(1e-3));
    CHECK(p(1) == doctest::Approx(0.1065).epsilon(1e-3));
    CHECK(p(2) == doctest::Approx(0.1065).epsilon(1e-3));
  }
  SUBCASE("shift invariance to 1e-9") {
    Vector a(4);
    a << 0.3, -1.2, 2.5, 0.0;
    Vector b = a.array() + 17.5;
    CHECK(sum_abs_diff(softmax(a), softmax(b)) < 1e-9);
  }
  SUBCASE("-inf logits come out exactly zero") {
    Vector a(3);
    a << 1.0, -std::numeric_limits<double>::infinity(), 0.5;
    Vector p = softmax(a);
    CHECK(p(1) == 0.0);
    CHECK(std::abs(p.sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("linear is exactly Wx + b") {
  ParamStore store;
  store.add("w22", 2, 2);
  store.add("b2", 1, 2);
  store.add("w34", 3, 4);
  store.add("b3", 1, 3);
  store.freeze();

  const ParamStore& cstore = store;
  auto w = store.view("w22");
  w.setIdentity();
  auto b = store.view("b2");
  b(0, 0) = 0.5;
  b(0, 1) = 0.5;
  Vector x(2);
  x << 1, -1;
  Vector y = linear(x, cstore.view("w22"), cstore.view("b2"));
  CHECK(y(0) == 1.5);
  CHECK(y(1) == -0.5);

  SUBCASE("zero weight returns the bias") {
    w.setZero();
    Vector z = linear(x, cstore.view("w22"), cstore.view("b2"));
    CHECK(z(0) == 0.5);
    CHECK(z(1) == 0.5);
  }
  SUBCASE("random case matches the triple-loop oracle") {
    Rng rng(4);
    auto w34 = store.view("w34");
    auto b3 = store.view("b3");
    Vector x4(4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) w34(i, j) = rng.uniform(-1, 1);
    for (int i = 0; i < 3; ++i) b3(0, i) = rng.uniform(-1, 1);
    for (int j = 0; j < 4; ++j) x4(j) = rng.uniform(-1, 1);

    Vector got = linear(x4, cstore.view("w34"), cstore.view("b3"));
    for (int i = 0; i < 3; ++i) {
      double want = b3(0, i);
      for (int j = 0; j < 4; ++j) want += w34(i, j) * x4(j);
      CHECK(got(i) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("slot gate is a 3-way softmax over u_CLS") {
  Rig rig;
  Vector dist = rig.heads.slot_gate(embedding(0.7), rig.params);
  REQUIRE(dist.size() == 3);
  CHECK(std::abs(dist.sum() - 1.0) < 1e-6);
  for (int i = 0; i < 3; ++i) CHECK(dist(i) > 0.0);

  // zeroed gate parameters -> uniform
  rig.params.view("heads.status.w").setZero();
  rig.params.view("heads.status.b").setZero();
  Vector u = rig.heads.slot_gate(embedding(0.7), rig.params);
  for (int i = 0; i < 3; ++i) CHECK(u(i) == doctest::Approx(1.0 / 3));
}

TEST_CASE("categorical filler scores each pv candidate with one scalar") {
  Rig rig;
  rig.pin_scalar_head("cat_slot");

  Matrix candidates(3, kH);
  candidates.setZero();
  candidates(0, 0) = 2.0;  // NONE candidate
  Vector dist = rig.heads.categorical_filler(candidates, rig.params);
  REQUIRE(dist.size() == 3);
  CHECK(dist(0) == doctest::Approx(0.7870).epsilon(1e-3));
  CHECK(dist(1) == doctest::Approx(0.1065).epsilon(1e-3));
  CHECK(dist(2) == doctest::Approx(0.1065).epsilon(1e-3));

  SUBCASE("identical candidate embeddings give a uniform distribution") {
    Matrix same(4, kH);
    same.setOnes();
    Vector d = rig.heads.categorical_filler(same, rig.params);
    for (int i = 0; i < 4; ++i) CHECK(d(i) == doctest::Approx(0.25));
  }
  SUBCASE("k=1 sums to one over {NONE, v1}") {
    Matrix two(2, kH);
    two.setRandom();
    Vector d = rig.heads.categorical_filler(two, rig.params);
    CHECK(d.size() == 2);
    CHECK(std::abs(d.sum() - 1.0) < 1e-6);
  }
  SUBCASE("empty candidate list is rejected") {
    Matrix none(0, kH);
    CHECK_THROWS_AS(rig.heads.categorical_filler(none, rig.params),
                    InternalError);
  }
}

TEST_CASE("CLS categorical filler masks unused candidate positions") {
  Rig rig(CategoricalHead::kCls, 5);

  SUBCASE("masked indices have exactly zero probability") {
    Vector d = rig.heads.cls_categorical_filler(embedding(0.4), 2, rig.params);
    REQUIRE(d.size() == 6);  // m_max + 1, NONE last
    CHECK(d(2) == 0.0);
    CHECK(d(3) == 0.0);
    CHECK(d(4) == 0.0);
    CHECK(d(0) > 0.0);
    CHECK(d(1) > 0.0);
    CHECK(d(5) > 0.0);
    CHECK(std::abs(d.sum() - 1.0) < 1e-6);
  }
  SUBCASE("equal retained logits spread uniformly over k+1 positions") {
    rig.params.view("heads.cls_cat.w").setZero();
    rig.params.view("heads.cls_cat.b").setZero();
    Vector d = rig.heads.cls_categorical_filler(embedding(0.4), 2, rig.params);
    CHECK(d(0) == doctest::Approx(1.0 / 3));
    CHECK(d(1) == doctest::Approx(1.0 / 3));
    CHECK(d(5) == doctest::Approx(1.0 / 3));
  }
  SUBCASE("k = m_max means no masking") {
    Vector d = rig.heads.cls_categorical_filler(embedding(0.4), 5, rig.params);
    for (int i = 0; i < 6; ++i) CHECK(d(i) > 0.0);
  }
  SUBCASE("k beyond capacity is rejected") {
    CHECK_THROWS_AS(
        rig.heads.cls_categorical_filler(embedding(0.4), 6, rig.params),
        DataError);
  }
}

TEST_CASE("free-form filler distributes over history positions only") {
  Rig rig;
  rig.pin_scalar_head("start");
  rig.pin_scalar_head("stop");

  Matrix states(10, kH);
  states.setOnes();
  auto [start, stop] = rig.heads.free_form_filler(states, {2, 6}, rig.params);
  REQUIRE(start.size() == 10);
  REQUIRE(stop.size() == 10);
  for (int p = 0; p < 10; ++p) {
    if (p >= 2 && p < 6) {
      CHECK(start(p) == doctest::Approx(0.25));
      CHECK(stop(p) == doctest::Approx(0.25));
    } else {
      CHECK(start(p) == 0.0);  // outside the history: exactly zero
      CHECK(stop(p) == 0.0);
    }
  }
  CHECK(std::abs(start.sum() - 1.0) < 1e-6);

  SUBCASE("empty history is rejected") {
    CHECK_THROWS_AS(rig.heads.free_form_filler(states, {3, 3}, rig.params),
                    InternalError);
  }
}

TEST_CASE("requested gate is a binary softmax") {
  Rig rig;
  rig.params.view("heads.req_slot.w").setZero();
  rig.params.view("heads.req_slot.b").setZero();
  Vector d = rig.heads.requested_gate(embedding(1.0), rig.params);
  REQUIRE(d.size() == 2);
  CHECK(d(kReqRequested) == doctest::Approx(0.5));
  CHECK(d(kReqNotRequested) == doctest::Approx(0.5));
}

TEST_CASE("intent classifier scores [int] candidates") {
  Rig rig;
  rig.pin_scalar_head("intent");

  SUBCASE("identical embeddings -> uniform") {
    Matrix same(3, kH);
    same.setConstant(0.9);
    Vector d = rig.heads.intent_classifier(same, rig.params);
    for (int i = 0; i < 3; ++i) CHECK(d(i) == doctest::Approx(1.0 / 3));
  }
  SUBCASE("the hottest candidate wins") {
    Matrix cands(3, kH);
    cands.setZero();
    cands(1, 0) = 5.0;
    Vector d = rig.heads.intent_classifier(cands, rig.params);
    CHECK(d(1) > d(0));
    CHECK(d(1) > d(2));
  }
}

TEST_CASE("head gradients match finite differences through CE loss") {
  Rig rig;
  Vector u = embedding(0.0);
  Rng rng(5);
  for (int i = 0; i < kH; ++i) u(i) = rng.uniform(-1, 1);
  const int target = 2;

  auto loss = [&]() {
    Vector d = rig.heads.slot_gate(u, rig.params);
    return -std::log(d(target));
  };

  // analytic: dL/dlogits = p - onehot; dL/dW = (p - y) u^T, dL/db = p - y
  Vector p = rig.heads.slot_gate(u, rig.params);
  Vector dlogits = p;
  dlogits(target) -= 1.0;

  const TensorSpec& wspec = rig.params.spec("heads.status.w");
  const TensorSpec& bspec = rig.params.spec("heads.status.b");
  const double eps = 1e-5;
  double max_rel = 0.0;
  for (int r = 0; r < 3; ++r) {
    for (int cidx = 0; cidx < kH; ++cidx) {
      std::size_t flat = wspec.offset + static_cast<std::size_t>(r * kH + cidx);
      double saved = rig.params.buffer()[flat];
      rig.params.buffer()[flat] = saved + eps;
      double up = loss();
      rig.params.buffer()[flat] = saved - eps;
      double down = loss();
      rig.params.buffer()[flat] = saved;
      double fd = (up - down) / (2 * eps);
      double analytic = dlogits(r) * u(cidx);
      double rel = std::abs(analytic - fd) /
                   std::max({std::abs(analytic), std::abs(fd), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
    std::size_t bflat = bspec.offset + static_cast<std::size_t>(r);
    double saved = rig.params.buffer()[bflat];
    rig.params.buffer()[bflat] = saved + eps;
    double up = loss();
    rig.params.buffer()[bflat] = saved - eps;
    double down = loss();
    rig.params.buffer()[bflat] = saved;
    double fd = (up - down) / (2 * eps);
    double rel = std::abs(dlogits(r) - fd) /
                 std::max({std::abs(dlogits(r)), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("forward emits complete, normalized head outputs") {
  Rig rig;
  EncoderInput in;
  const int seq = 12;
  in.token_ids.assign(seq, 1);
  in.attention_mask.assign(seq, 1);
  in.segment_ids.assign(seq, 0);
  in.cls_index = 0;
  in.history_range = {2, 6};
  in.int_positions = {7, 8};
  in.pv_positions = {9, 10, 11};

  SlotSchema slot{"ride", "kind of ride", true, {"pool", "regular"}};

  Rng rng(17);
  EncoderOutput enc;
  enc.token_states = Matrix(seq, kH);
  for (int r = 0; r < seq; ++r)
    for (int c = 0; c < kH; ++c) enc.token_states(r, c) = rng.uniform(-1, 1);

  HeadOutputs out = rig.heads.forward(enc, in, slot, rig.params);
  CHECK(out.gate_dist.size() == 3);
  CHECK(out.cat_dist.size() == 3);
  CHECK(out.req_dist.size() == 2);
  CHECK(out.intent_dist.size() == 2);
  CHECK(out.start_dist.size() == 0);  // span head only runs for free-form slots
  for (const Vector* d :
       {&out.gate_dist, &out.cat_dist, &out.req_dist, &out.intent_dist}) {
    CHECK(std::abs(d->sum() - 1.0) < 1e-6);
    CHECK(d->minCoeff() >= 0.0);
  }

  SUBCASE("non-categorical slots get span distributions, no cat_dist") {
    SlotSchema free{"dest", "destination", false, {}};
    EncoderInput in2 = in;
    in2.pv_positions.clear();
    HeadOutputs o2 = rig.heads.forward(enc, in2, free, rig.params);
    CHECK(o2.cat_dist.size() == 0);
    CHECK(o2.start_dist.size() == seq);
    // probability mass only inside the history
    for (int p = 0; p < seq; ++p) {
      if (p < 2 || p >= 6) CHECK(o2.start_dist(p) == 0.0);
    }
  }
}
