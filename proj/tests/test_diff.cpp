// Copyright 2026 The rtgae Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "rtgae/diff.hpp"

using namespace rtgae;

namespace {

// Reduces a vector to a scalar with fixed random weights so every output
// coordinate gets a distinct adjoint.
Var weighted_sum(Var y, std::uint64_t seed = 99) {
  Rng rng(seed);
  Vector w(y.size());
  for (auto& v : w) v = rng.uniform(-1, 1);
  return sum(mul(y, y.tape->constant(w)));
}

ParamId vec_param(ParamStore& s, const std::string& name, Eigen::Index n, Rng& rng,
                  double lo = -1, double hi = 1) {
  Matrix m(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) m(i, 0) = rng.uniform(lo, hi);
  return s.add(name, m);
}

double check(ParamStore& store, const std::function<Var(Tape&)>& build) {
  LossFunction fn = [&](ParamStore& s, bool backward) {
    Tape tape(s);
    Var l = build(tape);
    if (backward) tape.backward(l, s);
    return scalar(l);
  };
  return grad_check(fn, store).max_relative_error;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rtgae_test_diff_" + name);
}

}  // namespace

TEST_CASE("affine forward examples") {
  ParamStore s;
  auto I = s.add("I", Matrix::Identity(2, 2));
  auto Z = s.add("Z", Matrix::Zero(2, 2));
  auto b0 = s.add("b0", Matrix::Zero(2, 1));
  auto b34 = s.add("b34", Matrix(Vector{{3.0, 4.0}}));
  Tape t(s);
  Var x = t.constant(Vector{{1.0, 2.0}});
  CHECK(affine(I, x, b0).value() == Vector{{1.0, 2.0}});
  CHECK(affine(Z, t.constant(Vector{{-7.0, 0.5}}), b34).value() == Vector{{3.0, 4.0}});
  CHECK_THROWS_AS(affine(I, t.constant(Vector::Zero(3)), b0), std::invalid_argument);
}

TEST_CASE("affine gradient matches finite differences on a random 4x4 case") {
  Rng rng(1);
  ParamStore s;
  auto W = s.add("W", uniform_matrix(4, 4, 1.0, rng));
  auto b = vec_param(s, "b", 4, rng);
  auto x = vec_param(s, "x", 4, rng);
  CHECK(check(s, [&](Tape& t) { return weighted_sum(affine(W, t.param(x), b)); }) < 1e-6);
}

TEST_CASE("tanh values and composite gradient") {
  ParamStore s;
  auto z = s.add("z", Matrix::Zero(1, 1));
  {
    Tape t(s);
    Var y = tanh(t.param(z));
    CHECK(scalar(y) == 0.0);
    t.backward(sum(y), s);
    CHECK(s[z].grad(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  Rng rng(2);
  ParamStore c;
  auto W = c.add("W", uniform_matrix(5, 3, 1.0, rng));
  auto b = vec_param(c, "b", 5, rng);
  auto x = vec_param(c, "x", 3, rng);
  CHECK(check(c, [&](Tape& t) { return weighted_sum(tanh(affine(W, t.param(x), b))); }) < 1e-6);
}

TEST_CASE("every primitive matches finite differences on random inputs") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    ParamStore s;
    auto x = vec_param(s, "x", 6, rng);
    auto y = vec_param(s, "y", 6, rng);
    auto pos = vec_param(s, "pos", 6, rng, 0.2, 1.0);
    auto W = s.add("W", uniform_matrix(6, 6, 1.0, rng));
    auto b = vec_param(s, "b", 6, rng);

    std::vector<std::pair<const char*, std::function<Var(Tape&)>>> cases{
        {"add", [&](Tape& t) { return weighted_sum(t.param(x) + t.param(y)); }},
        {"sub", [&](Tape& t) { return weighted_sum(t.param(x) - t.param(y)); }},
        {"mul", [&](Tape& t) { return weighted_sum(mul(t.param(x), t.param(y))); }},
        {"scale", [&](Tape& t) { return weighted_sum(scale(t.param(x), -2.5)); }},
        {"tanh", [&](Tape& t) { return weighted_sum(tanh(t.param(x))); }},
        {"sigmoid", [&](Tape& t) { return weighted_sum(sigmoid(t.param(x))); }},
        {"exp", [&](Tape& t) { return weighted_sum(exp(t.param(x))); }},
        {"log", [&](Tape& t) { return weighted_sum(log(t.param(pos))); }},
        {"square", [&](Tape& t) { return weighted_sum(square(t.param(x))); }},
        {"matvec", [&](Tape& t) { return weighted_sum(matvec(W, t.param(x))); }},
        {"affine", [&](Tape& t) { return weighted_sum(affine(W, t.param(x), b)); }},
        {"sum", [&](Tape& t) { return square(sum(t.param(x))); }},
        {"softmax_xent", [&](Tape& t) { return softmax_xent(t.param(x), seed % 6); }},
        {"shared input", [&](Tape& t) {
           Var v = t.param(x);
           return weighted_sum(mul(tanh(v), v) + square(v));
         }},
    };
    for (auto& [name, fn] : cases) {
      INFO(name << " seed " << seed);
      CHECK(check(s, fn) < 1e-4);
    }
  }
}

TEST_CASE("softmax_xent") {
  ParamStore s;
  Tape t(s);
  CHECK(scalar(softmax_xent(t.constant(Vector::Constant(5, 0.3)), 2)) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-15));

  // exact value is log(1 + e^-1000), far below double resolution
  Var big = softmax_xent(t.constant(Vector{{1000.0, 0.0}}), 0);
  CHECK(std::isfinite(scalar(big)));
  CHECK(scalar(big) == 0.0);
  CHECK(scalar(softmax_xent(t.constant(Vector{{1000.0, 0.0}}), 1)) == doctest::Approx(1000.0));

  SUBCASE("gradient sums to zero") {
    Rng rng(3);
    ParamStore p;
    auto l = vec_param(p, "l", 7, rng, -3, 3);
    Tape tp(p);
    tp.backward(softmax_xent(tp.param(l), 4), p);
    CHECK(std::abs(p[l].grad.sum()) < 1e-15);
    CHECK(p[l].grad(4, 0) < 0);
  }

  SUBCASE("translation invariance") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      Vector l(6);
      for (auto& v : l) v = rng.uniform(-5, 5);
      double c = rng.uniform(-100, 100);
      std::size_t i = rng.index(6);
      double a = scalar(softmax_xent(t.constant(l), i));
      double b = scalar(softmax_xent(t.constant((l.array() + c).matrix()), i));
      CHECK(std::abs(a - b) < 1e-12);
    }
  }

  CHECK_THROWS_AS(softmax_xent(t.constant(Vector::Zero(3)), 3), std::out_of_range);
}

TEST_CASE("gru_cell") {
  const Eigen::Index n = 8;
  Rng rng(5);
  ParamStore s;
  GruParams g = add_gru(s, "gru", n, rng);
  for (auto& p : s) p.value.setZero();
  Vector h(n), in(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h[i] = rng.uniform(-1, 1);
    in[i] = rng.uniform(-1, 1);
  }

  SUBCASE("zero parameters halve the state") {
    Tape t(s);
    Vector out = gru_cell(g, t.constant(h), t.constant(in)).value();
    CHECK((out - h / 2).cwiseAbs().maxCoeff() < 1e-15);
  }

  SUBCASE("saturated update gate keeps the state") {
    Rng r2(6);
    for (auto& p : s) p.value = uniform_matrix(p.value.rows(), p.value.cols(), 1.0, r2);
    s[g.b_update].value.setConstant(-20.0);
    Tape t(s);
    Vector out = gru_cell(g, t.constant(h), t.constant(in)).value();
    CHECK((out - h).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("gradient check on a random 8-dim case") {
    Rng r2(7);
    for (auto& p : s) p.value = uniform_matrix(p.value.rows(), p.value.cols(), 1.0, r2);
    auto hs = s.add("h", Matrix(h));
    auto is = s.add("in", Matrix(in));
    CHECK(check(s, [&](Tape& t) { return weighted_sum(gru_cell(g, t.param(hs), t.param(is))); }) <
          1e-5);
  }

  Tape t(s);
  CHECK_THROWS_AS(gru_cell(g, t.constant(h), t.constant(Vector::Zero(3))), std::invalid_argument);
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient is the identity") {
    Rng rng(8);
    ParamStore s;
    auto w = s.add("w", uniform_matrix(3, 4, 1.0, rng));
    Matrix before = s[w].value;
    for (int i = 0; i < 3; ++i) adam_step(s, {});
    CHECK(s[w].value == before);
  }

  SUBCASE("first step moves each coordinate by about lr") {
    ParamStore s;
    auto w = s.add("w", Matrix(Vector{{0.5, -0.2}}));
    s[w].grad << 3.0, -1e-3;
    adam_step(s, {.lr = 1e-2});
    CHECK(s[w].value(0, 0) == doctest::Approx(0.5 - 1e-2).epsilon(1e-6));
    CHECK(s[w].value(1, 0) == doctest::Approx(-0.2 + 1e-2).epsilon(1e-4));
    CHECK(s[w].grad.isZero());
    CHECK(s.step() == 1);
  }

  SUBCASE("two steps decrease a convex quadratic") {
    ParamStore s;
    auto w = s.add("w", Matrix(Vector{{1.0, -2.0, 0.5}}));
    auto loss = [&] { return s[w].value.squaredNorm(); };
    double l0 = loss();
    for (int i = 0; i < 2; ++i) {
      Tape t(s);
      t.backward(sum(square(t.param(w))), s);
      adam_step(s, {.lr = 0.1});
    }
    CHECK(loss() < l0);
  }
}

TEST_CASE("grad_check oracle and negative control") {
  Rng rng(9);
  ParamStore s;
  auto x = vec_param(s, "x", 5, rng);
  auto W = s.add("W", uniform_matrix(4, 5, 1.0, rng));
  auto b = vec_param(s, "b", 4, rng);

  // linear in every parameter, with O(1) gradients
  CHECK(check(s, [&](Tape& t) {
          Var lin = scale(sum(t.param(x)), 0.75) + sum(t.param(b));
          return lin - sum(matvec(W, t.constant(Vector::Constant(5, 0.5))));
        }) < 1e-9);

  auto net = [&](Tape& t) { return weighted_sum(tanh(affine(W, t.param(x), b))); };
  CHECK(check(s, net) < 1e-6);
  {
    Tape::ScopedAdjointFault fault(Primitive::kTanh, 1.1);
    CHECK(check(s, net) > 1e-2);
  }
  CHECK(check(s, net) < 1e-6);

  SUBCASE("subsampling above the coordinate limit") {
    LossFunction fn = [&](ParamStore& st, bool backward) {
      Tape t(st);
      Var l = net(t);
      if (backward) t.backward(l, st);
      return scalar(l);
    };
    auto res = grad_check(fn, s, {.max_coordinates = 7});
    CHECK(res.coordinates_checked == 7);
  }
}

TEST_CASE("backward accumulates and validates its inputs") {
  ParamStore s;
  auto w = s.add("w", Matrix(Vector{{2.0}}));
  Tape t(s);
  Var l = square(t.param(w));
  t.backward(l, s);
  t.backward(l, s);
  CHECK(s[w].grad(0, 0) == 8.0);
  ParamStore other;
  CHECK_THROWS_AS(t.backward(l, other), std::invalid_argument);
  CHECK_THROWS_AS(t.backward(t.constant(Vector::Zero(2)), s), std::invalid_argument);
  CHECK_THROWS_AS(s.add("w", Matrix::Zero(1, 1)), std::invalid_argument);
}

TEST_CASE("checkpoint roundtrip is bit-exact") {
  Rng rng(10);
  ParamStore s;
  s.add("enc.U", uniform_matrix(3, 5, 1.0, rng));
  s.add("enc.a", uniform_matrix(3, 1, 1.0, rng));
  s.add("tiny", Matrix::Constant(1, 1, 5e-324));
  Metadata meta{{"n", "3"}, {"grammar", "start S;\nS -> x;\n"}};
  auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(path, s, meta);
  Checkpoint ck = load_checkpoint(path);
  CHECK(ck.store.same_values(s));
  CHECK(ck.meta == meta);
  CHECK(ck.store[ck.store.id("enc.U")].value.rows() == 3);

  SUBCASE("format errors") {
    auto bad = temp_path("bad.ckpt");
    {
      std::ofstream out(bad, std::ios::binary);
      out << "NOTACKPT";
    }
    CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);
    auto size = std::filesystem::file_size(path);
    std::filesystem::copy_file(path, bad, std::filesystem::copy_options::overwrite_existing);
    std::filesystem::resize_file(bad, size - 3);
    CHECK_THROWS_AS(load_checkpoint(bad), std::runtime_error);
    std::filesystem::remove(bad);
  }
  std::filesystem::remove(path);
}
