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

#include "rtgae/diff.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

namespace rtgae {

namespace {

struct Fault {
  bool active = false;
  Primitive op = Primitive::kConstant;
  double factor = 1.0;
};

thread_local Fault g_fault;

double fault_factor(Primitive op) {
  return g_fault.active && g_fault.op == op ? g_fault.factor : 1.0;
}

Tape& tape_of(Var x) {
  if (!x.tape) throw std::invalid_argument("variable is not attached to a tape");
  return *x.tape;
}

Tape& tape_of(Var x, Var y) {
  if (x.tape != y.tape) throw std::invalid_argument("variables belong to different tapes");
  return tape_of(x);
}

void require_same_size(const Vector& a, const Vector& b, const char* op) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(op) + ": size mismatch " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
}

}  // namespace

// -- ParamStore -------------------------------------------------------------

ParamId ParamStore::add(std::string name, Matrix init) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  ParamId id{params_.size()};
  index_.emplace(name, id.index);
  Param p;
  p.name = std::move(name);
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.m = p.grad;
  p.v = p.grad;
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return id;
}

ParamId ParamStore::id(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw std::out_of_range("no parameter '" + std::string(name) + "'");
  return ParamId{it->second};
}

bool ParamStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParamStore::num_coefficients() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

bool ParamStore::same_values(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& a = params_[i];
    const auto& b = other.params_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols())
      return false;
    if (std::memcmp(a.value.data(), b.value.data(), sizeof(double) * a.value.size()) != 0)
      return false;
  }
  return true;
}

// -- Tape -------------------------------------------------------------------

const Vector& Var::value() const { return tape->value(id); }

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Vector v) {
  Node n{Primitive::kConstant};
  n.value = std::move(v);
  return push(std::move(n));
}

Var Tape::param(ParamId p) {
  const Matrix& m = (*store_)[p].value;
  if (m.cols() != 1)
    throw std::invalid_argument("parameter '" + (*store_)[p].name + "' is not a column vector");
  Node n{Primitive::kParam};
  n.p = p.index;
  n.value = m.col(0);
  return push(std::move(n));
}

Tape::ScopedAdjointFault::ScopedAdjointFault(Primitive p, double factor) {
  g_fault = Fault{true, p, factor};
}

Tape::ScopedAdjointFault::~ScopedAdjointFault() { g_fault = Fault{}; }

void Tape::backward(Var loss, ParamStore& store, double seed) const {
  if (loss.tape != this) throw std::invalid_argument("loss belongs to another tape");
  if (&store != store_) throw std::invalid_argument("backward into a different parameter store");
  if (nodes_[loss.id].value.size() != 1) throw std::invalid_argument("loss must be a scalar");

  std::vector<Vector> adj(loss.id + 1);
  adj[loss.id] = Vector::Constant(1, seed);
  auto acc = [&](std::size_t id, const auto& g) {
    if (adj[id].size() == 0)
      adj[id] = g;
    else
      adj[id] += g;
  };

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (adj[i].size() == 0) continue;
    const Node& n = nodes_[i];
    const Vector g = adj[i] * fault_factor(n.op);
    switch (n.op) {
      case Primitive::kConstant:
        break;
      case Primitive::kParam:
        store[ParamId{n.p}].grad.col(0) += g;
        break;
      case Primitive::kAffine:
        store[ParamId{n.q}].grad.col(0) += g;
        [[fallthrough]];
      case Primitive::kMatVec: {
        auto& W = store[ParamId{n.p}];
        W.grad.noalias() += g * nodes_[n.a].value.transpose();
        acc(n.a, W.value.transpose() * g);
        break;
      }
      case Primitive::kAdd:
        acc(n.a, g);
        acc(n.b, g);
        break;
      case Primitive::kSub:
        acc(n.a, g);
        acc(n.b, -g);
        break;
      case Primitive::kMul:
        acc(n.a, g.cwiseProduct(nodes_[n.b].value));
        acc(n.b, g.cwiseProduct(nodes_[n.a].value));
        break;
      case Primitive::kScale:
        acc(n.a, g * n.scalar);
        break;
      case Primitive::kTanh:
        acc(n.a, g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case Primitive::kSigmoid:
        acc(n.a, g.cwiseProduct((n.value.array() * (1.0 - n.value.array())).matrix()));
        break;
      case Primitive::kExp:
        acc(n.a, g.cwiseProduct(n.value));
        break;
      case Primitive::kLog:
        acc(n.a, g.cwiseQuotient(nodes_[n.a].value));
        break;
      case Primitive::kSquare:
        acc(n.a, 2.0 * g.cwiseProduct(nodes_[n.a].value));
        break;
      case Primitive::kSum:
        acc(n.a, Vector::Constant(nodes_[n.a].value.size(), g[0]));
        break;
      case Primitive::kSoftmaxXent: {
        Vector p = softmax(nodes_[n.a].value);
        p[static_cast<Eigen::Index>(n.scalar)] -= 1.0;
        acc(n.a, g[0] * p);
        break;
      }
    }
  }
}

// -- primitives ---------------------------------------------------------------

Var affine(ParamId W, Var x, ParamId b) {
  Tape& t = tape_of(x);
  const Matrix& w = t.store()[W].value;
  const Matrix& bias = t.store()[b].value;
  if (w.cols() != x.size() || bias.cols() != 1 || bias.rows() != w.rows())
    throw std::invalid_argument("affine: shape mismatch for '" + t.store()[W].name + "'");
  Tape::Node n{Primitive::kAffine};
  n.a = x.id;
  n.p = W.index;
  n.q = b.index;
  n.value = w * x.value() + bias.col(0);
  return t.push(std::move(n));
}

Var matvec(ParamId W, Var x) {
  Tape& t = tape_of(x);
  const Matrix& w = t.store()[W].value;
  if (w.cols() != x.size())
    throw std::invalid_argument("matvec: shape mismatch for '" + t.store()[W].name + "'");
  Tape::Node n{Primitive::kMatVec};
  n.a = x.id;
  n.p = W.index;
  n.value = w * x.value();
  return t.push(std::move(n));
}

Var add(Var x, Var y) {
  Tape& t = tape_of(x, y);
  require_same_size(x.value(), y.value(), "add");
  Tape::Node n{Primitive::kAdd};
  n.a = x.id;
  n.b = y.id;
  n.value = x.value() + y.value();
  return t.push(std::move(n));
}

Var sub(Var x, Var y) {
  Tape& t = tape_of(x, y);
  require_same_size(x.value(), y.value(), "sub");
  Tape::Node n{Primitive::kSub};
  n.a = x.id;
  n.b = y.id;
  n.value = x.value() - y.value();
  return t.push(std::move(n));
}

Var mul(Var x, Var y) {
  Tape& t = tape_of(x, y);
  require_same_size(x.value(), y.value(), "mul");
  Tape::Node n{Primitive::kMul};
  n.a = x.id;
  n.b = y.id;
  n.value = x.value().cwiseProduct(y.value());
  return t.push(std::move(n));
}

Var scale(Var x, double c) {
  Tape& t = tape_of(x);
  Tape::Node n{Primitive::kScale};
  n.a = x.id;
  n.scalar = c;
  n.value = c * x.value();
  return t.push(std::move(n));
}

Var tanh(Var x) {
  Tape& t = tape_of(x);
  Tape::Node n{Primitive::kTanh};
  n.a = x.id;
  n.value = x.value().array().tanh().matrix();
  return t.push(std::move(n));
}

Var sigmoid(Var x) {
  Tape& t = tape_of(x);
  Tape::Node n{Primitive::kSigmoid};
  n.a = x.id;
  n.value = x.value().unaryExpr([](double v) { return logistic(v); });
  return t.push(std::move(n));
}

Var exp(Var x) {
  Tape& t = tape_of(x);
  Tape::Node n{Primitive::kExp};
  n.a = x.id;
  n.value = x.value().array().exp().matrix();
  return t.push(std::move(n));
}

Var log(Var x) {
  Tape& t = tape_of(x);
  Tape::Node n{Primitive::kLog};
  n.a = x.id;
  n.value = x.value().array().log().matrix();
  return t.push(std::move(n));
}

Var square(Var x) {
  Tape& t = tape_of(x);
  Tape::Node n{Primitive::kSquare};
  n.a = x.id;
  n.value = x.value().array().square().matrix();
  return t.push(std::move(n));
}

Var sum(Var x) {
  Tape& t = tape_of(x);
  Tape::Node n{Primitive::kSum};
  n.a = x.id;
  n.value = Vector::Constant(1, x.value().sum());
  return t.push(std::move(n));
}

Var softmax_xent(Var logits, std::size_t target) {
  Tape& t = tape_of(logits);
  const Vector& l = logits.value();
  if (target >= static_cast<std::size_t>(l.size()))
    throw std::out_of_range("softmax_xent: target " + std::to_string(target) + " out of " +
                            std::to_string(l.size()) + " classes");
  Tape::Node n{Primitive::kSoftmaxXent};
  n.a = logits.id;
  n.scalar = static_cast<double>(target);
  n.value = Vector::Constant(1, log_sum_exp(l) - l[static_cast<Eigen::Index>(target)]);
  return t.push(std::move(n));
}

// -- GRU --------------------------------------------------------------------

GruParams add_gru(ParamStore& store, const std::string& prefix, Eigen::Index n, Rng& rng) {
  auto w = [&](const char* name) { return store.add(prefix + "." + name, fan_in_uniform(n, n, rng)); };
  auto b = [&](const char* name) { return store.add(prefix + "." + name, Matrix::Zero(n, 1)); };
  GruParams p;
  p.w_update = w("W_z");
  p.u_update = w("U_z");
  p.b_update = b("b_z");
  p.w_reset = w("W_r");
  p.u_reset = w("U_r");
  p.b_reset = b("b_r");
  p.w_cand = w("W_n");
  p.u_cand = w("U_n");
  p.b_cand = b("b_n");
  return p;
}

Var gru_cell(const GruParams& p, Var state, Var input) {
  if (state.size() != input.size()) throw std::invalid_argument("gru_cell: state/input size mismatch");
  Var z = sigmoid(affine(p.w_update, input, p.b_update) + matvec(p.u_update, state));
  Var r = sigmoid(affine(p.w_reset, input, p.b_reset) + matvec(p.u_reset, state));
  Var c = tanh(affine(p.w_cand, input, p.b_cand) + matvec(p.u_cand, mul(r, state)));
  return state + mul(z, c - state);
}

// -- optimization -----------------------------------------------------------

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  store.set_step(store.step() + 1);
  const double t = static_cast<double>(store.step());
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& p : store) {
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
    p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    p.value.array() -=
        cfg.lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.epsilon);
    p.grad.setZero();
  }
}

GradCheckResult grad_check(const LossFunction& loss, ParamStore& store,
                           const GradCheckOptions& opts) {
  store.zero_grad();
  loss(store, true);
  std::vector<Matrix> analytic;
  analytic.reserve(store.size());
  for (const auto& p : store) analytic.push_back(p.grad);
  store.zero_grad();

  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  for (std::size_t i = 0; i < store.size(); ++i)
    for (Eigen::Index k = 0; k < store[ParamId{i}].value.size(); ++k) coords.emplace_back(i, k);
  if (coords.size() > opts.max_coordinates) {
    Rng rng(opts.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opts.max_coordinates);
  }

  GradCheckResult res;
  for (auto [i, k] : coords) {
    double& v = store[ParamId{i}].value.data()[k];
    const double saved = v;
    v = saved + opts.epsilon;
    const double plus = loss(store, false);
    v = saved - opts.epsilon;
    const double minus = loss(store, false);
    v = saved;
    const double numeric = (plus - minus) / (2.0 * opts.epsilon);
    const double a = analytic[i].data()[k];
    const double err =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opts.floor});
    if (!(err <= res.max_relative_error)) {
      res.max_relative_error = err;
      res.worst_param = store[ParamId{i}].name;
    }
    ++res.coordinates_checked;
  }
  return res;
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  // fill row-major so the draw order matches the checkpoint layout
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

Matrix fan_in_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  return uniform_matrix(rows, cols, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
}

// -- checkpoints ------------------------------------------------------------

namespace {

constexpr std::array<char, 8> kMagic{'R', 'T', 'G', 'A', 'E', 'C', 'K', 'P'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
  auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated file");
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t{b[3]} << 24);
  }
  double f64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return std::bit_cast<double>(v);
  }
  std::string str() {
    std::uint32_t n = u32();
    if (n > (1u << 28)) fail("implausible string length");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error(path_ + ": invalid checkpoint: " + what);
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store,
                     const Metadata& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& p : store) {
    put_str(out, p.name);
    put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) put_f64(out, p.value(r, c));
  }
  if (!out) throw std::runtime_error("error writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Reader rd(in, path.string());
  std::array<char, 8> magic{};
  rd.bytes(magic.data(), magic.size());
  if (magic != kMagic) rd.fail("bad magic");
  if (auto v = rd.u32(); v != kCheckpointVersion)
    rd.fail("unsupported version " + std::to_string(v));

  Checkpoint ck;
  for (std::uint32_t i = 0, n = rd.u32(); i < n; ++i) {
    std::string k = rd.str();
    ck.meta[k] = rd.str();
  }
  for (std::uint32_t i = 0, n = rd.u32(); i < n; ++i) {
    std::string name = rd.str();
    std::uint32_t rows = rd.u32();
    std::uint32_t cols = rd.u32();
    if (std::uint64_t{rows} * cols > (1ull << 28)) rd.fail("implausible shape for " + name);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rd.f64();
    ck.store.add(std::move(name), std::move(m));
  }
  return ck;
}

}  // namespace rtgae
