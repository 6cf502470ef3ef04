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

// Dense reverse-mode differentiation over Eigen vectors.
//
// A Tape records one loss evaluation. Values are column vectors (scalars are
// 1-vectors); parameters live in a ParamStore and are referenced by ParamId.
// Tape::backward accumulates exact adjoints into the store's gradients.
//
//   Tape tape(store);
//   Var h = tanh(affine(W, tape.param(f), a));
//   Var loss = softmax_xent(affine(V, h, b), target);
//   tape.backward(loss, store);

#ifndef RTGAE_DIFF_HPP_
#define RTGAE_DIFF_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "rtgae/rng.hpp"

namespace rtgae {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Numerically stable log(sum(exp(x))).
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& x) {
  const auto m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& x) {
  auto e = (x.array() - x.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// -- parameters -------------------------------------------------------------

struct ParamId {
  std::size_t index = 0;
  friend bool operator==(ParamId, ParamId) = default;
};

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;  ///< Adam first moment
  Matrix v;  ///< Adam second moment
};

class ParamStore {
 public:
  /// Throws std::invalid_argument if the name exists.
  ParamId add(std::string name, Matrix init);

  ParamId id(std::string_view name) const;
  bool contains(std::string_view name) const;

  Param& operator[](ParamId p) { return params_[p.index]; }
  const Param& operator[](ParamId p) const { return params_[p.index]; }
  std::size_t size() const { return params_.size(); }
  /// Total number of scalar coefficients.
  std::size_t num_coefficients() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  /// Number of Adam steps taken so far.
  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  /// Parameters with equal names, shapes and bitwise-equal values.
  bool same_values(const ParamStore& other) const;

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t step_ = 0;
};

// -- tape -------------------------------------------------------------------

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Vector& value() const;
  Eigen::Index size() const { return value().size(); }
};

enum class Primitive {
  kConstant,
  kParam,
  kAffine,
  kMatVec,
  kAdd,
  kSub,
  kMul,
  kScale,
  kTanh,
  kSigmoid,
  kExp,
  kLog,
  kSquare,
  kSum,
  kSoftmaxXent,
};

class Tape {
 public:
  explicit Tape(const ParamStore& store) : store_(&store) {}

  Var constant(Vector v);
  Var zeros(Eigen::Index n) { return constant(Vector::Zero(n)); }
  /// A column-vector parameter used directly as a value.
  Var param(ParamId p);

  const ParamStore& store() const { return *store_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  const Vector& value(std::size_t id) const { return nodes_[id].value; }

  /// Reverse sweep from a scalar node; adds `seed * d loss / d param` to
  /// every parameter's grad. `store` must be the store the tape reads from.
  void backward(Var loss, ParamStore& store, double seed = 1.0) const;

  /// Test hook: multiply the adjoint of one primitive by `factor` in every
  /// tape on this thread while alive. Used for mutation tests of grad_check.
  class ScopedAdjointFault {
   public:
    ScopedAdjointFault(Primitive p, double factor);
    ~ScopedAdjointFault();
    ScopedAdjointFault(const ScopedAdjointFault&) = delete;
    ScopedAdjointFault& operator=(const ScopedAdjointFault&) = delete;
  };

 private:
  friend Var affine(ParamId, Var, ParamId);
  friend Var matvec(ParamId, Var);
  friend Var add(Var, Var);
  friend Var sub(Var, Var);
  friend Var mul(Var, Var);
  friend Var scale(Var, double);
  friend Var tanh(Var);
  friend Var sigmoid(Var);
  friend Var exp(Var);
  friend Var log(Var);
  friend Var square(Var);
  friend Var sum(Var);
  friend Var softmax_xent(Var, std::size_t);

  struct Node {
    explicit Node(Primitive o) : op(o) {}
    Primitive op;
    std::size_t a = 0, b = 0;     // input nodes
    std::size_t p = 0, q = 0;     // parameter indices
    double scalar = 0.0;          // scale factor or target index
    Vector value;
  };

  Var push(Node n);

  const ParamStore* store_;
  std::vector<Node> nodes_;
};

/// W·x + b.
Var affine(ParamId W, Var x, ParamId b);
/// W·x.
Var matvec(ParamId W, Var x);
Var add(Var x, Var y);
Var sub(Var x, Var y);
/// Elementwise product.
Var mul(Var x, Var y);
Var scale(Var x, double c);
Var tanh(Var x);
Var sigmoid(Var x);
Var exp(Var x);
/// Elementwise natural log; inputs must be positive.
Var log(Var x);
Var square(Var x);
/// Sum of entries, as a 1-vector.
Var sum(Var x);
/// -log softmax(logits)[target], via a max-shifted log-sum-exp.
Var softmax_xent(Var logits, std::size_t target);

inline Var operator+(Var x, Var y) { return add(x, y); }
inline Var operator-(Var x, Var y) { return sub(x, y); }

inline double scalar(Var x) { return x.value()[0]; }

// -- GRU --------------------------------------------------------------------

struct GruParams {
  ParamId w_update, u_update, b_update;
  ParamId w_reset, u_reset, b_reset;
  ParamId w_cand, u_cand, b_cand;
};

/// Registers a GRU cell with state and input size n under `prefix`.
GruParams add_gru(ParamStore& store, const std::string& prefix, Eigen::Index n, Rng& rng);

/// z = σ(W_z i + U_z h + b_z), r = σ(W_r i + U_r h + b_r),
/// c = tanh(W_c i + U_c (r ⊙ h) + b_c), h' = (1 − z) ⊙ h + z ⊙ c.
Var gru_cell(const GruParams& p, Var state, Var input);

// -- optimization -----------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update on every parameter, then zeroes gradients.
void adam_step(ParamStore& store, const AdamConfig& cfg);

/// Returns the loss; when `backward` is true it also accumulates the analytic
/// gradient into the store.
using LossFunction = std::function<double(ParamStore&, bool backward)>;

struct GradCheckOptions {
  double epsilon = 1e-6;
  /// Denominator floor of the relative error, so coordinates whose true
  /// gradient is below finite-difference noise are compared absolutely.
  double floor = 1e-4;
  std::size_t max_coordinates = 10000;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t coordinates_checked = 0;
};

/// Central differences on every coordinate (a seeded random subset when
/// there are more than max_coordinates).
GradCheckResult grad_check(const LossFunction& loss, ParamStore& store,
                           const GradCheckOptions& opts = {});

/// Uniform(±1/sqrt(fan_in)) matrix.
Matrix fan_in_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng);

// -- checkpoints ------------------------------------------------------------

using Metadata = std::map<std::string, std::string>;

/// Layout (all integers little-endian):
///   "RTGAECKP"  u32 version
///   u32 #metadata, then per entry: u32 len, key bytes, u32 len, value bytes
///   u32 #params, then per param: u32 len, name bytes, u32 rows, u32 cols,
///       rows*cols IEEE-754 float64 little-endian, row-major
void save_checkpoint(const std::filesystem::path& path, const ParamStore& store,
                     const Metadata& meta);

struct Checkpoint {
  ParamStore store;
  Metadata meta;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace rtgae

#endif  // RTGAE_DIFF_HPP_
