// Copyright 2026 The melvin-surrogate Authors
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

#pragma once

// Many-to-one sequence model: token embedding, one LSTM layer, and a task
// head applied to the final hidden state.
//
// Batches are processed packed: sequences are sorted by decreasing length so
// that at step t the sequences still running occupy a prefix of the columns.
// No padding ever enters the recurrence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "melvin/errors.hpp"
#include "melvin/labeler.hpp"
#include "melvin/random.hpp"
#include "melvin/srv_loss.hpp"

namespace melvin {

enum class Task { kEntanglement, kSrv };

std::string to_string(Task task);
/// Accepts "ent"/"entanglement" and "srv". Throws ConfigurationError.
Task parse_task(std::string_view s);

struct ModelShape {
  int vocab = 0;   // including the padding index 0
  int embed = 64;
  int hidden = 128;
  Task task = Task::kEntanglement;
  std::uint64_t vocab_hash = 0;

  int head_outputs() const { return task == Task::kEntanglement ? 1 : 3; }
  Eigen::Index parameter_count() const {
    const Eigen::Index h4 = 4 * Eigen::Index{hidden};
    return Eigen::Index{embed} * vocab + h4 * embed + h4 * hidden + h4 +
           Eigen::Index{head_outputs()} * hidden + head_outputs();
  }
  bool operator==(const ModelShape&) const = default;
};

/// One training/evaluation example set. srv is only read by the SRV task.
struct Batch {
  std::vector<std::vector<int>> sequences;
  std::vector<double> y_e;
  std::vector<SrvLabel> srv;

  std::size_t size() const { return sequences.size(); }
};

template <typename Scalar>
class LstmModel {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  LstmModel() = default;
  explicit LstmModel(const ModelShape& shape)
      : shape_(shape), params_(Vector::Zero(shape.parameter_count())) {
    if (shape.vocab < 2 || shape.embed < 1 || shape.hidden < 1) {
      throw ConfigurationError("model dimensions must be positive");
    }
  }

  /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases except the forget
  /// gate bias, which starts at 1.
  static LstmModel initialized(const ModelShape& shape, std::uint64_t seed) {
    LstmModel model(shape);
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    for (Eigen::Index i = 0; i < model.params_.size(); ++i) {
      model.params_(i) = Scalar(rng.uniform(-bound, bound));
    }
    model.gate_bias().setZero();
    model.gate_bias().segment(shape.hidden, shape.hidden).setConstant(Scalar(1));
    model.head_bias().setZero();
    return model;
  }

  const ModelShape& shape() const { return shape_; }
  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }

  // Parameter blocks, in storage order. Gate rows are ordered input, forget,
  // cell candidate, output.
  MatrixMap embedding() { return {ptr(0), shape_.embed, shape_.vocab}; }
  ConstMatrixMap embedding() const { return {ptr(0), shape_.embed, shape_.vocab}; }
  MatrixMap input_weights() { return {ptr(off_w()), 4 * shape_.hidden, shape_.embed}; }
  ConstMatrixMap input_weights() const { return {ptr(off_w()), 4 * shape_.hidden, shape_.embed}; }
  MatrixMap recurrent_weights() { return {ptr(off_u()), 4 * shape_.hidden, shape_.hidden}; }
  ConstMatrixMap recurrent_weights() const {
    return {ptr(off_u()), 4 * shape_.hidden, shape_.hidden};
  }
  VectorMap gate_bias() { return {ptr(off_b()), 4 * shape_.hidden}; }
  ConstVectorMap gate_bias() const { return {ptr(off_b()), 4 * shape_.hidden}; }
  MatrixMap head_weights() { return {ptr(off_head()), shape_.head_outputs(), shape_.hidden}; }
  ConstMatrixMap head_weights() const {
    return {ptr(off_head()), shape_.head_outputs(), shape_.hidden};
  }
  VectorMap head_bias() { return {ptr(off_head_b()), shape_.head_outputs()}; }
  ConstVectorMap head_bias() const { return {ptr(off_head_b()), shape_.head_outputs()}; }

  // Offsets of each block inside parameters().
  Eigen::Index off_w() const { return Eigen::Index{shape_.embed} * shape_.vocab; }
  Eigen::Index off_u() const { return off_w() + 4 * Eigen::Index{shape_.hidden} * shape_.embed; }
  Eigen::Index off_b() const { return off_u() + 4 * Eigen::Index{shape_.hidden} * shape_.hidden; }
  Eigen::Index off_head() const { return off_b() + 4 * Eigen::Index{shape_.hidden}; }
  Eigen::Index off_head_b() const {
    return off_head() + Eigen::Index{shape_.head_outputs()} * shape_.hidden;
  }

 private:
  Scalar* ptr(Eigen::Index offset) { return params_.data() + offset; }
  const Scalar* ptr(Eigen::Index offset) const { return params_.data() + offset; }

  ModelShape shape_;
  Vector params_;
};

template <typename Scalar>
struct RecurrentState {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> h;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c;

  static RecurrentState zero(int hidden) {
    return {Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(hidden),
            Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(hidden)};
  }
};

namespace detail {

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return logistic(v); });
}

inline void check_sequence(std::span<const int> seq, int vocab) {
  if (seq.empty()) throw StructuralError("empty token sequence");
  for (int t : seq) {
    if (t < 1 || t >= vocab) {
      throw StructuralError("token index " + std::to_string(t) + " outside [1, " +
                            std::to_string(vocab) + ")");
    }
  }
}

}  // namespace detail

/// Advances the recurrence by one token.
template <typename Scalar>
RecurrentState<Scalar> step(const LstmModel<Scalar>& model, const RecurrentState<Scalar>& state,
                            int token) {
  const int h = model.shape().hidden;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z =
      model.input_weights() * model.embedding().col(token) +
      model.recurrent_weights() * state.h + model.gate_bias();
  const auto i = detail::sigmoid(z.segment(0, h).array());
  const auto f = detail::sigmoid(z.segment(h, h).array());
  const auto g = z.segment(2 * h, h).array().tanh();
  const auto o = detail::sigmoid(z.segment(3 * h, h).array());
  RecurrentState<Scalar> next;
  next.c = (f * state.c.array() + i * g).matrix();
  next.h = (o * next.c.array().tanh()).matrix();
  return next;
}

template <typename Scalar>
RecurrentState<Scalar> run(const LstmModel<Scalar>& model, std::span<const int> sequence,
                           RecurrentState<Scalar> state) {
  for (int token : sequence) state = step(model, state, token);
  return state;
}

/// Raw head output for a final hidden state (logit, or pre-link SRV outputs).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> head(const LstmModel<Scalar>& model,
                                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& h) {
  return model.head_weights() * h + model.head_bias();
}

/// Raw head output for one sequence, stepping token by token.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward(const LstmModel<Scalar>& model,
                                                  std::span<const int> sequence) {
  detail::check_sequence(sequence, model.shape().vocab);
  return head(model, run(model, sequence, RecurrentState<Scalar>::zero(model.shape().hidden)).h);
}

template <typename Scalar>
Scalar entanglement_probability(const LstmModel<Scalar>& model, std::span<const int> sequence) {
  return logistic(forward(model, sequence)(0));
}

/// Packed forward/backward over a batch of variable-length sequences.
template <typename Scalar>
class PackedPass {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  PackedPass(const LstmModel<Scalar>& model, const std::vector<std::vector<int>>& sequences)
      : model_(model), sequences_(sequences) {
    const Eigen::Index batch = static_cast<Eigen::Index>(sequences.size());
    if (batch == 0) throw StructuralError("empty batch");
    for (const auto& s : sequences) detail::check_sequence(s, model.shape().vocab);

    order_.resize(sequences.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return sequences[a].size() > sequences[b].size();
    });
    const std::size_t steps = sequences[order_[0]].size();
    active_.assign(steps + 1, 0);
    for (std::size_t t = 0; t < steps; ++t) {
      active_[t] = static_cast<Eigen::Index>(std::count_if(
          sequences.begin(), sequences.end(), [t](const auto& s) { return s.size() > t; }));
    }

    const int hid = model.shape().hidden;
    const auto W = model.input_weights();
    const auto U = model.recurrent_weights();
    const auto b = model.gate_bias();
    const auto E = model.embedding();

    Matrix h_prev = Matrix::Zero(hid, batch);
    Matrix c_prev = Matrix::Zero(hid, batch);
    final_h_ = Matrix::Zero(hid, batch);
    cache_.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const Eigen::Index a = active_[t];
      Cache& k = cache_[t];
      k.x.resize(model.shape().embed, a);
      for (Eigen::Index j = 0; j < a; ++j) k.x.col(j) = E.col(token(j, t));
      k.h_prev = h_prev.leftCols(a);
      k.c_prev = c_prev.leftCols(a);
      Matrix z = W * k.x;
      z.noalias() += U * k.h_prev;
      z.colwise() += b;
      k.i = detail::sigmoid(z.topRows(hid).array()).matrix();
      k.f = detail::sigmoid(z.middleRows(hid, hid).array()).matrix();
      k.g = z.middleRows(2 * hid, hid).array().tanh().matrix();
      k.o = detail::sigmoid(z.bottomRows(hid).array()).matrix();
      Matrix c = (k.f.array() * k.c_prev.array() + k.i.array() * k.g.array()).matrix();
      k.tanh_c = c.array().tanh().matrix();
      Matrix h = (k.o.array() * k.tanh_c.array()).matrix();
      const Eigen::Index ending = a - active_[t + 1];
      final_h_.middleCols(active_[t + 1], ending) = h.rightCols(ending);
      h_prev.leftCols(a) = h;
      c_prev.leftCols(a) = c;
    }
    outputs_sorted_ = model.head_weights() * final_h_;
    outputs_sorted_.colwise() += Vector(model.head_bias());
  }

  /// Raw head outputs, one column per sequence in the caller's order.
  Matrix outputs() const {
    Matrix out(outputs_sorted_.rows(), outputs_sorted_.cols());
    for (std::size_t j = 0; j < order_.size(); ++j) {
      out.col(static_cast<Eigen::Index>(order_[j])) = outputs_sorted_.col(static_cast<Eigen::Index>(j));
    }
    return out;
  }

  /// Gradient of a loss with respect to every parameter, given the loss
  /// gradient with respect to outputs() (same column order).
  Vector backward(const Matrix& d_outputs) const {
    const int hid = model_.shape().hidden;
    LstmModel<Scalar> grad(model_.shape());
    const Eigen::Index batch = static_cast<Eigen::Index>(order_.size());

    Matrix dy(d_outputs.rows(), batch);
    for (std::size_t j = 0; j < order_.size(); ++j) {
      dy.col(static_cast<Eigen::Index>(j)) = d_outputs.col(static_cast<Eigen::Index>(order_[j]));
    }
    grad.head_weights() = dy * final_h_.transpose();
    grad.head_bias() = dy.rowwise().sum();
    const Matrix d_final_h = model_.head_weights().transpose() * dy;

    const auto W = model_.input_weights();
    const auto U = model_.recurrent_weights();
    auto dW = grad.input_weights();
    auto dU = grad.recurrent_weights();
    auto db = grad.gate_bias();
    auto dE = grad.embedding();

    Matrix dh_next = Matrix::Zero(hid, batch);
    Matrix dc_next = Matrix::Zero(hid, batch);
    Matrix dz;
    for (std::size_t t = cache_.size(); t-- > 0;) {
      const Cache& k = cache_[t];
      const Eigen::Index a = active_[t];
      const Eigen::Index carried = active_[t + 1];
      Matrix dh(hid, a);
      Matrix dc(hid, a);
      dh.leftCols(carried) = dh_next.leftCols(carried);
      dh.rightCols(a - carried) = d_final_h.middleCols(carried, a - carried);
      dc.leftCols(carried) = dc_next.leftCols(carried);
      dc.rightCols(a - carried).setZero();

      const auto tc = k.tanh_c.array();
      dc.array() += dh.array() * k.o.array() * (Scalar(1) - tc * tc);
      dz.resize(4 * hid, a);
      dz.topRows(hid) = (dc.array() * k.g.array() * k.i.array() * (Scalar(1) - k.i.array())).matrix();
      dz.middleRows(hid, hid) =
          (dc.array() * k.c_prev.array() * k.f.array() * (Scalar(1) - k.f.array())).matrix();
      dz.middleRows(2 * hid, hid) =
          (dc.array() * k.i.array() * (Scalar(1) - k.g.array() * k.g.array())).matrix();
      dz.bottomRows(hid) = (dh.array() * tc * k.o.array() * (Scalar(1) - k.o.array())).matrix();

      dW.noalias() += dz * k.x.transpose();
      dU.noalias() += dz * k.h_prev.transpose();
      db += dz.rowwise().sum();
      const Matrix dx = W.transpose() * dz;
      for (Eigen::Index j = 0; j < a; ++j) dE.col(token(j, t)) += dx.col(j);

      dh_next.leftCols(a).noalias() = U.transpose() * dz;
      dc_next.leftCols(a) = (dc.array() * k.f.array()).matrix();
    }
    return std::move(grad.parameters());
  }

 private:
  struct Cache {
    Matrix x, h_prev, c_prev, i, f, g, o, tanh_c;
  };

  int token(Eigen::Index sorted_col, std::size_t t) const {
    return sequences_[order_[static_cast<std::size_t>(sorted_col)]][t];
  }

  const LstmModel<Scalar>& model_;
  const std::vector<std::vector<int>>& sequences_;
  std::vector<std::size_t> order_;
  std::vector<Eigen::Index> active_;
  std::vector<Cache> cache_;
  Matrix final_h_;
  Matrix outputs_sorted_;
};

/// Raw head outputs for a batch (columns in input order).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> forward_batch(
    const LstmModel<Scalar>& model, const std::vector<std::vector<int>>& sequences) {
  return PackedPass<Scalar>(model, sequences).outputs();
}

template <typename Scalar>
struct LossAndGradient {
  Scalar loss{};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gradient;
};

/// Per-column loss terms and their output gradients for the model's task:
/// mean BCE on the logistic output, or mean negative SRV log-likelihood.
template <typename Scalar>
Scalar task_loss(Task task, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& outputs,
                 const Batch& batch, Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>* d_outputs) {
  const Eigen::Index n = outputs.cols();
  const Scalar inv_n = Scalar(1) / Scalar(n);
  Scalar loss(0);
  if (d_outputs) d_outputs->resize(outputs.rows(), n);
  if (task == Task::kEntanglement) {
    if (batch.y_e.size() != static_cast<std::size_t>(n)) {
      throw StructuralError("batch is missing entanglement targets");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const Scalar z = outputs(0, j);
      const Scalar y(batch.y_e[static_cast<std::size_t>(j)]);
      loss += softplus(z) - y * z;
      if (d_outputs) (*d_outputs)(0, j) = (logistic(z) - y) * inv_n;
    }
  } else {
    if (batch.srv.size() != static_cast<std::size_t>(n)) {
      throw StructuralError("batch is missing SRV targets");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto params = SrvParams<Scalar>::from_raw(outputs.col(j));
      const SrvLabel& y = batch.srv[static_cast<std::size_t>(j)];
      loss -= log_likelihood(params, y);
      if (d_outputs) d_outputs->col(j) = -log_likelihood_raw_gradient(params, y) * inv_n;
    }
  }
  return loss * inv_n;
}

template <typename Scalar>
Scalar batch_loss(const LstmModel<Scalar>& model, const Batch& batch) {
  return task_loss<Scalar>(model.shape().task, forward_batch(model, batch.sequences), batch, nullptr);
}

/// Mean loss over the batch and its gradient with respect to all parameters,
/// via backpropagation through time. Throws NumericalError on a non-finite loss.
template <typename Scalar>
LossAndGradient<Scalar> loss_and_gradients(const LstmModel<Scalar>& model, const Batch& batch) {
  PackedPass<Scalar> pass(model, batch.sequences);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d_out;
  const Scalar loss = task_loss<Scalar>(model.shape().task, pass.outputs(), batch, &d_out);
  if (!std::isfinite(static_cast<double>(loss))) {
    std::size_t longest = 0;
    for (const auto& s : batch.sequences) longest = std::max(longest, s.size());
    throw NumericalError("non-finite " + to_string(model.shape().task) + " loss on batch of " +
                         std::to_string(batch.size()) + " sequences (longest " +
                         std::to_string(longest) + ")");
  }
  return {loss, pass.backward(d_out)};
}

}  // namespace melvin
