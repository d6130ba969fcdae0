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

#include "melvin/training.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>

#include "melvin/errors.hpp"

namespace melvin {

std::string to_string(Task task) { return task == Task::kEntanglement ? "ent" : "srv"; }

Task parse_task(std::string_view s) {
  if (s == "ent" || s == "entanglement") return Task::kEntanglement;
  if (s == "srv") return Task::kSrv;
  throw ConfigurationError("unknown task '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigurationError("learning rate must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigurationError("momentum must lie in [0, 1)");
  if (batch_size <= 0) throw ConfigurationError("batch size must be positive");
  if (max_updates <= 0 || eval_every <= 0 || patience <= 0 || eval_batches <= 0) {
    throw ConfigurationError("update counts must be positive");
  }
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigurationError("lr decay must lie in (0, 1]");
}

void sgd_momentum_step(Eigen::VectorXd& params, Eigen::VectorXd& velocity,
                       const Eigen::VectorXd& gradient, double learning_rate, double momentum) {
  velocity = momentum * velocity - learning_rate * gradient;
  params += velocity;
}

double clip_gradient(Eigen::VectorXd& gradient, double max_norm) {
  const double norm = gradient.norm();
  if (max_norm > 0.0 && norm > max_norm) gradient *= max_norm / norm;
  return norm;
}

double mean_loss(const Model& model, std::span<const Batch> batches) {
  if (batches.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& b : batches) total += batch_loss(model, b);
  return total / static_cast<double>(batches.size());
}

TrainResult train(Model model, const BatchStream& stream, std::span<const Batch> validation,
                  const TrainConfig& config) {
  config.validate();
  if (model.shape().task != config.task) {
    throw ConfigurationError("model head does not match the training task");
  }
  TrainResult result;
  result.model = model;
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(model.parameters().size());
  double lr = config.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  double running = 0.0;
  int running_count = 0;

  for (int update = 1; update <= config.max_updates; ++update) {
    const Batch batch = stream();
    LossAndGradient<double> lg;
    try {
      lg = loss_and_gradients(model, batch);
    } catch (const NumericalError&) {
      result.diverged = true;
      break;
    }
    if (!lg.gradient.allFinite()) {
      result.diverged = true;
      break;
    }
    clip_gradient(lg.gradient, config.clip_norm);
    sgd_momentum_step(model.parameters(), velocity, lg.gradient, lr, config.momentum);
    running += lg.loss;
    ++running_count;

    if (update % config.eval_every == 0 || update == config.max_updates) {
      const double train_loss = running / running_count;
      const double val_loss = validation.empty() ? train_loss : mean_loss(model, validation);
      result.history.push_back({update, train_loss, val_loss});
      running = 0.0;
      running_count = 0;
      if (!std::isfinite(val_loss)) {
        result.diverged = true;
        break;
      }
      if (val_loss < best) {
        best = val_loss;
        result.model = model;
        result.best_update = update;
        stale = 0;
      } else {
        lr *= config.lr_decay;
        if (++stale >= config.patience) break;
      }
    }
  }
  return result;
}

namespace {

void check_vocab(const Model& model, const Vocabulary& vocab) {
  if (model.shape().vocab_hash != vocab.hash() || model.shape().vocab != vocab.size()) {
    throw VocabularyError("model was trained with a different vocabulary");
  }
}

constexpr std::size_t kPredictChunk = 256;

template <typename F>
void for_each_chunk(std::span<const Record> records, const Vocabulary& vocab, F&& f) {
  for (std::size_t start = 0; start < records.size(); start += kPredictChunk) {
    const auto chunk = records.subspan(start, std::min(kPredictChunk, records.size() - start));
    std::vector<std::vector<int>> seqs;
    seqs.reserve(chunk.size());
    for (const auto& r : chunk) seqs.push_back(vocab.encode(r.setup));
    f(seqs);
  }
}

}  // namespace

std::vector<double> predict_entanglement(const Model& model, std::span<const Record> records,
                                         const Vocabulary& vocab) {
  check_vocab(model, vocab);
  if (model.shape().task != Task::kEntanglement) throw ConfigurationError("not an entanglement model");
  std::vector<double> out;
  out.reserve(records.size());
  for_each_chunk(records, vocab, [&](const auto& seqs) {
    const Eigen::MatrixXd raw = forward_batch(model, seqs);
    for (Eigen::Index j = 0; j < raw.cols(); ++j) out.push_back(logistic(raw(0, j)));
  });
  return out;
}

std::vector<SrvPrediction<double>> predict_srv(const Model& model, std::span<const Record> records,
                                               const Vocabulary& vocab) {
  check_vocab(model, vocab);
  if (model.shape().task != Task::kSrv) throw ConfigurationError("not an SRV model");
  std::vector<SrvPrediction<double>> out;
  out.reserve(records.size());
  for_each_chunk(records, vocab, [&](const auto& seqs) {
    const Eigen::MatrixXd raw = forward_batch(model, seqs);
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
      out.push_back(predict(SrvParams<double>::from_raw(raw.col(j))));
    }
  });
  return out;
}

std::vector<Prediction> predict_batch(const Model& entanglement, const Model& srv,
                                      std::span<const Record> records, const Vocabulary& vocab) {
  const auto pe = predict_entanglement(entanglement, records, vocab);
  const auto ps = predict_srv(srv, records, vocab);
  std::vector<Prediction> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out[i] = {pe[i], ps[i]};
  return out;
}

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'E', 'L', 'V', 'L', 'S', 'T', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Model& model) {
  const ModelShape& s = model.shape();
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kCheckpointVersion);
  put_u32(os, s.task == Task::kEntanglement ? 0u : 1u);
  put_u32(os, static_cast<std::uint32_t>(s.vocab));
  put_u32(os, static_cast<std::uint32_t>(s.embed));
  put_u32(os, static_cast<std::uint32_t>(s.hidden));
  put_u64(os, s.vocab_hash);
  put_u64(os, static_cast<std::uint64_t>(model.parameters().size()));
  for (Eigen::Index i = 0; i < model.parameters().size(); ++i) {
    put_u64(os, std::bit_cast<std::uint64_t>(model.parameters()(i)));
  }
}

Model read_checkpoint(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) throw Error("not a model checkpoint");
  if (get_u32(is) != kCheckpointVersion) throw Error("unsupported checkpoint version");
  ModelShape s;
  const std::uint32_t task = get_u32(is);
  if (task > 1) throw Error("bad task in checkpoint");
  s.task = task == 0 ? Task::kEntanglement : Task::kSrv;
  s.vocab = static_cast<int>(get_u32(is));
  s.embed = static_cast<int>(get_u32(is));
  s.hidden = static_cast<int>(get_u32(is));
  s.vocab_hash = get_u64(is);
  Model model(s);
  if (get_u64(is) != static_cast<std::uint64_t>(model.parameters().size())) {
    throw Error("checkpoint parameter count does not match its shape");
  }
  for (Eigen::Index i = 0; i < model.parameters().size(); ++i) {
    model.parameters()(i) = std::bit_cast<double>(get_u64(is));
  }
  return model;
}

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_checkpoint(os, model);
  if (!os) throw Error("failed writing " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_checkpoint(is);
}

void write_history_csv(std::ostream& os, std::span<const HistoryRow> history) {
  os << "update,train_loss,val_loss\n" << std::setprecision(17);
  for (const auto& h : history) os << h.update << ',' << h.train_loss << ',' << h.val_loss << '\n';
}

}  // namespace melvin
