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

#include "melvin/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "melvin/errors.hpp"
#include "melvin/optics.hpp"

namespace melvin {

std::string to_string(Split split) {
  switch (split) {
    case Split::kUnassigned: return "unassigned";
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kExtrapolation: return "extrapolation";
  }
  return "unassigned";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  if (s == "extrapolation") return Split::kExtrapolation;
  if (s == "unassigned") return Split::kUnassigned;
  throw StructuralError("unknown split '" + std::string(s) + "'");
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  std::string joined;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i) + 1).second) {
      throw VocabularyError("duplicate token '" + tokens_[i] + "'");
    }
    joined += tokens_[i];
    joined += '\n';
  }
  hash_ = fnv1a(joined);
}

Vocabulary Vocabulary::toolbox() {
  std::vector<std::string> tokens;
  for (const auto& e : melvin::toolbox()) tokens.push_back(to_token(e));
  return Vocabulary(std::move(tokens));
}

int Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) throw VocabularyError("unknown token '" + std::string(token) + "'");
  return it->second;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 1 || index >= size()) {
    throw VocabularyError("token index " + std::to_string(index) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(index - 1)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

std::vector<int> Vocabulary::encode(std::string_view setup) const {
  return encode(split_tokens(setup));
}

std::vector<std::string> Vocabulary::decode(std::span<const int> indices) const {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(token(i));
  return out;
}

std::vector<std::string> split_tokens(std::string_view setup) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < setup.size()) {
    while (pos < setup.size() && setup[pos] == ' ') ++pos;
    if (pos >= setup.size()) break;
    const auto end = std::min(setup.find(' ', pos), setup.size());
    out.emplace_back(setup.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

void assign_split(std::span<Record> records, double test_fraction, std::uint64_t seed,
                  int extrapolation_rank) {
  if (test_fraction < 0.0 || test_fraction > 1.0) {
    throw ConfigurationError("test fraction must lie in [0, 1]");
  }
  Rng rng(seed);
  for (auto& r : records) {
    // One draw per record keeps the assignment of later records independent
    // of how earlier ones were classified.
    const bool to_test = rng.bernoulli(test_fraction);
    r.fold.reset();
    if (r.fold_rank >= extrapolation_rank) {
      r.split = Split::kExtrapolation;
    } else {
      r.split = to_test ? Split::kTest : Split::kTrain;
    }
  }
}

void assign_folds(std::span<Record> train_records, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& r : train_records) {
    if (r.split != Split::kTrain) throw StructuralError("assign_folds takes train records only");
    if (r.fold_rank >= kNumFolds) {
      throw StructuralError("train record with leading rank " + std::to_string(r.fold_rank) +
                            " has no cross-validation fold");
    }
    const bool coin = rng.bernoulli(0.5);
    r.fold = r.fold_rank < 2 ? (coin ? 1 : 0) : r.fold_rank;
  }
}

std::vector<Record> deduplicate(std::vector<Record> records) {
  std::unordered_set<std::string> seen;
  std::vector<Record> out;
  out.reserve(records.size());
  for (auto& r : records) {
    if (seen.insert(r.setup).second) out.push_back(std::move(r));
  }
  return out;
}

BalancedSampler::BalancedSampler(std::span<const Record> records, Task task, int batch_size,
                                 std::uint64_t seed)
    : rng_(seed), batch_size_(batch_size) {
  std::map<int, std::vector<std::size_t>> classes;
  if (task == Task::kEntanglement) {
    classes[0];
    classes[1];
    for (std::size_t i = 0; i < records.size(); ++i) classes[records[i].y_e ? 1 : 0].push_back(i);
    if (batch_size <= 0 || batch_size % 2 != 0) {
      throw ConfigurationError("entanglement batches need an even positive batch size");
    }
  } else {
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].srv) classes[records[i].fold_rank].push_back(i);
    }
    if (classes.empty()) throw ConfigurationError("no records with an SRV target");
    if (batch_size < static_cast<int>(classes.size())) {
      throw ConfigurationError("batch size " + std::to_string(batch_size) + " is smaller than the " +
                               std::to_string(classes.size()) + " SRV classes");
    }
  }
  for (auto& [key, items] : classes) {
    if (items.empty()) {
      throw ConfigurationError(task == Task::kEntanglement
                                   ? std::string(key ? "no positive" : "no negative") + " records to balance"
                                   : "empty SRV class " + std::to_string(key));
    }
    keys_.push_back(key);
    Pool pool{std::move(items), 0};
    rng_.shuffle(pool.items);
    pools_.push_back(std::move(pool));
  }
}

std::size_t BalancedSampler::draw(Pool& pool) {
  if (pool.cursor == pool.items.size()) {
    rng_.shuffle(pool.items);
    pool.cursor = 0;
  }
  return pool.items[pool.cursor++];
}

std::vector<std::size_t> BalancedSampler::next() {
  const std::size_t classes = pools_.size();
  const std::size_t base = static_cast<std::size_t>(batch_size_) / classes;
  const std::size_t extra = static_cast<std::size_t>(batch_size_) % classes;
  const std::size_t start = (batches_ * extra) % classes;
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(batch_size_));
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t offset = (c + classes - start) % classes;
    const std::size_t count = base + (offset < extra ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i) out.push_back(draw(pools_[c]));
  }
  ++batches_;
  return out;
}

Batch make_batch(std::span<const Record> records, std::span<const std::size_t> indices,
                 const Vocabulary& vocab) {
  Batch batch;
  batch.sequences.reserve(indices.size());
  for (std::size_t i : indices) {
    const Record& r = records[i];
    batch.sequences.push_back(vocab.encode(r.setup));
    batch.y_e.push_back(r.y_e ? 1.0 : 0.0);
    batch.srv.push_back(r.srv.value_or(SrvLabel{}));
  }
  return batch;
}

Batch make_batch(std::span<const Record> records, const Vocabulary& vocab) {
  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(records, all, vocab);
}

std::string to_json_line(const Record& r) {
  std::string out = "{\"setup\": " + nlohmann::json(r.setup).dump() + ", \"y_e\": " + (r.y_e ? "1" : "0");
  out += ", \"srv\": ";
  out += r.srv ? "[" + std::to_string(r.srv->n) + "," + std::to_string(r.srv->m) + "," +
                     std::to_string(r.srv->k) + "]"
               : "null";
  out += ", \"fold_rank\": " + std::to_string(r.fold_rank);
  out += ", \"split\": \"" + to_string(r.split) + "\"";
  out += ", \"fold\": " + (r.fold ? std::to_string(*r.fold) : std::string("null"));
  out += "}";
  return out;
}

Record parse_json_line(std::string_view line) {
  Record r;
  try {
    const auto j = nlohmann::json::parse(line);
    r.setup = j.at("setup").get<std::string>();
    r.y_e = j.at("y_e").get<int>() != 0;
    if (!j.at("srv").is_null()) {
      const auto& s = j.at("srv");
      if (!s.is_array() || s.size() != 3) throw StructuralError("srv must be a 3-element array");
      r.srv = SrvLabel{s[0].get<int>(), s[1].get<int>(), s[2].get<int>()};
    }
    r.fold_rank = j.at("fold_rank").get<int>();
    r.split = j.contains("split") ? parse_split(j.at("split").get<std::string>()) : Split::kUnassigned;
    if (j.contains("fold") && !j.at("fold").is_null()) r.fold = j.at("fold").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(std::string("bad dataset record: ") + e.what());
  }
  return r;
}

void write_jsonl(std::ostream& os, std::span<const Record> records) {
  for (const auto& r : records) os << to_json_line(r) << '\n';
}

std::vector<Record> read_jsonl(std::istream& is) {
  std::vector<Record> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(parse_json_line(line));
  }
  return out;
}

void write_jsonl(const std::string& path, std::span<const Record> records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_jsonl(os, records);
  if (!os) throw Error("failed writing " + path);
}

std::vector<Record> read_jsonl(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_jsonl(is);
}

std::map<int, RankCount> rank_counts(std::span<const Record> records) {
  std::map<int, RankCount> out;
  for (const auto& r : records) {
    auto& c = out[r.fold_rank];
    (r.y_e ? c.positives : c.negatives)++;
  }
  return out;
}

void write_stats_csv(std::ostream& os, std::span<const Record> records) {
  os << "fold_rank,positives,negatives\n";
  for (const auto& [rank, c] : rank_counts(records)) {
    os << rank << ',' << c.positives << ',' << c.negatives << '\n';
  }
}

}  // namespace melvin
