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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "melvin/labeler.hpp"
#include "melvin/lstm.hpp"
#include "melvin/random.hpp"

namespace melvin {

/// Leading Schmidt rank from which samples go to the extrapolation set.
inline constexpr int kExtrapolationRank = 9;
inline constexpr int kNumFolds = 9;
inline constexpr double kDefaultTestFraction = 0.2;

enum class Split { kUnassigned, kTrain, kTest, kExtrapolation };

std::string to_string(Split split);
Split parse_split(std::string_view s);

struct Record {
  std::string setup;  // space-separated element tokens
  bool y_e = false;
  std::optional<SrvLabel> srv;
  int fold_rank = 0;
  Split split = Split::kUnassigned;
  std::optional<int> fold;

  bool operator==(const Record&) const = default;
};

/// Token <-> index map. Index 0 is reserved for padding.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens);

  /// Every token the optical toolbox can emit.
  static Vocabulary toolbox();

  /// Throws VocabularyError for unknown tokens.
  int index(std::string_view token) const;
  const std::string& token(int index) const;
  /// Number of indices including padding.
  int size() const { return static_cast<int>(tokens_.size()) + 1; }
  std::uint64_t hash() const { return hash_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  std::vector<int> encode(std::string_view setup) const;
  std::vector<std::string> decode(std::span<const int> indices) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  std::uint64_t hash_ = 0;
};

std::vector<std::string> split_tokens(std::string_view setup);

/// Records with fold_rank >= extrapolation_rank go to the extrapolation set;
/// the rest are drawn into the test set iid with probability test_fraction.
void assign_split(std::span<Record> records, double test_fraction, std::uint64_t seed,
                  int extrapolation_rank = kExtrapolationRank);

/// Clusters train records by leading Schmidt rank: ranks 0 and 1 are pooled and
/// split into folds 0/1 at random, rank r in 2..8 becomes fold r.
void assign_folds(std::span<Record> train_records, std::uint64_t seed);

/// Keeps the first occurrence of each setup string.
std::vector<Record> deduplicate(std::vector<Record> records);

/// Infinite stream of class-balanced index batches.
///
/// Entanglement: classes are negatives/positives, half a batch each. SRV:
/// classes are the distinct leading ranks among records carrying an SRV; when
/// the batch size is not a multiple of the class count the remainder rotates
/// over the classes so long-run frequencies stay equal. Each class is drawn from
/// its own reshuffled cycle, so small classes repeat (sampling with replacement
/// across cycles).
class BalancedSampler {
 public:
  BalancedSampler(std::span<const Record> records, Task task, int batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();

  const std::vector<int>& class_keys() const { return keys_; }

 private:
  struct Pool {
    std::vector<std::size_t> items;
    std::size_t cursor = 0;
  };

  std::size_t draw(Pool& pool);

  Rng rng_;
  int batch_size_;
  std::vector<int> keys_;
  std::vector<Pool> pools_;
  std::size_t batches_ = 0;
};

/// Gathers records into a model batch. Records without an SRV get (1,1,1) in
/// the srv column, which only the SRV task reads.
Batch make_batch(std::span<const Record> records, std::span<const std::size_t> indices,
                 const Vocabulary& vocab);
Batch make_batch(std::span<const Record> records, const Vocabulary& vocab);

std::string to_json_line(const Record& record);
Record parse_json_line(std::string_view line);
void write_jsonl(std::ostream& os, std::span<const Record> records);
std::vector<Record> read_jsonl(std::istream& is);
void write_jsonl(const std::string& path, std::span<const Record> records);
std::vector<Record> read_jsonl(const std::string& path);

struct RankCount {
  long positives = 0;
  long negatives = 0;
};

/// Positive/negative counts per leading Schmidt rank.
std::map<int, RankCount> rank_counts(std::span<const Record> records);
/// CSV with header fold_rank,positives,negatives.
void write_stats_csv(std::ostream& os, std::span<const Record> records);

}  // namespace melvin
