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

#include "melvin/generate.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <unordered_set>

#include "melvin/errors.hpp"
#include "melvin/labeler.hpp"
#include "melvin/random.hpp"

namespace melvin {

Record simulate_record(const Setup& setup, int max_oam) {
  const SampleLabel l = label(run_setup(setup, max_oam));
  Record r;
  r.setup = to_string(setup);
  r.y_e = l.y_e;
  r.srv = l.srv;
  r.fold_rank = l.fold_rank;
  return r;
}

int default_thread_count() {
  if (const char* env = std::getenv("MELVIN_SURROGATE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<Record> generate_records(const GenerateConfig& config) {
  if (config.count < 0) throw ConfigurationError("count must be non-negative");
  const int threads = std::max(1, config.threads);
  constexpr std::size_t kMaxChunk = 4096;
  std::vector<Record> out;
  out.reserve(static_cast<std::size_t>(config.count));
  std::unordered_set<std::string> seen;
  std::uint64_t next_index = 0;

  while (static_cast<long>(out.size()) < config.count) {
    // Records are consumed in index order, so the chunk size never changes the output.
    const auto remaining = static_cast<std::size_t>(config.count) - out.size();
    const std::size_t chunk = std::min(kMaxChunk, remaining + remaining / 8 + 16);
    std::vector<Record> batch(chunk);
    const auto work = [&](int worker) {
      for (std::size_t i = static_cast<std::size_t>(worker); i < chunk; i += static_cast<std::size_t>(threads)) {
        const Setup s = random_setup(derive_seed(config.seed, "setup", next_index + i));
        batch[i] = simulate_record(s, config.max_oam);
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
    next_index += chunk;
    for (auto& r : batch) {
      if (static_cast<long>(out.size()) == config.count) break;
      if (seen.insert(r.setup).second) out.push_back(std::move(r));
    }
  }

  assign_split(out, config.test_fraction, derive_seed(config.seed, "split"), config.extrapolation_rank);
  std::vector<Record*> train;
  for (auto& r : out) {
    if (r.split == Split::kTrain) train.push_back(&r);
  }
  // assign_folds works on a contiguous span; gather, assign, scatter back.
  std::vector<Record> train_records;
  train_records.reserve(train.size());
  for (auto* r : train) train_records.push_back(*r);
  assign_folds(train_records, derive_seed(config.seed, "folds"));
  for (std::size_t i = 0; i < train.size(); ++i) train[i]->fold = train_records[i].fold;
  return out;
}

}  // namespace melvin
