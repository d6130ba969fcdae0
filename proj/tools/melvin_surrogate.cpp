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

// Command-line entry point: generate, split, train, evaluate, sweep, dump-state.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "melvin/dataset.hpp"
#include "melvin/errors.hpp"
#include "melvin/generate.hpp"
#include "melvin/labeler.hpp"
#include "melvin/metrics.hpp"
#include "melvin/optics.hpp"
#include "melvin/pipeline.hpp"
#include "melvin/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfiguration = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitVocabulary = 4;

/// JSON objects as CLI11 config files; keys are long option names. A top-level
/// "command" key scopes the remaining keys to that subcommand, so run snapshots
/// load back unchanged.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<std::string> parents;
    if (j.contains("command") && j["command"].is_string()) {
      parents.push_back(j["command"].get<std::string>());
      j.erase("command");
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, parents, items);
    return items;
  }

 private:
  static void collect(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        collect(value, nested, out);
        continue;
      }
      if (value.is_null()) continue;
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }

  static std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }
};

// CLI11 reads config files only at the top level, so a --config given after
// the subcommand is hoisted in front of it.
std::vector<std::string> hoist_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> front, rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      front = {args[i], args[i + 1]};
      ++i;
    } else if (args[i].rfind("--config=", 0) == 0) {
      front = {args[i]};
    } else {
      rest.push_back(args[i]);
    }
  }
  front.insert(front.end(), rest.begin(), rest.end());
  std::reverse(front.begin(), front.end());  // CLI11 consumes the vector from the back
  return front;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw melvin::Error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw melvin::Error("failed writing " + path.string());
}

/// Resolved-config snapshot written next to every run's outputs.
void write_snapshot(const fs::path& dir, const std::string& command, json config) {
  json out;
  out["command"] = command;
  for (auto& [k, v] : config.items()) out[k] = v;
  write_text(dir / "config.json", out.dump(2) + "\n");
}

fs::path prepare_out(const std::string& out) {
  const fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

std::vector<melvin::Record> select(const std::vector<melvin::Record>& records, melvin::Split split) {
  std::vector<melvin::Record> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

// Options shared by every command that trains a model.
struct TrainingOptions {
  int hidden = 128;
  int embed = 64;
  double lr = melvin::TrainConfig{}.learning_rate;
  double momentum = melvin::TrainConfig{}.momentum;
  int batch = melvin::TrainConfig{}.batch_size;
  int max_updates = melvin::TrainConfig{}.max_updates;
  int eval_every = melvin::TrainConfig{}.eval_every;
  int patience = melvin::TrainConfig{}.patience;
  double val_fraction = 0.1;

  void add_to(CLI::App* app) {
    app->add_option("--hidden", hidden, "LSTM hidden units")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--embed", embed, "token embedding size")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "SGD learning rate")->capture_default_str();
    app->add_option("--momentum", momentum, "SGD momentum")->capture_default_str();
    app->add_option("--batch", batch, "batch size")->capture_default_str();
    app->add_option("--max-updates", max_updates, "update budget")->capture_default_str();
    app->add_option("--eval-every", eval_every, "updates between validation passes")->capture_default_str();
    app->add_option("--patience", patience, "non-improving validations before stopping")->capture_default_str();
    app->add_option("--val-fraction", val_fraction, "share of training records held out for validation")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.9));
  }

  melvin::TrainConfig config(melvin::Task task, std::uint64_t seed) const {
    melvin::TrainConfig c;
    c.task = task;
    c.learning_rate = lr;
    c.momentum = momentum;
    c.batch_size = batch;
    c.max_updates = max_updates;
    c.eval_every = eval_every;
    c.patience = patience;
    c.seed = seed;
    return c;
  }

  void to_json(json& j) const {
    j["hidden"] = hidden;
    j["embed"] = embed;
    j["lr"] = lr;
    j["momentum"] = momentum;
    j["batch"] = batch;
    j["max-updates"] = max_updates;
    j["eval-every"] = eval_every;
    j["patience"] = patience;
    j["val-fraction"] = val_fraction;
  }
};

struct CriterionOptions {
  double tau = 0.5;
  double radius = 3.0;
  std::string match_mode = "true_label";

  void add_to(CLI::App* app) {
    app->add_option("--tau", tau, "entanglement threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    app->add_option("--radius", radius, "SRV radius")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--match-mode", match_mode, "true_label or target_set")
        ->capture_default_str()
        ->check(CLI::IsMember({"true_label", "target_set"}));
  }

  melvin::InterestCriterion criterion() const {
    return {tau, radius, melvin::parse_match_mode(match_mode)};
  }

  void to_json(json& j) const {
    j["tau"] = tau;
    j["radius"] = radius;
    j["match-mode"] = match_mode;
  }
};

int run_generate(long count, std::uint64_t seed, double test_fraction, int max_oam, int extrapolation_rank,
                 const std::string& out) {
  melvin::GenerateConfig g;
  g.count = count;
  g.seed = seed;
  g.test_fraction = test_fraction;
  g.max_oam = max_oam;
  g.extrapolation_rank = extrapolation_rank;
  g.threads = melvin::default_thread_count();
  const auto records = melvin::generate_records(g);

  const fs::path dir = prepare_out(out);
  melvin::write_jsonl((dir / "dataset.jsonl").string(), records);
  std::ostringstream stats;
  melvin::write_stats_csv(stats, records);
  write_text(dir / "stats.csv", stats.str());
  json cfg;
  cfg["count"] = count;
  cfg["seed"] = seed;
  cfg["test-fraction"] = test_fraction;
  cfg["max-oam"] = max_oam;
  cfg["extrapolation-rank"] = extrapolation_rank;
  cfg["out"] = out;
  write_snapshot(dir, "generate", cfg);
  std::cerr << "generated " << records.size() << " records in " << dir.string() << "\n";
  return 0;
}

int run_split(const std::string& data, std::uint64_t seed, double test_fraction, int extrapolation_rank,
              std::optional<int> max_rank, const std::string& out) {
  auto records = melvin::read_jsonl(data);
  if (max_rank) {
    std::erase_if(records, [&](const melvin::Record& r) { return r.fold_rank > *max_rank; });
  }
  melvin::assign_split(records, test_fraction, melvin::derive_seed(seed, "split"), extrapolation_rank);
  std::vector<melvin::Record> train;
  for (auto& r : records) {
    if (r.split == melvin::Split::kTrain) train.push_back(r);
  }
  melvin::assign_folds(train, melvin::derive_seed(seed, "folds"));
  std::size_t t = 0;
  for (auto& r : records) {
    if (r.split == melvin::Split::kTrain) r = train[t++];
  }

  const fs::path dir = prepare_out(out);
  melvin::write_jsonl((dir / "dataset.jsonl").string(), records);
  std::ostringstream stats;
  melvin::write_stats_csv(stats, records);
  write_text(dir / "stats.csv", stats.str());
  json cfg;
  cfg["data"] = data;
  cfg["seed"] = seed;
  cfg["test-fraction"] = test_fraction;
  cfg["extrapolation-rank"] = extrapolation_rank;
  cfg["max-rank"] = max_rank ? json(*max_rank) : json(nullptr);
  cfg["out"] = out;
  write_snapshot(dir, "split", cfg);
  return 0;
}

int run_train(const std::string& data, const std::string& task_name, std::uint64_t seed,
              const TrainingOptions& opts, const std::string& out) {
  const melvin::Task task = melvin::parse_task(task_name);
  const auto train = select(melvin::read_jsonl(data), melvin::Split::kTrain);
  const melvin::Vocabulary vocab = melvin::Vocabulary::toolbox();
  const auto result = melvin::train_task(train, vocab, opts.embed, opts.hidden, opts.config(task, seed),
                                         opts.val_fraction);

  const fs::path dir = prepare_out(out);
  melvin::save_checkpoint((dir / "model.bin").string(), result.model);
  std::ostringstream history;
  melvin::write_history_csv(history, result.history);
  write_text(dir / "history.csv", history.str());
  json cfg;
  cfg["data"] = data;
  cfg["task"] = melvin::to_string(task);
  cfg["seed"] = seed;
  opts.to_json(cfg);
  cfg["out"] = out;
  write_snapshot(dir, "train", cfg);
  if (result.diverged) {
    std::cerr << "training diverged; best snapshot from update " << result.best_update << " kept\n";
    return kExitDiverged;
  }
  std::cerr << "best validation loss at update " << result.best_update << "\n";
  return 0;
}

void write_sweep_outputs(const fs::path& dir, const melvin::SweepResult& s) {
  std::ostringstream csv;
  melvin::write_sweep_csv(csv, s);
  write_text(dir / "sweep.csv", csv.str());
  std::ostringstream summary;
  summary << "r,average_precision\n";
  const auto radii = melvin::default_radius_grid();
  for (std::size_t i = 0; i < s.average_precision.size(); ++i) {
    summary << melvin::format_optional(s.rows[i * (s.rows.size() / s.average_precision.size())].radius) << ','
            << melvin::format_optional(s.average_precision[i]) << '\n';
  }
  summary << "mAP," << melvin::format_optional(s.mean_average_precision) << '\n';
  write_text(dir / "average_precision.csv", summary.str());
}

melvin::Split parse_eval_split(const std::string& s) {
  const melvin::Split split = melvin::parse_split(s);
  if (split == melvin::Split::kUnassigned) throw melvin::ConfigurationError("cannot evaluate unassigned records");
  return split;
}

int run_sweep(const std::string& data, const std::string& ent_model, const std::string& srv_model,
              const std::string& split_name, const std::string& match_mode, const std::string& out,
              const std::string& command) {
  const auto records = select(melvin::read_jsonl(data), parse_eval_split(split_name));
  const melvin::Vocabulary vocab = melvin::Vocabulary::toolbox();
  const auto preds = melvin::predict_batch(melvin::load_checkpoint(ent_model), melvin::load_checkpoint(srv_model),
                                           records, vocab);
  const auto taus = melvin::default_tau_grid();
  const auto radii = melvin::default_radius_grid();
  const auto s = melvin::sweep(records, preds, taus, radii, melvin::parse_match_mode(match_mode));

  const fs::path dir = prepare_out(out);
  write_sweep_outputs(dir, s);
  json cfg;
  cfg["data"] = data;
  cfg["ent-model"] = ent_model;
  cfg["srv-model"] = srv_model;
  cfg["split"] = split_name;
  cfg["match-mode"] = match_mode;
  cfg["out"] = out;
  write_snapshot(dir, command, cfg);
  std::cout << "mAP " << melvin::format_optional(s.mean_average_precision) << "\n";
  return 0;
}

int run_evaluate(const std::string& data, const std::string& mode, const std::string& ent_model,
                 const std::string& srv_model, const std::string& split_name, const CriterionOptions& crit,
                 const TrainingOptions& opts, std::uint64_t seed, const std::string& out) {
  if (mode == "sweep") return run_sweep(data, ent_model, srv_model, split_name, crit.match_mode, out, "evaluate");
  const auto records = melvin::read_jsonl(data);
  const melvin::Vocabulary vocab = melvin::Vocabulary::toolbox();
  const melvin::InterestCriterion criterion = crit.criterion();
  std::vector<melvin::FoldReport> reports;

  if (mode == "ccv") {
    melvin::PipelineConfig pc;
    pc.embed = opts.embed;
    pc.hidden = opts.hidden;
    pc.entanglement = opts.config(melvin::Task::kEntanglement, seed);
    pc.srv = opts.config(melvin::Task::kSrv, seed);
    pc.val_fraction = opts.val_fraction;
    pc.seed = seed;
    std::vector<int> folds;
    for (int f = 0; f < melvin::kNumFolds; ++f) {
      if (std::any_of(records.begin(), records.end(), [f](const auto& r) { return r.fold == f; })) {
        folds.push_back(f);
      }
    }
    reports = melvin::ccv_run(records, vocab, pc, criterion, folds);
  } else {
    if (ent_model.empty() || srv_model.empty()) {
      throw melvin::ConfigurationError(mode + " mode needs --ent-model and --srv-model");
    }
    const auto split = mode == "extrapolation" ? melvin::Split::kExtrapolation : melvin::Split::kTest;
    const auto subset = select(records, split);
    const auto preds = melvin::predict_batch(melvin::load_checkpoint(ent_model),
                                             melvin::load_checkpoint(srv_model), subset, vocab);
    reports.push_back({mode, static_cast<long>(subset.size()), melvin::confusion(subset, preds, criterion)});
  }

  const fs::path dir = prepare_out(out);
  std::ostringstream metrics;
  melvin::write_metrics_header(metrics);
  for (const auto& r : reports) melvin::write_metrics_row(metrics, r.name, crit.tau, crit.radius, r.metrics);
  write_text(dir / "metrics.csv", metrics.str());
  std::ostringstream summary;
  melvin::write_summary(summary, reports);
  write_text(dir / "summary.txt", summary.str());
  std::cout << summary.str();

  json cfg;
  cfg["data"] = data;
  cfg["mode"] = mode;
  if (mode == "ccv") {
    cfg["seed"] = seed;
    opts.to_json(cfg);
  } else {
    cfg["ent-model"] = ent_model;
    cfg["srv-model"] = srv_model;
  }
  crit.to_json(cfg);
  cfg["out"] = out;
  write_snapshot(dir, "evaluate", cfg);
  return 0;
}

int run_dump_state(const std::string& setup_text, std::optional<std::uint64_t> seed, int max_oam,
                   const std::string& out) {
  const melvin::Setup setup = seed ? melvin::random_setup(*seed) : melvin::parse_setup(setup_text);
  const melvin::SimResult result = melvin::run_setup(setup, max_oam);
  const melvin::SampleLabel label = melvin::label(result);
  std::ostringstream os;
  os << "setup: " << melvin::to_string(setup) << "\n";
  os << "state: " << (result.valid() ? melvin::render(*result.state) : std::string("invalid")) << "\n";
  os << "postselect_prob: " << std::setprecision(10) << result.postselect_prob << "\n";
  os << "clipped_terms: " << result.clipped_terms << "\n";
  os << "srv: " << (label.srv ? melvin::to_string(*label.srv) : std::string("null")) << "\n";
  os << "y_e: " << (label.y_e ? 1 : 0) << "\n";
  os << "fold_rank: " << label.fold_rank << "\n";
  std::cout << os.str();
  if (!out.empty()) {
    const fs::path dir = prepare_out(out);
    write_text(dir / "state.txt", os.str());
    json cfg;
    cfg["setup"] = melvin::to_string(setup);
    cfg["max-oam"] = max_oam;
    cfg["out"] = out;
    write_snapshot(dir, "dump-state", cfg);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate models for quantum optics experiment design", "melvin-surrogate"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  std::string out;
  std::uint64_t seed = 0;

  // generate
  auto* gen = app.add_subcommand("generate", "simulate random setups into a labelled dataset");
  long count = 50000;
  double test_fraction = melvin::kDefaultTestFraction;
  int max_oam = melvin::kGenerationMaxOam;
  int extrapolation_rank = melvin::kExtrapolationRank;
  gen->add_option("--count", count, "number of unique setups")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "generation seed")->capture_default_str();
  gen->add_option("--test-fraction", test_fraction, "iid test share")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  gen->add_option("--max-oam", max_oam, "initial OAM cutoff per pair")->capture_default_str()->check(CLI::Range(0, 6));
  gen->add_option("--extrapolation-rank", extrapolation_rank, "leading rank moved to the extrapolation set")
      ->capture_default_str();
  gen->add_option("--out", out, "output directory")->required();

  // split
  auto* split = app.add_subcommand("split", "reassign splits and folds of an existing dataset");
  std::string data;
  std::optional<int> max_rank;
  split->add_option("--data", data, "dataset.jsonl")->required()->check(CLI::ExistingFile);
  split->add_option("--seed", seed, "split seed")->capture_default_str();
  split->add_option("--test-fraction", test_fraction, "iid test share")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  split->add_option("--extrapolation-rank", extrapolation_rank, "leading rank moved to the extrapolation set")
      ->capture_default_str();
  split->add_option("--max-rank", max_rank, "drop records whose leading rank exceeds this");
  split->add_option("--out", out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train one network on the train split");
  std::string task = "ent";
  TrainingOptions training;
  train->add_option("--data", data, "dataset.jsonl")->required()->check(CLI::ExistingFile);
  train->add_option("--task", task, "ent or srv")->capture_default_str()->check(CLI::IsMember({"ent", "srv"}));
  train->add_option("--seed", seed, "training seed")->capture_default_str();
  training.add_to(train);
  train->add_option("--out", out, "output directory")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score trained networks or run cluster cross validation");
  std::string mode = "test";
  std::string ent_model, srv_model, split_name = "test";
  CriterionOptions criterion;
  TrainingOptions ccv_training;
  eval->add_option("--data", data, "dataset.jsonl")->required()->check(CLI::ExistingFile);
  eval->add_option("--mode", mode, "test, extrapolation, ccv or sweep")
      ->capture_default_str()
      ->check(CLI::IsMember({"test", "extrapolation", "ccv", "sweep"}));
  eval->add_option("--ent-model", ent_model, "entanglement checkpoint");
  eval->add_option("--srv-model", srv_model, "SRV checkpoint");
  eval->add_option("--split", split_name, "records to sweep")->capture_default_str();
  eval->add_option("--seed", seed, "training seed for ccv mode")->capture_default_str();
  criterion.add_to(eval);
  ccv_training.add_to(eval);
  eval->add_option("--out", out, "output directory")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "tau and radius sweep with mean average precision");
  std::string sweep_match = "true_label";
  sw->add_option("--data", data, "dataset.jsonl")->required()->check(CLI::ExistingFile);
  sw->add_option("--ent-model", ent_model, "entanglement checkpoint")->required();
  sw->add_option("--srv-model", srv_model, "SRV checkpoint")->required();
  sw->add_option("--split", split_name, "test, extrapolation or train")->capture_default_str();
  sw->add_option("--match-mode", sweep_match, "true_label or target_set")
      ->capture_default_str()
      ->check(CLI::IsMember({"true_label", "target_set"}));
  sw->add_option("--out", out, "output directory")->required();

  // dump-state
  auto* dump = app.add_subcommand("dump-state", "simulate one setup and print its post-selected state");
  std::string setup_text;
  std::optional<std::uint64_t> setup_seed;
  int dump_oam = melvin::kDefaultMaxOam;
  auto* setup_opt = dump->add_option("--setup", setup_text, "space-separated element tokens");
  auto* seed_opt = dump->add_option("--seed", setup_seed, "simulate random_setup(seed) instead");
  setup_opt->excludes(seed_opt);
  dump->add_option("--max-oam", dump_oam, "initial OAM cutoff per pair")->capture_default_str()->check(CLI::Range(0, 6));
  dump->add_option("--out", out, "optional output directory");

  try {
    app.parse(hoist_config(argc, argv));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfiguration;
  }

  try {
    if (*gen) return run_generate(count, seed, test_fraction, max_oam, extrapolation_rank, out);
    if (*split) return run_split(data, seed, test_fraction, extrapolation_rank, max_rank, out);
    if (*train) return run_train(data, task, seed, training, out);
    if (*eval) {
      return run_evaluate(data, mode, ent_model, srv_model, split_name, criterion, ccv_training, seed, out);
    }
    if (*sw) return run_sweep(data, ent_model, srv_model, split_name, sweep_match, out, "sweep");
    if (*dump) return run_dump_state(setup_text, setup_seed, dump_oam, out);
  } catch (const melvin::VocabularyError& e) {
    std::cerr << "vocabulary error: " << e.what() << "\n";
    return kExitVocabulary;
  } catch (const melvin::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfiguration;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
