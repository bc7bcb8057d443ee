// Copyright 2026 The lamar Authors.
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

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lamar/config.hpp"
#include "lamar/errors.hpp"
#include "lamar/http.hpp"

namespace lamar::pipeline {

enum class Stage { kPropose, kGenerate, kEnrich, kTrain, kEvaluate, kDiversity, kReport };

std::string to_string(Stage s);

/// Comma-separated stage names, or "all". Returned in pipeline order.
std::vector<Stage> parse_stages(const std::string& list);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitStage = 3;
inline constexpr int kExitBackend = 4;

/// A stage failed; exit_code follows the CLI contract.
class StageError : public Error {
 public:
  StageError(Stage stage, int exit_code, const std::string& what)
      : Error("stage '" + to_string(stage) + "' failed: " + what),
        stage_(stage),
        exit_code_(exit_code) {}
  Stage stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  Stage stage_;
  int exit_code_;
};

/// Injection points for tests.
struct Hooks {
  /// Network transport for http backends; a real client when null.
  std::shared_ptr<http::Transport> transport;
  /// Signal timestamps (unix seconds); system clock when empty.
  std::function<std::int64_t()> clock;
  /// Progress log; silent when null.
  std::ostream* log = nullptr;
};

/// Output directory layout version, recorded in <out>/layout.json.
inline constexpr int kLayoutVersion = 1;

/// Runs stages in pipeline order. Every artifact is written atomically
/// under config.paths.output_dir:
///   signals/    proposal.json, generate_summary.json
///   enriched/   items.jsonl, sequences.jsonl, split.jsonl, coverage.json
///   checkpoints/ model.bin, train_log.json
///   reports/    metrics.{json,txt,csv}, similarity_*.{json,csv},
///               improvement.{json,txt,csv}
class Pipeline {
 public:
  explicit Pipeline(RunConfig config, Hooks hooks = {});

  /// Throws StageError (wrapping the cause) on the first failing stage.
  void run(const std::vector<Stage>& stages);

  /// Backend calls made by the last generate/propose stages of this object.
  std::size_t backend_calls() const { return backend_calls_; }
  const RunConfig& config() const { return config_; }

 private:
  void run_stage(Stage s);
  void validate_paths(const std::vector<Stage>& stages) const;
  void propose();
  void generate();
  void enrich();
  void train();
  void evaluate();
  void analyze_diversity();
  void report();
  void log(const std::string& line) const;

  RunConfig config_;
  Hooks hooks_;
  std::size_t backend_calls_ = 0;
};

}  // namespace lamar::pipeline
