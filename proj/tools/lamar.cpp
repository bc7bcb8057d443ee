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

// Command-line entry point.
//   lamar run --config run.json --stages generate,enrich,train,evaluate
//   lamar synth --out data/synthetic

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "lamar/pipeline.hpp"
#include "lamar/synthetic.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& stages,
                const std::optional<std::uint64_t>& seed, const std::string& out, bool quiet) {
  using namespace lamar;
  try {
    RunConfig config = RunConfig::load(config_path);
    if (seed) {
      config.seed = *seed;
      config.model.seed = *seed;
    }
    if (!out.empty()) config.paths.output_dir = out;
    pipeline::Hooks hooks;
    hooks.log = quiet ? nullptr : &std::cout;
    pipeline::Pipeline p(std::move(config), hooks);
    p.run(pipeline::parse_stages(stages));
    return pipeline::kExitOk;
  } catch (const pipeline::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pipeline::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::kExitStage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lamar: LLM-enriched item text for sequential recommenders"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run pipeline stages from a config file");
  std::string config_path;
  std::string stages = "all";
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
  run->add_option("-c,--config", config_path, "run config (JSON)")->required();
  run->add_option("-s,--stages", stages,
                  "comma-separated: propose,generate,enrich,train,evaluate,diversity,report or all (every stage but report)");
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("-o,--out", out, "override paths.output_dir");
  run->add_flag("-q,--quiet", quiet, "no progress output");

  auto* synth = app.add_subcommand("synth", "write the synthetic theme corpus");
  std::string synth_out;
  lamar::synthetic::Options opts;
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--items", opts.n_items);
  synth->add_option("--users", opts.n_users);
  synth->add_option("--themes", opts.n_themes);
  synth->add_option("--seed", opts.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : lamar::pipeline::kExitConfig;
  }

  if (*run) return run_command(config_path, stages, seed, out, quiet);
  try {
    const auto files = lamar::synthetic::write_corpus(synth_out, opts);
    std::cout << "wrote " << files.config.string() << "\n";
    return 0;
  } catch (const lamar::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return lamar::pipeline::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lamar::pipeline::kExitStage;
  }
}
