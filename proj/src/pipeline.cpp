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

#include "lamar/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "lamar/io.hpp"
#include "lamar/random.hpp"
#include "lamar/text.hpp"

namespace lamar::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr Stage kOrder[] = {Stage::kPropose,  Stage::kGenerate,  Stage::kEnrich, Stage::kTrain,
                            Stage::kEvaluate, Stage::kDiversity, Stage::kReport};

std::string slug(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c) != 0) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "signal" : out;
}

void require(const fs::path& p, const std::string& what_to_run) {
  if (!fs::exists(p)) {
    throw MissingArtifactError("missing '" + p.string() + "'; run " + what_to_run + " first");
  }
}

}  // namespace

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kPropose: return "propose";
    case Stage::kGenerate: return "generate";
    case Stage::kEnrich: return "enrich";
    case Stage::kTrain: return "train";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kDiversity: return "diversity";
    case Stage::kReport: return "report";
  }
  return "unknown";
}

std::vector<Stage> parse_stages(const std::string& list) {
  std::set<Stage> wanted;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    name = text::trim(name);
    if (name.empty()) continue;
    if (name == "all") {
      // report compares two finished runs, so it is only run when named.
      for (Stage s : kOrder)
        if (s != Stage::kReport) wanted.insert(s);
      continue;
    }
    bool found = false;
    for (Stage s : kOrder) {
      if (to_string(s) == name) {
        wanted.insert(s);
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown stage '" + name + "'");
  }
  if (wanted.empty()) throw ConfigError("no stages requested");
  std::vector<Stage> out;
  for (Stage s : kOrder)
    if (wanted.count(s) > 0) out.push_back(s);
  return out;
}

Pipeline::Pipeline(RunConfig config, Hooks hooks)
    : config_(std::move(config)), hooks_(std::move(hooks)) {
  config_.validate();
}

void Pipeline::log(const std::string& line) const {
  if (hooks_.log != nullptr) *hooks_.log << line << '\n';
}

void Pipeline::validate_paths(const std::vector<Stage>& stages) const {
  auto has = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  auto need_file = [](const fs::path& p, const std::string& key) {
    if (p.empty()) throw ConfigError(key + " is not set");
    if (!fs::is_regular_file(p)) throw ConfigError(key + " '" + p.string() + "' does not exist");
  };
  const bool uses_corpus = has(Stage::kPropose) || has(Stage::kGenerate) || has(Stage::kEnrich);
  if (uses_corpus) need_file(config_.paths.items, "paths.items");
  if (has(Stage::kEnrich)) need_file(config_.paths.interactions, "paths.interactions");
  if (has(Stage::kGenerate) || has(Stage::kDiversity) ||
      (has(Stage::kEnrich) && !config_.signal_names.empty())) {
    if (config_.paths.signal_store.empty()) throw ConfigError("paths.signal_store is not set");
  }
  if (has(Stage::kPropose) || has(Stage::kGenerate)) {
    const auto& p = config_.prompting;
    for (const auto& [path, key] : {std::pair{p.proposal_template, "prompting.proposal_template"},
                                    std::pair{p.generation_template, "prompting.generation_template"},
                                    std::pair{p.candidate_template, "prompting.candidate_template"}}) {
      if (!path.empty()) need_file(path, key);
    }
    if (config_.backend.kind == llm::BackendKind::kDeterministicMock &&
        !config_.backend.mock_knowledge.empty()) {
      need_file(config_.backend.mock_knowledge, "backend.mock_knowledge");
    }
  }
  if (has(Stage::kGenerate)) {
    if (config_.signal_names.empty()) throw ConfigError("generate needs at least one signal name");
    if (config_.prompting.shots.size() != config_.prompting.shot_count) {
      throw ConfigError("prompting.shots has " + std::to_string(config_.prompting.shots.size()) +
                        " entries but shot_count is " +
                        std::to_string(config_.prompting.shot_count));
    }
  }
  if (has(Stage::kPropose) && config_.prompting.domain.empty()) {
    throw ConfigError("propose needs prompting.domain");
  }
  if (has(Stage::kReport) &&
      (config_.report.baseline_dir.empty() || config_.report.treatment_dir.empty())) {
    throw ConfigError("report needs report.baseline_dir and report.treatment_dir");
  }
}

void Pipeline::run(const std::vector<Stage>& stages) {
  validate_paths(stages);
  io::write_file_atomic(config_.paths.output_dir / "layout.json",
                        json{{"layout_version", kLayoutVersion}}.dump() + "\n");
  for (Stage s : kOrder) {
    if (std::find(stages.begin(), stages.end(), s) == stages.end()) continue;
    log("[" + to_string(s) + "]");
    try {
      run_stage(s);
    } catch (const StageError&) {
      throw;
    } catch (const ConfigError& e) {
      throw StageError(s, kExitConfig, e.what());
    } catch (const BackendUnavailableError& e) {
      throw StageError(s, kExitBackend, e.what());
    } catch (const std::exception& e) {
      throw StageError(s, kExitStage, e.what());
    }
  }
}

void Pipeline::run_stage(Stage s) {
  switch (s) {
    case Stage::kPropose: return propose();
    case Stage::kGenerate: return generate();
    case Stage::kEnrich: return enrich();
    case Stage::kTrain: return train();
    case Stage::kEvaluate: return evaluate();
    case Stage::kDiversity: return analyze_diversity();
    case Stage::kReport: return report();
  }
}

void Pipeline::propose() {
  const auto load = corpus::load_catalog(config_.paths.items, config_.corpus.field_map);
  const auto& items = load.catalog.items();
  std::vector<const ItemRecord*> all;
  for (const auto& [_, r] : items) all.push_back(&r);
  Rng rng = Rng::derive(config_.seed, 0x70726f70ULL);
  rng.shuffle(std::span<const ItemRecord*>(all));
  const std::size_t n = std::min(config_.prompting.proposal_examples, all.size());
  std::vector<ItemRecord> samples;
  for (std::size_t i = 0; i < std::max<std::size_t>(n, 1); ++i) samples.push_back(*all[i]);

  const auto templates =
      prompting::TemplateSet::load(config_.prompting.proposal_template,
                                   config_.prompting.generation_template,
                                   config_.prompting.candidate_template);
  const auto prompt =
      prompting::render_proposal_prompt(templates, config_.prompting.domain, samples, n);
  const fs::path out = config_.paths.output_dir / "signals" / "proposal.json";
  if (fs::exists(out)) {
    const json prev = json::parse(io::read_file(out), nullptr, false);
    if (!prev.is_discarded() && prev.value("prompt_hash", "") == prompt.content_hash &&
        prev.value("model_id", "") == config_.backend.model_id) {
      log("propose: cached proposal is current");
      return;
    }
  }
  auto backend = llm::make_backend(config_.backend, hooks_.transport);
  const auto completion = backend->generate(prompt);
  backend_calls_ += backend->calls();
  io::write_file_atomic(out, json{{"domain", config_.prompting.domain},
                                  {"model_id", backend->model_id()},
                                  {"prompt_hash", prompt.content_hash},
                                  {"prompt", prompt.text},
                                  {"proposal", text::trim(completion.text)}}
                                     .dump(2) +
                                 "\n");
  log("propose: " + text::trim(completion.text));
}

void Pipeline::generate() {
  const auto load = corpus::load_catalog(config_.paths.items, config_.corpus.field_map);
  const auto templates =
      prompting::TemplateSet::load(config_.prompting.proposal_template,
                                   config_.prompting.generation_template,
                                   config_.prompting.candidate_template);
  auto backend = llm::make_backend(config_.backend, hooks_.transport);
  llm::SignalStore store(config_.paths.signal_store);

  struct Job {
    const ItemRecord* item;
    const std::string* name;
  };
  std::vector<Job> jobs;
  for (const auto& name : config_.signal_names)
    for (const auto& [_, item] : load.catalog.items()) jobs.push_back({&item, &name});

  llm::CachedGenerationOptions options;
  options.filter = config_.quality_filter;
  options.max_filter_attempts = config_.max_filter_attempts;
  options.clock = hooks_.clock;

  // The mock is local and pure, so one worker keeps the store's line order
  // reproducible; remote backends get max_in_flight workers.
  const std::size_t workers =
      config_.backend.kind == llm::BackendKind::kDeterministicMock
          ? 1
          : static_cast<std::size_t>(std::max(1, config_.backend.max_in_flight));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> hits{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::vector<std::string> rejected;
  std::exception_ptr failure;

  auto work = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      try {
        if (store.lookup(job.item->item_id, *job.name, backend->model_id())) {
          ++hits;
          continue;
        }
        const auto prompt = prompting::render_generation_prompt(
            templates, *job.name, config_.prompting.shots, *job.item, config_.prompting.shot_count);
        llm::generate_signal_cached(store, *backend, *job.item, *job.name, prompt, options);
      } catch (const SignalQualityError&) {
        std::lock_guard lock(mu);
        rejected.push_back(job.item->item_id + " / " + *job.name);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        stop = true;
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  backend_calls_ += backend->calls();
  if (failure) std::rethrow_exception(failure);

  std::sort(rejected.begin(), rejected.end());
  std::size_t stored = 0;
  for (const auto& job : jobs)
    if (store.lookup(job.item->item_id, *job.name, backend->model_id())) ++stored;
  io::write_file_atomic(config_.paths.output_dir / "signals" / "generate_summary.json",
                        json{{"model_id", backend->model_id()},
                             {"signal_names", config_.signal_names},
                             {"requested", jobs.size()},
                             {"stored", stored},
                             {"rejected", rejected}}
                                .dump(2) +
                            "\n");
  log("generate: " + std::to_string(jobs.size()) + " requested, " + std::to_string(hits.load()) +
      " cache hits, " + std::to_string(backend->calls()) + " backend calls, " +
      std::to_string(rejected.size()) + " rejected");
}

void Pipeline::enrich() {
  std::unique_ptr<llm::SignalStore> store;
  if (!config_.signal_names.empty()) {
    if (!fs::exists(config_.paths.signal_store)) {
      throw MissingArtifactError("signal store '" + config_.paths.signal_store.string() +
                                 "' not found; run generate first");
    }
    store = std::make_unique<llm::SignalStore>(config_.paths.signal_store);
  }
  const auto load = corpus::load_catalog(config_.paths.items, config_.corpus.field_map);
  const auto seqs = corpus::build_sequences(config_.paths.interactions, load.catalog,
                                            config_.corpus.field_map, config_.corpus.min_len);
  const auto split = corpus::split_leave_one_out(
      seqs.sequences, load.catalog,
      {config_.corpus.pool_size, config_.corpus.history_len, config_.seed});

  enrichment::Coverage item_coverage;
  const auto texts =
      enrichment::flatten_catalog(load.catalog, store.get(), config_.signal_names,
                                  config_.backend.model_id, config_.enrichment.limits, &item_coverage);
  enrichment::Coverage seq_coverage;
  std::vector<enrichment::EnrichedSequence> enriched;
  enriched.reserve(seqs.sequences.size());
  for (const auto& s : seqs.sequences) {
    enriched.push_back(enrichment::enrich_sequence(s, load.catalog, store.get(),
                                                   config_.signal_names, config_.backend.model_id,
                                                   &seq_coverage,
                                                   config_.enrichment.max_sequence_len));
  }

  const fs::path dir = config_.paths.output_dir / "enriched";
  enrichment::write_item_texts(dir / "items.jsonl", texts);
  enrichment::write_sequences(dir / "sequences.jsonl", enriched);
  corpus::write_split(dir / "split.jsonl", split);
  io::write_file_atomic(
      dir / "coverage.json",
      json{{"items", {{"found", item_coverage.found}, {"requested", item_coverage.requested}}},
           {"sequences", {{"found", seq_coverage.found}, {"requested", seq_coverage.requested}}},
           {"catalog_size", load.catalog.size()},
           {"dropped_missing_title", load.dropped_missing_title},
           {"users", seqs.sequences.size()},
           {"dropped_short_users", seqs.dropped_short_users},
           {"dropped_unknown_items", seqs.dropped_unknown_items}}
              .dump(2) +
          "\n");
  log("enrich: " + std::to_string(seqs.sequences.size()) + " users, item signal coverage " +
      std::to_string(item_coverage.found) + "/" + std::to_string(item_coverage.requested));
}

void Pipeline::train() {
  const fs::path dir = config_.paths.output_dir / "enriched";
  require(dir / "items.jsonl", "enrich");
  require(dir / "split.jsonl", "enrich");
  const auto texts = enrichment::read_item_texts(dir / "items.jsonl");
  const auto split = corpus::read_split(dir / "split.jsonl");
  recmodel::ModelConfig mc = config_.model;
  mc.seed = config_.seed;
  const auto result = recmodel::train(split, texts, mc);
  const fs::path ck = config_.paths.output_dir / "checkpoints";
  result.model.save(ck / "model.bin");
  io::write_file_atomic(ck / "train_log.json",
                        json{{"epoch_losses", result.epoch_losses}, {"steps", result.steps}}.dump(2) +
                            "\n");
  std::ostringstream msg;
  msg << "train: " << result.steps << " steps";
  if (!result.epoch_losses.empty()) {
    msg << ", loss " << result.epoch_losses.front() << " -> " << result.epoch_losses.back();
  }
  log(msg.str());
}

void Pipeline::evaluate() {
  const fs::path model_path = config_.paths.output_dir / "checkpoints" / "model.bin";
  require(model_path, "train");
  const fs::path dir = config_.paths.output_dir / "enriched";
  require(dir / "items.jsonl", "enrich");
  require(dir / "split.jsonl", "enrich");
  const auto model = recmodel::Model::load(model_path);
  const auto texts = enrichment::read_item_texts(dir / "items.jsonl");
  const auto split = corpus::read_split(dir / "split.jsonl");
  const auto report =
      eval::evaluate(model, split, texts, config_.evaluation.protocol, config_.evaluation.ks);
  const fs::path out = config_.paths.output_dir / "reports";
  io::write_file_atomic(out / "metrics.json", report.to_json().dump(2) + "\n");
  io::write_file_atomic(out / "metrics.txt", report.to_table());
  io::write_file_atomic(out / "metrics.csv", report.to_csv());
  log(report.to_table());
}

void Pipeline::analyze_diversity() {
  if (!fs::exists(config_.paths.signal_store)) {
    throw MissingArtifactError("signal store '" + config_.paths.signal_store.string() +
                               "' not found; run generate first");
  }
  const llm::SignalStore store(config_.paths.signal_store);
  auto records = store.records();
  std::sort(records.begin(), records.end(), [](const SemanticSignal& a, const SemanticSignal& b) {
    return a.item_id < b.item_id;
  });
  for (const auto& name : config_.signal_names) {
    std::vector<std::string> texts;
    for (const auto& r : records)
      if (r.signal_name == name && r.model_id == config_.backend.model_id) texts.push_back(r.text);
    if (texts.size() < 2) {
      throw MissingArtifactError("fewer than two stored signals for '" + name +
                                 "'; run generate first");
    }
    const auto emb = diversity::embed(texts, config_.diversity.embedder, hooks_.transport);
    const auto rep = diversity::similarity_report(emb, config_.diversity.thresholds,
                                                  config_.diversity.fraction,
                                                  config_.diversity.strict);
    json j = rep.to_json();
    j["signal_name"] = name;
    j["model_id"] = config_.backend.model_id;
    j["empty_texts"] = emb.empty_texts;
    const fs::path out = config_.paths.output_dir / "reports";
    io::write_file_atomic(out / ("similarity_" + slug(name) + ".json"), j.dump(2) + "\n");
    io::write_file_atomic(out / ("similarity_" + slug(name) + ".csv"), rep.to_csv());
    log("diversity [" + name + "]\n" + rep.to_csv());
  }
}

void Pipeline::report() {
  auto load_metrics = [](const fs::path& run_dir) {
    const fs::path p = run_dir / "reports" / "metrics.json";
    if (!fs::exists(p)) {
      throw MissingArtifactError("missing '" + p.string() + "'; run evaluate first for '" +
                                 run_dir.string() + "'");
    }
    return eval::MetricsReport::from_json(json::parse(io::read_file(p)));
  };
  const auto baseline = load_metrics(config_.report.baseline_dir);
  const auto treatment = load_metrics(config_.report.treatment_dir);
  const auto table = eval::improvement_report(baseline, treatment);
  const fs::path out = config_.paths.output_dir / "reports";
  io::write_file_atomic(out / "improvement.txt", table.to_table());
  io::write_file_atomic(out / "improvement.json", table.to_json().dump(2) + "\n");
  io::write_file_atomic(out / "improvement.csv", table.to_csv());
  log(table.to_table());
}

}  // namespace lamar::pipeline
