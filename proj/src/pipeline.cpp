#include "vlforgery/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "vlforgery/acquisition.hpp"
#include "vlforgery/assembly.hpp"
#include "vlforgery/bias_miner.hpp"
#include "vlforgery/ekcot.hpp"
#include "vlforgery/errors.hpp"
#include "vlforgery/evaluation.hpp"
#include "vlforgery/rng.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

namespace {

// Stage sub-seed namespaces under the root seed.
constexpr uint64_t kSeedPartial = 101;
constexpr uint64_t kSeedFullTxt2Img = 102;
constexpr uint64_t kSeedIdInsert = 103;
constexpr uint64_t kSeedSplit = 104;
constexpr uint64_t kSeedBiasPairs = 105;
constexpr uint64_t kSeedQuestions = 106;
constexpr uint64_t kSeedInference = 107;

void sort_by_uri(std::vector<ForgeryRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const ForgeryRecord& a, const ForgeryRecord& b) {
              return a.image.uri < b.image.uri;
            });
}

Json artifact_entry(const std::filesystem::path& path, size_t count) {
  return Json{{"lines", count}, {"hash", hash_file(path)}};
}

}  // namespace

std::shared_ptr<ChatClient> make_chat_client(const ModelConfig& config, TruthIndex truth,
                                             uint64_t seed) {
  std::shared_ptr<ChatClient> inner;
  int backoff_ms = config.backoff_ms;
  if (config.name == "http") {
    EndpointConfig endpoint;
    endpoint.endpoint_url = config.endpoint_url;
    endpoint.api_key_env_var = config.api_key_env_var;
    endpoint.model_id = config.model_id;
    endpoint.timeout_ms = config.timeout_ms;
    endpoint.max_retries = config.max_retries;
    endpoint.parallelism = config.parallelism;
    endpoint.image_byte_limit = config.image_byte_limit;
    inner = std::make_shared<HttpChatClient>(endpoint);
  } else if (config.name.rfind("mock:", 0) == 0) {
    const std::string behavior_name = config.name.substr(5);
    MockBehavior behavior;
    if (behavior_name == "oracle") behavior = MockBehavior::Oracle;
    else if (behavior_name == "adversarial") behavior = MockBehavior::Adversarial;
    else if (behavior_name == "echo") behavior = MockBehavior::Echo;
    else if (behavior_name == "scripted") behavior = MockBehavior::Scripted;
    else raise(ErrorCode::ConfigError, "unknown mock behavior '" + behavior_name + "'");

    std::vector<ScriptRule> script;
    if (behavior == MockBehavior::Scripted) {
      if (config.script_path.empty()) {
        raise(ErrorCode::ConfigError, "mock:scripted requires model.script_path");
      }
      try {
        script = script_from_json(Json::parse(read_text_file(config.script_path)));
      } catch (const Json::exception& e) {
        raise(ErrorCode::ConfigError, config.script_path + ": " + e.what());
      }
    }
    inner = make_mock_model(behavior, std::move(truth), std::move(script), seed);
    backoff_ms = 0;  // scripted failures should not slow the retry loop
  } else {
    raise(ErrorCode::ConfigError, "model.name must be \"http\" or \"mock:<behavior>\"");
  }
  return std::make_shared<GatewayClient>(std::move(inner), config.max_retries,
                                         config.parallelism, backoff_ms);
}

PipelineRunner::PipelineRunner(RunConfig config) : config_(std::move(config)) {}

std::filesystem::path PipelineRunner::out_path(const char* name) const {
  return config_.out_dir / name;
}

std::filesystem::path PipelineRunner::data_path(const char* name) const {
  return config_.data_dir / name;
}

std::filesystem::path PipelineRunner::require_input(Stage stage,
                                                    const std::filesystem::path& path) const {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::MissingInput,
          std::string(stage_name(stage)) + " requires " + path.string());
  }
  return path;
}

StageResult PipelineRunner::run_stage(Stage stage) {
  std::filesystem::create_directories(config_.out_dir);
  switch (stage) {
    case Stage::Acquire: return run_acquire();
    case Stage::Generate: return run_generate();
    case Stage::MineBias: return run_mine_bias();
    case Stage::Describe: return run_describe();
    case Stage::Assemble: return run_assemble();
    case Stage::Evaluate: return run_evaluate();
    case Stage::Report: return run_report();
  }
  raise(ErrorCode::InvalidArgument, "unknown stage");
}

StageResult PipelineRunner::run_acquire() {
  const AcquisitionConfig& acq = config_.acquisition;
  const Json dict_json =
      Json::parse(read_text_file(require_input(Stage::Acquire, data_path("attribute_dict.json"))));
  const Json templates_json =
      Json::parse(read_text_file(require_input(Stage::Acquire, data_path("templates.json"))));
  const AttributeDictionary dict = AttributeDictionary::from_json(dict_json);
  const TemplateSet templates = TemplateSet::from_json(templates_json);

  std::vector<ForgeryRecord> pristine;
  for (const SyntheticPristine& sp : acq.synthetic_pristine) {
    auto batch = synthesize_pristine(sp.subset, sp.count);
    pristine.insert(pristine.end(), batch.begin(), batch.end());
  }
  for (const SourceScan& scan : acq.source_scan) {
    auto batch = scan_sources(scan.dir, scan.glob, scan.subset);
    pristine.insert(pristine.end(), batch.begin(), batch.end());
  }
  sort_by_uri(pristine);
  for (const ForgeryRecord& record : pristine) validate_record(record);

  const std::vector<Generator> partial_generators = {Generator::SDXL, Generator::SD2,
                                                     Generator::Kandinsky22};
  const std::vector<Generator> full_generators = {Generator::SDXL, Generator::SD2,
                                                  Generator::SD3, Generator::Kandinsky22,
                                                  Generator::Flux};

  const auto partial = build_partial_manifest(
      pristine, partial_generators, acq.partial_per_generator, dict, templates.partial,
      default_mask_assets(), derive_seed(config_.root_seed, kSeedPartial), acq.max_regions,
      acq.max_source_reuse);

  auto full = build_full_manifest(JobKind::TextToImage, full_generators, acq.full_per_generator,
                                  nullptr, templates.scene,
                                  derive_seed(config_.root_seed, kSeedFullTxt2Img));
  const auto id_insert = build_full_manifest(
      JobKind::IdInsert, {Generator::InstantID}, acq.id_insert_count, &pristine, templates.scene,
      derive_seed(config_.root_seed, kSeedIdInsert));
  full.insert(full.end(), id_insert.begin(), id_insert.end());

  write_records_jsonl(out_path("records_pristine.jsonl"), pristine);
  write_manifest_jsonl(out_path("manifest_partial.jsonl"), partial);
  write_manifest_jsonl(out_path("manifest_full.jsonl"), full);

  StageResult result;
  result.stage = Stage::Acquire;
  result.summary = Json{
      {"stage", "acquire"},
      {"counts",
       Json{{"pristine", pristine.size()},
            {"partial_jobs", partial.size()},
            {"full_jobs", full.size()}}},
      {"artifacts",
       Json{{"records_pristine.jsonl",
             artifact_entry(out_path("records_pristine.jsonl"), pristine.size())},
            {"manifest_partial.jsonl",
             artifact_entry(out_path("manifest_partial.jsonl"), partial.size())},
            {"manifest_full.jsonl",
             artifact_entry(out_path("manifest_full.jsonl"), full.size())}}}};
  return result;
}

StageResult PipelineRunner::run_generate() {
  const auto pristine =
      read_records_jsonl(require_input(Stage::Generate, out_path("records_pristine.jsonl")));
  auto partial =
      read_manifest_jsonl(require_input(Stage::Generate, out_path("manifest_partial.jsonl")));
  const auto full =
      read_manifest_jsonl(require_input(Stage::Generate, out_path("manifest_full.jsonl")));
  partial.insert(partial.end(), full.begin(), full.end());

  std::unique_ptr<GenerationClient> client;
  if (config_.model.name == "http") {
    EndpointConfig endpoint;
    endpoint.endpoint_url = config_.model.endpoint_url;
    endpoint.timeout_ms = config_.model.timeout_ms;
    client = std::make_unique<HttpGenerationClient>(endpoint);
  } else {
    client = std::make_unique<MockGenerationClient>();
  }

  std::vector<ForgeryRecord> generated(partial.size());
  std::vector<std::string> ledger_lines(partial.size());
  parallel_for(partial.size(), static_cast<size_t>(config_.model.parallelism), [&](size_t i) {
    const ManifestEntry& entry = partial[i];
    const ImageRef image = client->submit_generation(entry.job);
    ForgeryRecord record;
    record.image = image;
    record.truth = entry.truth;
    record.provenance = Provenance{entry.job.prompt, entry.job.mask, entry.job.seed};
    validate_record(record);
    generated[i] = std::move(record);

    Json ledger_entry;
    ledger_entry["job"] = job_to_json(entry.job);
    ledger_entry["result_uri"] = image.uri;
    ledger_lines[i] = ledger_entry.dump();
  });

  std::vector<ForgeryRecord> all = pristine;
  all.insert(all.end(), generated.begin(), generated.end());
  auto [train, test] = split_dataset(std::move(all), config_.acquisition.split_ratio_train,
                                     config_.acquisition.split_ratio_test,
                                     derive_seed(config_.root_seed, kSeedSplit));
  std::vector<ForgeryRecord> records = std::move(train);
  records.insert(records.end(), test.begin(), test.end());
  sort_by_uri(records);
  write_records_jsonl(out_path("records.jsonl"), records);

  std::ostringstream ledger;
  for (const std::string& line : ledger_lines) ledger << line << '\n';
  write_text_file(out_path("generation_ledger.jsonl"), ledger.str());

  size_t train_count = 0;
  for (const ForgeryRecord& r : records) {
    if (r.image.split == Split::Train) ++train_count;
  }

  StageResult result;
  result.stage = Stage::Generate;
  result.summary = Json{
      {"stage", "generate"},
      {"counts",
       Json{{"generated", generated.size()},
            {"records", records.size()},
            {"train", train_count},
            {"test", records.size() - train_count}}},
      {"artifacts",
       Json{{"records.jsonl", artifact_entry(out_path("records.jsonl"), records.size())},
            {"generation_ledger.jsonl",
             artifact_entry(out_path("generation_ledger.jsonl"), ledger_lines.size())}}}};
  return result;
}

StageResult PipelineRunner::run_mine_bias() {
  const auto records =
      read_records_jsonl(require_input(Stage::MineBias, out_path("records.jsonl")));
  const Json aspects_json =
      Json::parse(read_text_file(require_input(Stage::MineBias, data_path("aspects.json"))));
  const auto aspects = load_aspects(aspects_json);

  // Mining runs on the training split so evaluation records never leak into
  // the judgment biases.
  std::vector<ForgeryRecord> real_set;
  std::vector<ForgeryRecord> fake_set;
  for (const ForgeryRecord& record : records) {
    if (record.image.split != Split::Train) continue;
    (record.truth.authenticity == Authenticity::Real ? real_set : fake_set).push_back(record);
  }

  auto client = make_chat_client(config_.model, TruthIndex::from_records(records),
                                 config_.root_seed);

  const size_t pair_count = static_cast<size_t>(config_.bias.pair_count);
  const uint64_t pair_seed = derive_seed(config_.root_seed, kSeedBiasPairs);
  std::vector<PairAssignment> pairs(pair_count);
  for (size_t i = 0; i < pair_count; ++i) {
    pairs[i] = sample_pair(real_set, fake_set, derive_seed(pair_seed, i));
  }

  std::vector<std::vector<DiscrepancyText>> per_pair(pair_count);
  parallel_for(pair_count, static_cast<size_t>(config_.model.parallelism), [&](size_t i) {
    per_pair[i] = compare_low_level(pairs[i], aspects, *client);
  });

  std::vector<DiscrepancyText> corpus;
  corpus.reserve(pair_count * 20);
  for (auto& batch : per_pair) {
    corpus.insert(corpus.end(), batch.begin(), batch.end());
  }
  std::ostringstream corpus_out;
  for (const DiscrepancyText& d : corpus) corpus_out << discrepancy_to_json(d).dump() << '\n';
  write_text_file(out_path("discrepancy_corpus.jsonl"), corpus_out.str());

  const PosTagger& tagger = LexiconTagger::builtin();
  std::vector<const DiscrepancyText*> real_texts;
  std::vector<const DiscrepancyText*> fake_texts;
  std::map<Subset, std::vector<const DiscrepancyText*>> fake_by_subset;
  for (const DiscrepancyText& d : corpus) {
    if (d.hidden_truth == Authenticity::Real) {
      real_texts.push_back(&d);
    } else {
      fake_texts.push_back(&d);
      fake_by_subset[d.subset].push_back(&d);
    }
  }

  const auto real_props = compute_phrase_proportions(real_texts, tagger);
  const auto fake_props = compute_phrase_proportions(fake_texts, tagger);
  const JudgmentBias global_bias = render_bias_descriptors(
      select_top_differential(real_props, fake_props, config_.bias.top_k));

  Json bias_json;
  bias_json["global"] = judgment_bias_to_json(global_bias);
  if (!config_.bias.global_only) {
    Json per_subset = Json::object();
    for (const auto& [subset, texts] : fake_by_subset) {
      const auto subset_props = compute_phrase_proportions(texts, tagger);
      const auto ranked = select_top_differential(real_props, subset_props, config_.bias.top_k);
      if (ranked.empty()) continue;
      per_subset[std::string(to_string(subset))] =
          judgment_bias_to_json(render_bias_descriptors(ranked));
    }
    bias_json["per_subset"] = per_subset;
  }
  write_text_file(out_path("judgment_bias.json"), bias_json.dump(2) + "\n");

  StageResult result;
  result.stage = Stage::MineBias;
  result.summary = Json{
      {"stage", "mine-bias"},
      {"counts",
       Json{{"pairs", pair_count},
            {"texts", corpus.size()},
            {"top_phrases", global_bias.phrases.size()}}},
      {"artifacts",
       Json{{"discrepancy_corpus.jsonl",
             artifact_entry(out_path("discrepancy_corpus.jsonl"), corpus.size())},
            {"judgment_bias.json", artifact_entry(out_path("judgment_bias.json"), 1)}}}};
  return result;
}

StageResult PipelineRunner::run_describe() {
  const auto records =
      read_records_jsonl(require_input(Stage::Describe, out_path("records.jsonl")));
  const Json bias_json =
      Json::parse(read_text_file(require_input(Stage::Describe, out_path("judgment_bias.json"))));
  RuleTemplate rule_template{
      read_text_file(require_input(Stage::Describe, data_path("general_rule.txt")))};

  const JudgmentBias global_bias = judgment_bias_from_json(bias_json.at("global"));
  std::map<Subset, JudgmentBias> per_subset_bias;
  if (bias_json.contains("per_subset")) {
    for (const auto& [key, value] : bias_json.at("per_subset").items()) {
      per_subset_bias[subset_from_string(key)] = judgment_bias_from_json(value);
    }
  }

  std::vector<ForgeryRecord> train_records;
  for (const ForgeryRecord& record : records) {
    if (record.image.split == Split::Train) train_records.push_back(record);
  }
  sort_by_uri(train_records);

  auto client = make_chat_client(config_.model, TruthIndex::from_records(records),
                                 config_.root_seed);
  const DescribeOptions options{config_.ekcot.retry_count};

  std::vector<std::string> description_lines(train_records.size());
  std::vector<std::string> quarantine_lines(train_records.size());
  parallel_for(train_records.size(), static_cast<size_t>(config_.model.parallelism),
               [&](size_t i) {
                 const ForgeryRecord& record = train_records[i];
                 const JudgmentBias* bias = &global_bias;
                 if (!config_.bias.global_only &&
                     record.truth.authenticity == Authenticity::Fake) {
                   auto it = per_subset_bias.find(record.image.subset);
                   if (it != per_subset_bias.end()) bias = &it->second;
                 }
                 const GeneralRulePrompt prompt =
                     build_general_rule_prompt(record, bias, rule_template);
                 try {
                   const EkCotDescription description =
                       generate_description(prompt, *client, options);
                   description_lines[i] = description_to_json(description).dump();
                 } catch (const Error& e) {
                   if (e.code() != ErrorCode::DescriptionRejected) throw;
                   Json q{{"record_id", record.image.uri}, {"error", e.what()}};
                   quarantine_lines[i] = q.dump();
                 }
               });

  std::ostringstream descriptions_out;
  std::ostringstream quarantine_out;
  size_t described = 0;
  size_t quarantined = 0;
  for (size_t i = 0; i < train_records.size(); ++i) {
    if (!description_lines[i].empty()) {
      descriptions_out << description_lines[i] << '\n';
      ++described;
    }
    if (!quarantine_lines[i].empty()) {
      quarantine_out << quarantine_lines[i] << '\n';
      ++quarantined;
    }
  }
  write_text_file(out_path("descriptions.jsonl"), descriptions_out.str());
  write_text_file(out_path("quarantine.jsonl"), quarantine_out.str());

  const double fraction =
      train_records.empty() ? 0.0
                            : static_cast<double>(quarantined) / train_records.size();

  StageResult result;
  result.stage = Stage::Describe;
  result.threshold_exceeded = fraction > config_.ekcot.max_quarantine_fraction;
  result.summary = Json{
      {"stage", "describe"},
      {"counts",
       Json{{"train_records", train_records.size()},
            {"described", described},
            {"quarantined", quarantined}}},
      {"artifacts",
       Json{{"descriptions.jsonl",
             artifact_entry(out_path("descriptions.jsonl"), described)},
            {"quarantine.jsonl", artifact_entry(out_path("quarantine.jsonl"), quarantined)}}}};
  return result;
}

StageResult PipelineRunner::run_assemble() {
  const auto records =
      read_records_jsonl(require_input(Stage::Assemble, out_path("records.jsonl")));
  const auto description_lines =
      read_lines(require_input(Stage::Assemble, out_path("descriptions.jsonl")));
  const Json bank_json =
      Json::parse(read_text_file(require_input(Stage::Assemble, data_path("questions.json"))));
  const QuestionBank bank = load_question_bank(bank_json);

  std::map<std::string, EkCotDescription> descriptions;
  for (const std::string& line : description_lines) {
    EkCotDescription d = description_from_json(Json::parse(line));
    descriptions[d.record_id] = std::move(d);
  }

  std::vector<ForgeryRecord> train_records;
  for (const ForgeryRecord& record : records) {
    if (record.image.split == Split::Train) train_records.push_back(record);
  }
  sort_by_uri(train_records);

  const uint64_t question_seed = derive_seed(config_.root_seed, kSeedQuestions);
  std::vector<Triplet> triplets;
  size_t skipped = 0;
  for (size_t i = 0; i < train_records.size(); ++i) {
    const ForgeryRecord& record = train_records[i];
    auto it = descriptions.find(record.image.uri);
    if (it == descriptions.end()) {
      ++skipped;  // quarantined upstream
      continue;
    }
    triplets.push_back(build_triplet(record, it->second,
                                     generate_question(bank, derive_seed(question_seed, i))));
  }

  const EmissionSummary emitted = emit_finetune_file(triplets, out_path("train.jsonl"));
  emit_training_config(out_path("training_config.json"));

  StageResult result;
  result.stage = Stage::Assemble;
  result.summary = Json{
      {"stage", "assemble"},
      {"counts",
       Json{{"train_records", train_records.size()},
            {"triplets", emitted.count},
            {"skipped", skipped}}},
      {"artifacts",
       Json{{"train.jsonl", Json{{"lines", emitted.count}, {"hash", emitted.content_hash}}},
            {"training_config.json",
             artifact_entry(out_path("training_config.json"), 1)}}}};
  return result;
}

StageResult PipelineRunner::run_evaluate() {
  const auto records =
      read_records_jsonl(require_input(Stage::Evaluate, out_path("records.jsonl")));
  const Json bank_json =
      Json::parse(read_text_file(require_input(Stage::Evaluate, data_path("questions.json"))));
  const QuestionBank bank = load_question_bank(bank_json);

  std::vector<ForgeryRecord> eval_records;
  for (const ForgeryRecord& record : records) {
    if (record.image.split == config_.evaluation.split) eval_records.push_back(record);
  }
  sort_by_uri(eval_records);

  auto client = make_chat_client(config_.model, TruthIndex::from_records(records),
                                 config_.root_seed);
  const auto results =
      run_inference(eval_records, *client, bank, derive_seed(config_.root_seed, kSeedInference),
                    config_.model.parallelism);
  write_answers_jsonl(out_path("answers.jsonl"), results);

  const TruthMap truths = truth_map_from_records(eval_records);
  MetricsReport report =
      build_report(score_detection(results, truths), score_localization(results, truths),
                   score_attribution(results, truths), static_cast<int64_t>(results.size()));
  write_text_file(out_path("report.json"), report.to_json().dump(2) + "\n");
  write_text_file(out_path("report.md"), report.render_markdown());

  size_t failed = 0;
  for (const InferenceResult& r : results) {
    if (r.transport_failed) ++failed;
  }

  StageResult result;
  result.stage = Stage::Evaluate;
  result.summary = Json{
      {"stage", "evaluate"},
      {"counts",
       Json{{"records", eval_records.size()},
            {"transport_failures", failed},
            {"unparseable", report.unparseable_count}}},
      {"artifacts",
       Json{{"answers.jsonl", artifact_entry(out_path("answers.jsonl"), results.size())},
            {"report.json", artifact_entry(out_path("report.json"), 1)},
            {"report.md", artifact_entry(out_path("report.md"), 1)}}}};
  return result;
}

StageResult PipelineRunner::run_report() {
  const auto records = read_records_jsonl(require_input(Stage::Report, out_path("records.jsonl")));
  const auto results = read_answers_jsonl(require_input(Stage::Report, out_path("answers.jsonl")));

  const TruthMap truths = truth_map_from_records(records);
  MetricsReport report =
      build_report(score_detection(results, truths), score_localization(results, truths),
                   score_attribution(results, truths), static_cast<int64_t>(results.size()));
  write_text_file(out_path("report.json"), report.to_json().dump(2) + "\n");
  write_text_file(out_path("report.md"), report.render_markdown());

  StageResult result;
  result.stage = Stage::Report;
  result.summary = Json{
      {"stage", "report"},
      {"counts",
       Json{{"answers", results.size()}, {"unparseable", report.unparseable_count}}},
      {"artifacts",
       Json{{"report.json", artifact_entry(out_path("report.json"), 1)},
            {"report.md", artifact_entry(out_path("report.md"), 1)}}}};
  return result;
}

}  // namespace vlf
