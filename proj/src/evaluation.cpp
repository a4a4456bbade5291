#include "vlforgery/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "vlforgery/errors.hpp"
#include "vlforgery/rng.hpp"
#include "vlforgery/util.hpp"

namespace vlf {

Json inference_result_to_json(const InferenceResult& r) {
  Json j;
  j["record_id"] = r.record_id;
  j["question"] = r.question;
  j["answer"] = r.answer_text;
  j["transport_failed"] = r.transport_failed;
  j["error"] = r.error;
  return j;
}

InferenceResult inference_result_from_json(const Json& j) {
  InferenceResult r;
  r.record_id = j.at("record_id").get<std::string>();
  r.question = j.at("question").get<std::string>();
  r.answer_text = j.at("answer").get<std::string>();
  r.transport_failed = j.at("transport_failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  return r;
}

void write_answers_jsonl(const std::filesystem::path& path,
                         const std::vector<InferenceResult>& results) {
  std::ostringstream out;
  for (const InferenceResult& r : results) out << inference_result_to_json(r).dump() << '\n';
  write_text_file(path, out.str());
}

std::vector<InferenceResult> read_answers_jsonl(const std::filesystem::path& path) {
  std::vector<InferenceResult> results;
  for (const std::string& line : read_lines(path)) {
    results.push_back(inference_result_from_json(Json::parse(line)));
  }
  return results;
}

std::vector<InferenceResult> run_inference(const std::vector<ForgeryRecord>& records,
                                           ChatClient& model, const QuestionBank& bank,
                                           uint64_t rng_seed, int parallelism) {
  for (const ForgeryRecord& record : records) validate_record(record);

  std::vector<InferenceResult> results(records.size());
  parallel_for(records.size(), static_cast<size_t>(std::max(1, parallelism)), [&](size_t i) {
    const ForgeryRecord& record = records[i];
    InferenceResult& r = results[i];
    r.record_id = record.image.uri;
    r.question = generate_question(bank, derive_seed(rng_seed, i));
    ChatVisionRequest request;
    request.user_text = r.question;
    request.image_refs = {record.image};
    try {
      r.answer_text = model.chat_vision(request);
    } catch (const Error& e) {
      r.transport_failed = true;
      r.error = e.what();
    }
  });
  return results;
}

TruthMap truth_map_from_records(const std::vector<ForgeryRecord>& records) {
  TruthMap map;
  for (const ForgeryRecord& record : records) map[record.image.uri] = record;
  return map;
}

namespace {

const ForgeryRecord& truth_for(const TruthMap& truths, const std::string& record_id) {
  auto it = truths.find(record_id);
  if (it == truths.end()) {
    raise(ErrorCode::KeyMismatch, "no ground truth for answer '" + record_id + "'");
  }
  return it->second;
}

// Parse outcome for scoring; transport failures and grammar violations both
// land as "no structured answer".
std::optional<StructuredAnswer> scored_answer(const InferenceResult& r) {
  if (r.transport_failed) return std::nullopt;
  AnswerParse parsed = parse_answer(r.answer_text);
  if (!parsed.ok()) return std::nullopt;
  return std::move(parsed.answer);
}

}  // namespace

DetectionScores score_detection(const std::vector<InferenceResult>& results,
                                const TruthMap& truths) {
  DetectionScores scores;
  for (const InferenceResult& r : results) {
    const ForgeryRecord& record = truth_for(truths, r.record_id);
    CellScore& cell = scores.by_subset[record.image.subset];
    ++cell.total;
    const auto answer = scored_answer(r);
    if (!answer) {
      ++scores.unparseable;  // counts as incorrect
      continue;
    }
    if (answer->detection == record.truth.authenticity) ++cell.correct;
  }
  return scores;
}

LocalizationScores score_localization(const std::vector<InferenceResult>& results,
                                      const TruthMap& truths) {
  LocalizationScores scores;
  for (const InferenceResult& r : results) {
    const ForgeryRecord& record = truth_for(truths, r.record_id);
    if (record.truth.forgery_type != ForgeryType::PartialSynthesis) continue;
    const Subset subset = record.image.subset;

    RegionSet predicted;  // empty for unparseable answers and "real" verdicts
    if (const auto answer = scored_answer(r)) predicted = answer->regions;

    for (Region region : record.truth.regions.to_vector()) {
      CellScore& cell = scores.by_subset_region[subset][region];
      ++cell.total;
      if (predicted.contains(region)) ++cell.correct;
    }
    for (Region region : predicted.to_vector()) {
      if (!record.truth.regions.contains(region)) ++scores.false_positive_regions[subset];
    }
  }
  return scores;
}

AttributionScores score_attribution(const std::vector<InferenceResult>& results,
                                    const TruthMap& truths) {
  AttributionScores scores;
  for (const InferenceResult& r : results) {
    const ForgeryRecord& record = truth_for(truths, r.record_id);
    if (record.truth.authenticity != Authenticity::Fake) continue;

    Generator predicted = Generator::None;
    if (const auto answer = scored_answer(r)) predicted = answer->method;

    CellScore& cell = scores.by_subset[record.image.subset];
    ++cell.total;
    if (predicted == record.truth.generator) ++cell.correct;
    ++scores.confusion[record.truth.generator][predicted];
  }
  return scores;
}

MetricsReport build_report(DetectionScores detection, LocalizationScores localization,
                           AttributionScores attribution, int64_t total_answers) {
  MetricsReport report;
  report.detection = std::move(detection);
  report.localization = std::move(localization);
  report.attribution = std::move(attribution);
  report.total_answers = total_answers;
  report.unparseable_count = report.detection.unparseable;
  return report;
}

namespace {

Json cell_to_json(const CellScore& cell) {
  Json j;
  j["correct"] = cell.correct;
  j["total"] = cell.total;
  if (cell.defined()) {
    j["accuracy"] = cell.accuracy();
  } else {
    j["accuracy"] = nullptr;  // flagged, not divided
  }
  return j;
}

std::string pct(const CellScore& cell) {
  if (!cell.defined()) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", cell.accuracy() * 100.0);
  return buf;
}

std::string pct_mean(const std::vector<CellScore>& cells) {
  double sum = 0.0;
  int counted = 0;
  for (const CellScore& c : cells) {
    if (!c.defined()) continue;
    sum += c.accuracy();
    ++counted;
  }
  if (counted == 0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", sum / counted * 100.0);
  return buf;
}

}  // namespace

Json MetricsReport::to_json() const {
  Json j;

  Json det = Json::object();
  for (const auto& [subset, cell] : detection.by_subset) {
    det[std::string(to_string(subset))] = cell_to_json(cell);
  }
  j["detection"] = Json{{"by_subset", det}, {"unparseable", detection.unparseable}};

  Json loc = Json::object();
  for (const auto& [subset, regions] : localization.by_subset_region) {
    Json per_region = Json::object();
    for (const auto& [region, cell] : regions) {
      per_region[std::string(region_name(region))] = cell_to_json(cell);
    }
    loc[std::string(to_string(subset))] = per_region;
  }
  Json fp = Json::object();
  for (const auto& [subset, count] : localization.false_positive_regions) {
    fp[std::string(to_string(subset))] = count;
  }
  j["localization"] = Json{{"by_subset_region", loc}, {"false_positive_regions", fp}};

  Json att = Json::object();
  for (const auto& [subset, cell] : attribution.by_subset) {
    att[std::string(to_string(subset))] = cell_to_json(cell);
  }
  Json confusion = Json::object();
  for (const auto& [truth_gen, row] : attribution.confusion) {
    Json row_json = Json::object();
    for (const auto& [pred_gen, count] : row) {
      row_json[std::string(to_string(pred_gen))] = count;
    }
    confusion[std::string(to_string(truth_gen))] = row_json;
  }
  j["attribution"] = Json{{"by_subset", att}, {"confusion", confusion}};

  j["counts"] = Json{{"total_answers", total_answers}, {"unparseable", unparseable_count}};
  return j;
}

CellScore MetricsReport::cell(const std::string& name) const {
  std::vector<std::string> parts;
  size_t start = 0;
  while (start <= name.size()) {
    const size_t slash = name.find('/', start);
    parts.push_back(name.substr(start, slash == std::string::npos ? std::string::npos
                                                                  : slash - start));
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  try {
    if (parts.size() == 2 && parts[0] == "detection") {
      return detection.by_subset.at(subset_from_string(parts[1]));
    }
    if (parts.size() == 2 && parts[0] == "attribution") {
      return attribution.by_subset.at(subset_from_string(parts[1]));
    }
    if (parts.size() == 3 && parts[0] == "localization") {
      return localization.by_subset_region.at(subset_from_string(parts[1]))
          .at(region_from_name(parts[2]));
    }
  } catch (const std::exception&) {
    raise(ErrorCode::MissingCell, name);
  }
  raise(ErrorCode::MissingCell, name);
}

std::string MetricsReport::render_markdown() const {
  std::ostringstream md;
  auto detection_cell = [&](Subset s) {
    auto it = detection.by_subset.find(s);
    return it == detection.by_subset.end() ? CellScore{} : it->second;
  };

  md << "# Evaluation report\n\n";
  md << "Answers scored: " << total_answers << " (unparseable: " << unparseable_count << ")\n\n";

  // Detection, full synthesis: five non-existent generators plus id-insertion.
  {
    md << "## Detection accuracy — full synthesis (%)\n\n";
    md << "| Model | SDXL | SD2 | SD3 | Kandinsky2.2 | Flux | InstantID | Avg |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    const std::vector<Subset> cols = {Subset::FullSDXL, Subset::FullSD2, Subset::FullSD3,
                                      Subset::FullKandinsky22, Subset::FullFlux,
                                      Subset::FullInstantID};
    std::vector<CellScore> cells;
    md << "| evaluated |";
    for (Subset s : cols) {
      cells.push_back(detection_cell(s));
      md << ' ' << pct(cells.back()) << " |";
    }
    md << ' ' << pct_mean(cells) << " |\n\n";
  }

  // Detection, partial synthesis.
  {
    md << "## Detection accuracy — partial synthesis (%)\n\n";
    md << "| Model | SDXL | SD2 | Kandinsky2.2 | Avg |\n";
    md << "|---|---|---|---|---|\n";
    const std::vector<Subset> cols = {Subset::PartialSDXL, Subset::PartialSD2,
                                      Subset::PartialKandinsky22};
    std::vector<CellScore> cells;
    md << "| evaluated |";
    for (Subset s : cols) {
      cells.push_back(detection_cell(s));
      md << ' ' << pct(cells.back()) << " |";
    }
    md << ' ' << pct_mean(cells) << " |\n\n";
  }

  // Detection, cross-generator PS/FS columns.
  {
    md << "## Detection accuracy — cross-generator (%)\n\n";
    md << "| Model | SDXL PS | SDXL FS | SD2 PS | SD2 FS | Kandinsky2.2 PS | Kandinsky2.2 FS "
          "| SD3 | Flux | InstantID | Avg |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    const std::vector<Subset> cols = {
        Subset::PartialSDXL,        Subset::FullSDXL, Subset::PartialSD2,
        Subset::FullSD2,            Subset::PartialKandinsky22,
        Subset::FullKandinsky22,    Subset::FullSD3,  Subset::FullFlux,
        Subset::FullInstantID};
    std::vector<CellScore> cells;
    md << "| evaluated |";
    for (Subset s : cols) {
      cells.push_back(detection_cell(s));
      md << ' ' << pct(cells.back()) << " |";
    }
    md << ' ' << pct_mean(cells) << " |\n\n";
  }

  // Detection, pristine subsets (denominators for the real side).
  {
    md << "## Detection accuracy — pristine (%)\n\n";
    md << "| Model | FFHQ | FF++ | CelebA-HQ | Avg |\n";
    md << "|---|---|---|---|---|\n";
    const std::vector<Subset> cols = {Subset::PristineFFHQ, Subset::PristineFFPP,
                                      Subset::PristineCelebAHQ};
    std::vector<CellScore> cells;
    md << "| evaluated |";
    for (Subset s : cols) {
      cells.push_back(detection_cell(s));
      md << ' ' << pct(cells.back()) << " |";
    }
    md << ' ' << pct_mean(cells) << " |\n\n";
  }

  // Localization: region rows x generator columns.
  {
    md << "## Localization accuracy — region x generator (%)\n\n";
    md << "| Region | SDXL | SD2 | Kandinsky2.2 | Avg |\n";
    md << "|---|---|---|---|---|\n";
    const std::vector<Subset> cols = {Subset::PartialSDXL, Subset::PartialSD2,
                                      Subset::PartialKandinsky22};
    for (Region region : kAllRegions) {
      std::vector<CellScore> cells;
      md << "| " << region_name(region) << " |";
      for (Subset s : cols) {
        CellScore cell;
        auto sit = localization.by_subset_region.find(s);
        if (sit != localization.by_subset_region.end()) {
          auto rit = sit->second.find(region);
          if (rit != sit->second.end()) cell = rit->second;
        }
        cells.push_back(cell);
        md << ' ' << pct(cell) << " |";
      }
      md << ' ' << pct_mean(cells) << " |\n";
    }
    md << "\nFalse-positive regions (not penalized above):";
    if (localization.false_positive_regions.empty()) {
      md << " none\n\n";
    } else {
      bool first = true;
      for (const auto& [subset, count] : localization.false_positive_regions) {
        md << (first ? " " : ", ") << to_string(subset) << "=" << count;
        first = false;
      }
      md << "\n\n";
    }
  }

  // Attribution per subset.
  {
    md << "## Attribution accuracy (%)\n\n";
    md << "| Model | FS_SDXL | FS_SD2 | FS_SD3 | FS_IID | FS_Kan2.2 | FS_Flux | PS_SDXL | "
          "PS_SD2 | PS_Kan2.2 | Avg |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    const std::vector<Subset> cols = {
        Subset::FullSDXL,    Subset::FullSD2,    Subset::FullSD3,
        Subset::FullInstantID, Subset::FullKandinsky22, Subset::FullFlux,
        Subset::PartialSDXL, Subset::PartialSD2, Subset::PartialKandinsky22};
    std::vector<CellScore> cells;
    md << "| evaluated |";
    for (Subset s : cols) {
      CellScore cell;
      auto it = attribution.by_subset.find(s);
      if (it != attribution.by_subset.end()) cell = it->second;
      cells.push_back(cell);
      md << ' ' << pct(cell) << " |";
    }
    md << ' ' << pct_mean(cells) << " |\n\n";
  }

  // Confusion matrix, truth rows x predicted columns.
  {
    md << "## Attribution confusion matrix (truth rows, predicted columns)\n\n";
    md << "| Truth \\ Pred | SDXL | SD2 | SD3 | Kandinsky2.2 | Flux | InstantID | none |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    const std::vector<Generator> preds = {Generator::SDXL, Generator::SD2,  Generator::SD3,
                                          Generator::Kandinsky22, Generator::Flux,
                                          Generator::InstantID,   Generator::None};
    for (Generator truth_gen : kFakeGenerators) {
      auto row_it = attribution.confusion.find(truth_gen);
      md << "| " << to_string(truth_gen) << " |";
      for (Generator pred : preds) {
        int64_t count = 0;
        if (row_it != attribution.confusion.end()) {
          auto cit = row_it->second.find(pred);
          if (cit != row_it->second.end()) count = cit->second;
        }
        md << ' ' << count << " |";
      }
      md << '\n';
    }
    md << '\n';
  }

  return md.str();
}

}  // namespace vlf
