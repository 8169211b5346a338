#include "editeval/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <set>

#include "editeval/abtest.hpp"
#include "editeval/backend.hpp"
#include "editeval/composite.hpp"
#include "editeval/corpus.hpp"
#include "editeval/cot.hpp"
#include "editeval/error.hpp"
#include "editeval/fsutil.hpp"
#include "editeval/report.hpp"
#include "editeval/stats.hpp"
#include "editeval/textmetrics.hpp"
#include "editeval/tuneprep.hpp"

namespace editeval {
namespace {

namespace fs = std::filesystem;

// Expands a flat JSON config into flags for `sub`. Keys use underscores or
// dashes; flags already on the command line win, unknown keys are ignored.
std::vector<std::string> ExpandConfig(const std::string& path, const CLI::App& sub,
                                      const std::vector<std::string>& given) {
  Json j = Json::parse(ReadFile(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::kParse, "config " + path + " must hold a JSON object");
  }
  auto scalar = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  std::vector<std::string> extra;
  for (const auto& [key, value] : j.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    const CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt == nullptr || flag == "--config") continue;
    bool present = std::any_of(given.begin(), given.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (present) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        extra.push_back(flag);
        extra.push_back(scalar(v));
      }
    } else if (!value.is_null()) {
      extra.push_back(flag);
      extra.push_back(scalar(value));
    }
  }
  return extra;
}

struct Options {
  std::string manifest;
  std::string out;
  std::string backend;
  std::string weights;
  std::string format = "json";
  std::string scorer;
  std::string transcripts;
  std::string templates;
  std::string items;
  std::string oneshot;
  std::string level = "both";
  std::string judge_template;
  std::string transcripts_a;
  std::string transcripts_b;
  std::string label_a = "A";
  std::string label_b = "B";
  std::string model = "default";
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<std::string> baselines;
  int parallel = 4;
  std::uint64_t seed = 0;
  std::size_t batch_size = 16;
  bool flip_faith_sign = false;
  bool cross_task = false;
  bool audio_only = false;
  bool base64_audio = false;
  double timeout = 120.0;
  int retries = 3;
  double backoff = 1.0;
};

struct Context {
  const Options& opt;
  std::ostream& out;
  std::ostream& err;
};

fs::path OutDir(const Options& opt) {
  if (opt.out.empty()) throw Error(ErrorCode::kIo, "--out is required");
  fs::create_directories(opt.out);
  return opt.out;
}

std::string Extension(const std::string& format) {
  if (format == "csv") return ".csv";
  if (format == "text") return ".txt";
  return ".json";
}

BackendConfig MakeBackendConfig(const Options& opt) {
  BackendConfig c;
  c.endpoint = opt.backend;
  c.model_name = opt.model;
  c.timeout_s = opt.timeout;
  c.max_retries = opt.retries;
  c.backoff_base_s = opt.backoff;
  c.audio_transport = opt.base64_audio ? AudioTransport::kBase64 : AudioTransport::kPath;
  c.Validate();
  return c;
}

CompositeWeights LoadWeights(const std::string& spec) {
  if (spec.empty()) return {};
  std::string text = Trim(spec).rfind('{', 0) == 0 ? spec : ReadFile(spec);
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kParse, "weights are not valid JSON");
  return CompositeWeights::FromJson(j);
}

std::optional<double> ExtraNumber(const EditingSample& s, const char* key) {
  auto it = s.extras.find(key);
  if (it == s.extras.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

std::optional<std::string> ExtraString(const EditingSample& s, const char* key) {
  auto it = s.extras.find(key);
  if (it == s.extras.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

std::map<std::string, SampleScores> LoadScores(const fs::path& out_dir) {
  std::map<std::string, SampleScores> scores;
  if (fs::exists(out_dir / "metrics.jsonl")) {
    for (const auto& row : ReadJsonl(out_dir / "metrics.jsonl")) {
      SampleScores& s = scores[row.at("id").get<std::string>()];
      s.id = row.at("id").get<std::string>();
      s.system_id = row.value("system_id", std::string());
      if (auto d = row.find("difference"); d != row.end() && !d->is_null()) s.difference = MetricVectorFromJson(*d);
      if (auto c = row.find("commonality"); c != row.end() && !c->is_null()) s.commonality = MetricVectorFromJson(*c);
    }
  }
  if (fs::exists(out_dir / "composite.jsonl")) {
    for (const auto& row : ReadJsonl(out_dir / "composite.jsonl")) {
      SampleScores& s = scores[row.at("id").get<std::string>()];
      s.id = row.at("id").get<std::string>();
      if (auto e = row.find("edit_score"); e != row.end() && e->is_number()) s.edit_score = e->get<double>();
      if (auto f = row.find("faith_score"); f != row.end() && f->is_number()) s.faith_score = f->get<double>();
    }
  }
  return scores;
}

Json MeanOrNull(double sum, std::size_t count) {
  return count ? Json(sum / static_cast<double>(count)) : Json(nullptr);
}

// ---------------------------------------------------------------------------

int RunIngest(const Context& ctx) {
  auto samples = LoadManifest(ctx.opt.manifest);
  std::set<std::string> systems;
  std::size_t empty = 0, underivable = 0;
  for (auto& s : samples) {
    systems.insert(s.system_id);
    try {
      if (FillDerivedTargets(s)) {
        ++empty;
        ctx.err << "warning: " << s.id << ": replacement captions share no clause\n";
      }
    } catch (const Error& e) {
      ++underivable;
      ctx.err << "error: " << s.id << ": " << e.what() << "\n";
    }
  }
  if (!ctx.opt.out.empty()) {
    WriteFileAtomic(OutDir(ctx.opt) / "manifest.derived.jsonl", EmitManifest(samples));
  }
  ctx.out << "ok: " << samples.size() << " samples, " << systems.size() << " systems, " << empty
          << " empty commonality, " << underivable << " underivable targets\n";
  return underivable ? kExitPartial : kExitOk;
}

int RunScoreCaptions(const Context& ctx) {
  auto samples = LoadManifest(ctx.opt.manifest);
  fs::path out_dir = OutDir(ctx.opt);
  fs::path transcripts = ctx.opt.transcripts.empty() ? out_dir / "transcripts" : fs::path(ctx.opt.transcripts);

  std::unique_ptr<Transport> scorer_transport;
  std::unique_ptr<BackendScorer> scorer;
  if (!ctx.opt.scorer.empty()) {
    BackendConfig cfg = MakeBackendConfig(ctx.opt);
    scorer_transport = MakeTransport(ctx.opt.scorer, cfg);
    scorer = std::make_unique<BackendScorer>(cfg, *scorer_transport);
  }

  struct Job {
    const EditingSample* sample;
    std::optional<std::string> pred_diff, pred_common;
    std::string ref_diff, ref_common;
  };
  std::vector<Job> jobs;
  std::size_t failed = 0;
  for (auto& s : samples) {
    Job job{&s, ExtraString(s, "predicted_difference"), ExtraString(s, "predicted_commonality"), {}, {}};
    if (!job.pred_diff || !job.pred_common) {
      fs::path p = TranscriptPath(transcripts, s.id);
      if (fs::exists(p)) {
        CotTranscript t = LoadTranscript(p);
        if (!job.pred_diff) job.pred_diff = t.Response(1);
        if (!job.pred_common) job.pred_common = t.Response(2);
      }
    }
    try {
      std::tie(job.ref_diff, job.ref_common) = ResolveExpectedCaptions(s);
    } catch (const Error& e) {
      ++failed;
      ctx.err << "error: " << s.id << ": " << e.what() << "\n";
      continue;
    }
    if (!job.pred_diff || !job.pred_common) {
      ++failed;
      ctx.err << "error: " << s.id << ": no predicted difference/commonality caption\n";
      continue;
    }
    jobs.push_back(std::move(job));
  }

  std::vector<std::vector<TokenSequence>> diff_docs, common_docs;
  for (const auto& j : jobs) {
    diff_docs.push_back({Tokenize(j.ref_diff)});
    common_docs.push_back({Tokenize(j.ref_common)});
  }

  std::vector<Json> rows;
  std::map<std::string, std::pair<double, std::size_t>> sums_d, sums_c;
  std::size_t warnings = 0;
  if (!jobs.empty()) {
    CiderCorpus diff_corpus(diff_docs), common_corpus(common_docs);
    for (const auto& j : jobs) {
      const EditingSample& s = *j.sample;
      ScorePairOptions d_opt{scorer.get(), ExtraNumber(s, "difference_spice"), ExtraNumber(s, "difference_fense")};
      ScorePairOptions c_opt{scorer.get(), ExtraNumber(s, "commonality_spice"), ExtraNumber(s, "commonality_fense")};
      MetricVector d = ScorePair(*j.pred_diff, {j.ref_diff}, diff_corpus, d_opt);
      MetricVector c = ScorePair(*j.pred_common, {j.ref_common}, common_corpus, c_opt);
      if (d.external_warning || c.external_warning) ++warnings;
      for (auto name : kMetricNames) {
        if (auto v = d.Get(name)) { sums_d[std::string(name)].first += *v; ++sums_d[std::string(name)].second; }
        if (auto v = c.Get(name)) { sums_c[std::string(name)].first += *v; ++sums_c[std::string(name)].second; }
      }
      rows.push_back(Json{{"id", s.id}, {"system_id", s.system_id},
                          {"difference", MetricVectorToJson(d)}, {"commonality", MetricVectorToJson(c)}});
    }
  }
  WriteFileAtomic(out_dir / "metrics.jsonl", EmitJsonl(rows));

  auto summary_block = [](const std::map<std::string, std::pair<double, std::size_t>>& sums) {
    Json b = Json::object();
    for (auto name : kMetricNames) {
      auto it = sums.find(std::string(name));
      b[std::string(name)] = it == sums.end() ? Json(nullptr) : MeanOrNull(it->second.first, it->second.second);
    }
    return b;
  };
  Json summary{{"aggregation", "sentence_mean"},
               {"scored", jobs.size()},
               {"failed", failed},
               {"external_warnings", warnings},
               {"difference", summary_block(sums_d)},
               {"commonality", summary_block(sums_c)}};
  WriteFileAtomic(out_dir / "metrics_summary.json", summary.dump(2) + "\n");
  ctx.out << "scored " << jobs.size() << " samples, " << failed << " failed, " << warnings
          << " with external-scorer warnings\n";
  return failed ? kExitPartial : kExitOk;
}

int RunComposite(const Context& ctx) {
  fs::path out_dir = OutDir(ctx.opt);
  CompositeWeights w = LoadWeights(ctx.opt.weights);
  std::vector<Json> rows;
  std::size_t edit_n = 0, faith_n = 0;
  double edit_sum = 0, faith_sum = 0;
  for (const auto& row : ReadJsonl(out_dir / "metrics.jsonl")) {
    CaptionAccuracy acc;
    bool complete = !row.at("difference").is_null() && !row.at("commonality").is_null();
    CompositeScores cs;
    if (complete) {
      acc.difference = MetricVectorFromJson(row.at("difference"));
      acc.commonality = MetricVectorFromJson(row.at("commonality"));
      cs = ComputeComposite(acc, w, ctx.opt.flip_faith_sign);
    }
    if (cs.edit_score) { ++edit_n; edit_sum += *cs.edit_score; }
    if (cs.faith_score) { ++faith_n; faith_sum += *cs.faith_score; }
    rows.push_back(Json{{"id", row.at("id")},
                        {"system_id", row.value("system_id", std::string())},
                        {"edit_score", cs.edit_score ? Json(*cs.edit_score) : Json(nullptr)},
                        {"faith_score", cs.faith_score ? Json(*cs.faith_score) : Json(nullptr)}});
  }
  WriteFileAtomic(out_dir / "composite.jsonl", EmitJsonl(rows));
  Json summary{{"samples", rows.size()},
               {"edit_score", {{"count", edit_n}, {"mean", MeanOrNull(edit_sum, edit_n)}}},
               {"faith_score", {{"count", faith_n}, {"mean", MeanOrNull(faith_sum, faith_n)}}},
               {"flip_faith_sign", ctx.opt.flip_faith_sign},
               {"weights", w.ToJson()}};
  WriteFileAtomic(out_dir / "composite_summary.json", summary.dump(2) + "\n");
  ctx.out << "composite: " << rows.size() << " samples, edit_score for " << edit_n << ", faith_score for "
          << faith_n << "\n";
  return kExitOk;
}

std::vector<RatingTableRow> ParseBaselines(const std::vector<std::string>& specs) {
  std::vector<RatingTableRow> rows = DefaultRatingTableRows();
  for (const auto& spec : specs) {
    auto eq = spec.find('=');
    auto comma = spec.find(',', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || comma == std::string::npos) {
      throw Error(ErrorCode::kSchema, "baseline must look like NAME=edit_column,presv_column: " + spec);
    }
    rows.push_back({spec.substr(0, eq), spec.substr(eq + 1, comma - eq - 1), spec.substr(comma + 1)});
  }
  return rows;
}

int RunCorrelate(const Context& ctx) {
  auto samples = LoadManifest(ctx.opt.manifest);
  fs::path out_dir = OutDir(ctx.opt);
  fs::path corr_dir = out_dir / "correlation";
  auto columns = BuildColumnSamples(samples, LoadScores(out_dir));
  auto table_rows = ParseBaselines(ctx.opt.baselines);

  std::vector<std::string> levels;
  if (ctx.opt.level == "both" || ctx.opt.level == "system") levels.push_back("system");
  if (ctx.opt.level == "both" || ctx.opt.level == "sample") levels.push_back("sample");
  if (levels.empty()) throw Error(ErrorCode::kSchema, "--level must be system, sample or both");

  const std::string ext = Extension(ctx.opt.format);
  for (const auto& level : levels) {
    auto units = level == "system" ? AggregateBySystem(columns) : SampleLevelUnits(columns);
    auto rows = ctx.opt.rows.empty() ? CaptionMetricColumns(units) : ctx.opt.rows;
    auto cols = ctx.opt.cols.empty() ? RatingColumns(units) : ctx.opt.cols;
    if (rows.empty() || cols.empty()) {
      ctx.err << "warning: " << level << " level: no caption-metric or rating columns, matrix skipped\n";
    } else {
      for (auto method : {CorrelationMethod::kLcc, CorrelationMethod::kSrcc, CorrelationMethod::kKtau}) {
        auto m = ComputeCorrelationMatrix(units, rows, cols, method);
        std::string body = ctx.opt.format == "csv"    ? CorrelationMatrixToCsv(m)
                           : ctx.opt.format == "text" ? CorrelationMatrixToText(m)
                                                      : CorrelationMatrixToJson(m).dump(2) + "\n";
        WriteFileAtomic(corr_dir / ("matrix_" + level + "_" + CorrelationMethodName(method) + ext), body);
      }
    }
    RatingTable t = ComputeRatingTable(units, table_rows, level);
    std::string body = ctx.opt.format == "csv"    ? RatingTableToCsv(t)
                       : ctx.opt.format == "text" ? RatingTableToText(t)
                                                  : RatingTableToJson(t).dump(2) + "\n";
    WriteFileAtomic(corr_dir / ("ratings_" + level + ext), body);
    // The JSON form is always kept for `report`.
    if (ext != ".json") WriteFileAtomic(corr_dir / ("ratings_" + level + ".json"), RatingTableToJson(t).dump(2) + "\n");
    ctx.out << RatingTableToText(t);
  }
  return kExitOk;
}

int RunCot(const Context& ctx) {
  auto samples = LoadManifest(ctx.opt.manifest);
  fs::path out_dir = OutDir(ctx.opt);
  if (ctx.opt.backend.empty()) throw Error(ErrorCode::kSchema, "--backend is required");
  BackendConfig cfg = MakeBackendConfig(ctx.opt);
  auto transport = MakeTransport(ctx.opt.backend, cfg);
  PromptTemplateSet templates =
      ctx.opt.templates.empty() ? PromptTemplateSet::Defaults() : PromptTemplateSet::Load(ctx.opt.templates);

  auto result = RunCotBatch(samples, cfg, *transport, templates, out_dir / "transcripts", ctx.opt.parallel);
  std::map<std::string, std::size_t> counts{{"complete", 0}, {"malformed", 0}, {"backend_error", 0}};
  for (const auto& t : result.transcripts) {
    ++counts[CotStatusName(t.status)];
    if (t.status != CotStatus::kComplete) ctx.err << "warning: " << t.sample_id << ": " << t.error << "\n";
  }
  for (const auto& [id, reason] : result.rejected) ctx.err << "error: " << id << ": " << reason << "\n";
  Json summary{{"samples", samples.size()},
               {"complete", counts["complete"]},
               {"malformed", counts["malformed"]},
               {"backend_error", counts["backend_error"]},
               {"rejected", result.rejected.size()}};
  WriteFileAtomic(out_dir / "cot_summary.json", summary.dump(2) + "\n");
  ctx.out << "cot-run: " << counts["complete"] << "/" << samples.size() << " complete, " << counts["malformed"]
          << " malformed, " << counts["backend_error"] << " backend errors, " << result.rejected.size()
          << " rejected\n";
  return counts["complete"] == samples.size() ? kExitOk : kExitPartial;
}

int RunExportTune(const Context& ctx) {
  auto samples = LoadManifest(ctx.opt.manifest);
  fs::path tune_dir = OutDir(ctx.opt) / "tune";
  std::vector<EditingSample> usable;
  std::size_t skipped = 0;
  for (auto s : samples) {
    try {
      FillDerivedTargets(s);
    } catch (const Error& e) {
      ctx.err << "error: " << s.id << ": " << e.what() << "\n";
      ++skipped;
      continue;
    }
    if (!s.expected_commonality || s.expected_commonality->empty()) {
      ctx.err << "warning: " << s.id << ": no commonality target, skipped\n";
      ++skipped;
      continue;
    }
    usable.push_back(std::move(s));
  }
  auto prompts = ctx.opt.audio_only ? CaptionPromptSet::AudioOnly() : CaptionPromptSet::WithTextContext();
  auto records = BuildCaptionRecords(usable, prompts);
  if (ctx.opt.batch_size == 0) throw Error(ErrorCode::kSchema, "--batch-size must be >= 1");
  records = ShuffleTargetsWithinBatch(std::move(records),
                                      ShuffleOptions{ctx.opt.batch_size, ctx.opt.seed, ctx.opt.cross_task});
  WriteFileAtomic(tune_dir / "caption_records.jsonl", EmitTuneRecords(records));
  ctx.out << "export-tune: " << records.size() << " caption records from " << usable.size() << " samples, "
          << skipped << " skipped\n";

  if (!ctx.opt.oneshot.empty()) {
    std::map<std::string, const EditingSample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;
    std::vector<std::pair<EditingSample, std::string>> gold;
    for (const auto& row : ReadJsonl(ctx.opt.oneshot)) {
      std::string id = row.at("id").get<std::string>();
      auto it = by_id.find(id);
      if (it == by_id.end()) throw Error(ErrorCode::kSchema, "one-shot id '" + id + "' not in manifest");
      gold.emplace_back(*it->second, row.at("assessment").get<std::string>());
    }
    PromptTemplateSet templates =
        ctx.opt.templates.empty() ? PromptTemplateSet::Defaults() : PromptTemplateSet::Load(ctx.opt.templates);
    auto oneshot = BuildOneShotSet(gold, templates);
    if (oneshot.truncated) {
      ctx.err << "warning: " << gold.size() << " gold assessments given, keeping the first " << kOneShotSetSize
              << "\n";
    }
    WriteFileAtomic(tune_dir / "oneshot.jsonl", EmitTuneRecords(oneshot.records));
    ctx.out << "export-tune: " << oneshot.records.size() << " one-shot records\n";
  }
  return skipped ? kExitPartial : kExitOk;
}

std::string AssessmentText(const CotTranscript& t) {
  if (!t.assessment) return {};
  return std::string(kEditingSentinel) + " " + t.assessment->e_editing + "\n" +
         std::string(kPreservationSentinel) + " " + t.assessment->e_preservation + "\n" +
         std::string(kOverallSentinel) + " " + t.assessment->e_overall;
}

std::vector<AbItem> ItemsFromTranscripts(const Context& ctx) {
  std::vector<AbItem> items;
  fs::path dir_a = ctx.opt.transcripts_a, dir_b = ctx.opt.transcripts_b;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& pa : files) {
    fs::path pb = dir_b / pa.filename();
    if (!fs::exists(pb)) continue;
    CotTranscript a = LoadTranscript(pa), b = LoadTranscript(pb);
    std::string ra = AssessmentText(a), rb = AssessmentText(b);
    if (ra.empty() || rb.empty()) {
      ctx.err << "warning: " << a.sample_id << ": incomplete transcript, not judged\n";
      continue;
    }
    items.push_back(AbItem{a.sample_id, ra, rb, ctx.opt.label_a, ctx.opt.label_b});
  }
  return items;
}

int RunAbtest(const Context& ctx) {
  fs::path ab_dir = OutDir(ctx.opt) / "abtest";
  if (ctx.opt.backend.empty()) throw Error(ErrorCode::kSchema, "--backend is required");
  std::vector<AbItem> items;
  if (!ctx.opt.items.empty()) {
    for (const auto& row : ReadJsonl(ctx.opt.items)) items.push_back(AbItemFromJson(row));
  } else if (!ctx.opt.transcripts_a.empty() && !ctx.opt.transcripts_b.empty()) {
    items = ItemsFromTranscripts(ctx);
  } else {
    throw Error(ErrorCode::kSchema, "abtest needs --items or --transcripts-a/--transcripts-b");
  }
  BackendConfig cfg = MakeBackendConfig(ctx.opt);
  auto transport = MakeTransport(ctx.opt.backend, cfg);
  JudgeTemplate tmpl = ctx.opt.judge_template.empty() ? JudgeTemplate::Defaults()
                                                      : JudgeTemplate{ReadFile(ctx.opt.judge_template)};
  auto votes = JudgeAll(items, cfg, *transport, tmpl, ctx.opt.parallel);
  std::vector<Json> rows;
  std::size_t bad = 0;
  for (const auto& v : votes) {
    rows.push_back(JudgeVoteToJson(v));
    if (v.status != VoteStatus::kOk) ++bad;
  }
  WriteFileAtomic(ab_dir / "votes.jsonl", EmitJsonl(rows));
  AbReport report = AggregateVotes(votes);
  WriteFileAtomic(ab_dir / "report.json", AbReportToJson(report).dump(2) + "\n");
  if (ctx.opt.format == "csv") WriteFileAtomic(ab_dir / "report.csv", AbReportToCsv(report));
  WriteFileAtomic(ab_dir / "report.txt", AbReportToText(report));
  ctx.out << AbReportToText(report);
  return bad ? kExitPartial : kExitOk;
}

Json ReadJsonOrNull(const fs::path& p) {
  if (!fs::exists(p)) return nullptr;
  return Json::parse(ReadFile(p), nullptr, false);
}

int RunReport(const Context& ctx) {
  fs::path out_dir = OutDir(ctx.opt);
  Json report;
  if (!ctx.opt.manifest.empty()) {
    auto samples = LoadManifest(ctx.opt.manifest);
    std::set<std::string> systems;
    for (const auto& s : samples) systems.insert(s.system_id);
    report["manifest"] = {{"samples", samples.size()}, {"systems", systems.size()}};
  } else {
    report["manifest"] = nullptr;
  }
  report["caption_metrics"] = ReadJsonOrNull(out_dir / "metrics_summary.json");
  report["composite"] = ReadJsonOrNull(out_dir / "composite_summary.json");
  report["rating_table"] = {{"system", ReadJsonOrNull(out_dir / "correlation" / "ratings_system.json")},
                      {"sample", ReadJsonOrNull(out_dir / "correlation" / "ratings_sample.json")}};
  report["cot"] = ReadJsonOrNull(out_dir / "cot_summary.json");
  report["abtest"] = ReadJsonOrNull(out_dir / "abtest" / "report.json");
  WriteFileAtomic(out_dir / "report.json", report.dump(2) + "\n");

  std::ostringstream text;
  text << "editeval report for " << out_dir.string() << "\n\n";
  if (!report["manifest"].is_null()) {
    text << "manifest: " << report["manifest"]["samples"] << " samples, " << report["manifest"]["systems"]
         << " systems\n";
  }
  auto show = [&](const char* title, const Json& j) {
    text << title << ": " << (j.is_null() ? std::string("absent") : j.dump()) << "\n";
  };
  show("caption metrics", report["caption_metrics"]);
  show("composite", report["composite"]);
  for (const char* level : {"system", "sample"}) {
    const Json& t = report["rating_table"][level];
    if (t.is_null() || t.is_discarded()) {
      text << "rating table (" << level << "): absent\n";
      continue;
    }
    RatingTable table;
    table.level = t.value("level", std::string(level));
    table.n = t.value("n", std::size_t{0});
    for (const auto& row : t.at("rows")) {
      table.rows.push_back({row.at("name").get<std::string>(), row.value("edit_column", std::string()),
                            row.value("presv_column", std::string())});
      std::map<CorrelationMethod, std::pair<std::optional<double>, std::optional<double>>> cells;
      for (auto m : {CorrelationMethod::kLcc, CorrelationMethod::kSrcc, CorrelationMethod::kKtau}) {
        const Json& cell = row.at(CorrelationMethodName(m));
        auto get = [](const Json& v) { return v.is_number() ? std::optional<double>(v.get<double>()) : std::nullopt; };
        cells[m] = {get(cell.at("edit")), get(cell.at("presv"))};
      }
      table.values.push_back(std::move(cells));
    }
    text << RatingTableToText(table);
  }
  show("cot", report["cot"]);
  show("abtest", report["abtest"]);
  std::string rendered = text.str();
  WriteFileAtomic(out_dir / "report.txt", rendered);
  if (ctx.opt.format == "text") ctx.out << rendered;
  else ctx.out << "report written to " << (out_dir / "report.json").string() << "\n";
  return kExitOk;
}

}  // namespace

int Dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Caption-based evaluation engine for audio editing", "editeval"};
  app.require_subcommand(1);

  Options opt;
  std::string config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file with default flag values");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--format", opt.format, "Report format")->check(CLI::IsMember({"json", "csv", "text"}));
  };
  auto add_manifest = [&](CLI::App* sub, bool required) {
    auto* o = sub->add_option("--manifest", opt.manifest, "JSONL manifest of editing samples");
    if (required) o->required();
  };
  auto add_backend = [&](CLI::App* sub) {
    sub->add_option("--backend", opt.backend, "Backend URL or mock:<script.json>");
    sub->add_option("--model", opt.model, "Model name sent to the backend");
    sub->add_option("--timeout", opt.timeout, "Request timeout in seconds");
    sub->add_option("--retries", opt.retries, "Retries on transport errors and 5xx");
    sub->add_option("--backoff", opt.backoff, "Initial retry backoff in seconds");
    sub->add_flag("--base64-audio", opt.base64_audio, "Inline audio as base64 instead of paths");
    sub->add_option("--parallel", opt.parallel, "Concurrent samples")->check(CLI::PositiveNumber);
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and derive target captions");
  add_common(ingest);
  add_manifest(ingest, true);

  auto* score = app.add_subcommand("score-captions", "Caption-accuracy metrics per sample");
  add_common(score);
  add_manifest(score, true);
  score->add_option("--transcripts", opt.transcripts, "Transcript directory (default <out>/transcripts)");
  score->add_option("--scorer", opt.scorer, "External SPICE/FENSE scorer URL or mock:<script.json>");
  score->add_option("--timeout", opt.timeout, "Scorer timeout in seconds");
  score->add_option("--retries", opt.retries, "Scorer retries");
  score->add_option("--backoff", opt.backoff, "Initial retry backoff in seconds");

  auto* composite = app.add_subcommand("composite", "Edit_score and Faith_score per sample");
  add_common(composite);
  composite->add_option("--weights", opt.weights, "Weights JSON file or inline object");
  composite->add_flag("--flip-faith-sign", opt.flip_faith_sign, "Report Faith_score as a positive magnitude");

  auto* correlate = app.add_subcommand("correlate", "Correlation matrices and rating-correlation table");
  add_common(correlate);
  add_manifest(correlate, true);
  correlate->add_option("--level", opt.level, "system, sample or both")
      ->check(CLI::IsMember({"system", "sample", "both"}));
  correlate->add_option("--rows", opt.rows, "Matrix row columns")->delimiter(',');
  correlate->add_option("--cols", opt.cols, "Matrix columns")->delimiter(',');
  correlate->add_option("--baseline", opt.baselines, "Extra table row NAME=edit_column,presv_column");

  auto* cot = app.add_subcommand("cot-run", "Seven-step evaluation against a model backend");
  add_common(cot);
  add_manifest(cot, true);
  add_backend(cot);
  cot->add_option("--templates", opt.templates, "Prompt template JSON");

  auto* tune = app.add_subcommand("export-tune", "Fine-tuning records");
  add_common(tune);
  add_manifest(tune, true);
  tune->add_option("--batch-size", opt.batch_size, "Shuffle batch size");
  tune->add_option("--seed", opt.seed, "Shuffle seed");
  tune->add_flag("--cross-task", opt.cross_task, "Shuffle targets across both caption tasks");
  tune->add_flag("--audio-only", opt.audio_only, "Caption prompts without the text context");
  tune->add_option("--oneshot", opt.oneshot, "JSONL of {id, assessment} gold assessments");
  tune->add_option("--templates", opt.templates, "Prompt template JSON");

  auto* ab = app.add_subcommand("abtest", "Pairwise judging with alternated presentation order");
  add_common(ab);
  add_backend(ab);
  ab->add_option("--items", opt.items, "JSONL of A/B items");
  ab->add_option("--transcripts-a", opt.transcripts_a, "Transcript directory of system A");
  ab->add_option("--transcripts-b", opt.transcripts_b, "Transcript directory of system B");
  ab->add_option("--label-a", opt.label_a, "Label of system A");
  ab->add_option("--label-b", opt.label_b, "Label of system B");
  ab->add_option("--judge-template", opt.judge_template, "Judge prompt file");

  auto* rep = app.add_subcommand("report", "Merge all outputs into one summary");
  add_common(rep);
  add_manifest(rep, false);

  // --seed, --parallel and --weights are accepted everywhere so one config
  // or command line can drive every stage.
  for (auto* sub : {ingest, score, composite, correlate, rep}) {
    sub->add_option("--seed", opt.seed, "Random seed");
    sub->add_option("--parallel", opt.parallel, "Concurrency bound")->check(CLI::PositiveNumber);
  }
  for (auto* sub : {ingest, score, correlate, cot, tune, ab, rep}) {
    sub->add_option("--weights", opt.weights, "Weights JSON file or inline object");
    sub->add_flag("--flip-faith-sign", opt.flip_faith_sign, "Report Faith_score as a positive magnitude");
  }
  for (auto* sub : {ingest, score, composite, correlate, cot, ab, rep}) {
    sub->add_option("--batch-size", opt.batch_size, "Shuffle batch size");
  }
  for (auto* sub : {ingest, score, composite, correlate, rep}) {
    sub->add_option("--backend", opt.backend, "Backend URL or mock:<script.json>");
  }
  cot->add_option("--seed", opt.seed, "Random seed");
  ab->add_option("--seed", opt.seed, "Random seed");
  tune->add_option("--parallel", opt.parallel, "Concurrency bound")->check(CLI::PositiveNumber);

  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  try {
    // Locate --config before the real parse so its values can be spliced in.
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (path.empty() || args.empty()) continue;
      const CLI::App* sub = app.get_subcommand_no_throw(args[0]);
      if (sub == nullptr) break;
      auto extra = ExpandConfig(path, *sub, args);
      args.insert(args.end(), extra.begin(), extra.end());
      break;
    }
  } catch (const Error& e) {
    err << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << "\n";
    return kExitUsage;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  Context ctx{opt, out, err};
  try {
    if (*ingest) return RunIngest(ctx);
    if (*score) return RunScoreCaptions(ctx);
    if (*composite) return RunComposite(ctx);
    if (*correlate) return RunCorrelate(ctx);
    if (*cot) return RunCot(ctx);
    if (*tune) return RunExportTune(ctx);
    if (*ab) return RunAbtest(ctx);
    if (*rep) return RunReport(ctx);
  } catch (const Error& e) {
    err << "error: " << ErrorCodeName(e.code()) << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace editeval
