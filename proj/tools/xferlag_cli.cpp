// xferlag command-line driver. Talks to the library only through the C API.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "xferlag/xferlag.h"

namespace {

using nlohmann::json;

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct Failure {
  xl_status status;
  std::string message;
};

void check(xl_status s) {
  if (s != XL_OK) throw Failure{s, xl_last_error()};
}

struct EventsDel {
  void operator()(xl_events* p) const { xl_events_free(p); }
};
struct FeaturesDel {
  void operator()(xl_features* p) const { xl_features_free(p); }
};
struct ModelDel {
  void operator()(xl_model* p) const { xl_model_free(p); }
};
struct StringDel {
  void operator()(char* p) const { xl_string_free(p); }
};
using Events = std::unique_ptr<xl_events, EventsDel>;
using Features = std::unique_ptr<xl_features, FeaturesDel>;
using Model = std::unique_ptr<xl_model, ModelDel>;
using CString = std::unique_ptr<char, StringDel>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{XL_ERR_IO, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure{XL_ERR_IO, "cannot write " + path};
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw Failure{XL_ERR_IO, "cannot write " + path};
}

std::string meta_path_for(const std::string& csv, const std::string& explicit_meta) {
  return explicit_meta.empty() ? csv + ".meta.json" : explicit_meta;
}

Events load_events(const std::string& path) {
  xl_events* raw = nullptr;
  check(xl_events_load(path.c_str(), &raw));
  return Events(raw);
}

Features load_features(const std::string& csv, const std::string& meta) {
  xl_features* raw = nullptr;
  check(xl_features_load(csv.c_str(), meta_path_for(csv, meta).c_str(), &raw));
  return Features(raw);
}

Events maybe_filter(Events events, const std::string& stage) {
  if (stage.empty()) return events;
  xl_events* raw = nullptr;
  check(xl_events_filter_stage(events.get(), stage.c_str(), &raw));
  return Events(raw);
}

struct HoldoutOpts {
  double split = 0.9;
  std::size_t train_subset = 0;
  std::size_t test_subset = 0;
  std::uint64_t seed = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--holdout", split, "Chronological train share")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--train-subset", train_subset, "Rows sampled from the train side (0 = all)");
    cmd->add_option("--test-subset", test_subset, "Rows sampled from the test side (0 = all)");
    cmd->add_option("--seed", seed, "Subset sampling seed");
  }
  std::string to_json() const {
    return json{{"split", split},
                {"train_subset", train_subset},
                {"test_subset", test_subset},
                {"seed", seed}}
        .dump();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transfer-rate modelling pipeline for chunked multi-stream transfer logs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", xl_version());

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic transfer log");
  std::string synth_out, synth_config, synth_trace, synth_stage;
  std::size_t synth_n = 0;
  double synth_rho = std::nan("");
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "Event CSV to write")->required();
  synth->add_option("--config", synth_config, "Generator config JSON");
  synth->add_option("--n-events", synth_n, "Number of events");
  synth->add_option("--rho", synth_rho, "AR(1) coefficient of the resource states");
  auto* synth_seed_opt = synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--stage", synth_stage, "DSS_TO_FFB or FFB_TO_ANA");
  synth->add_option("--trace", synth_trace, "Also write the hidden per-event states here");

  // clean
  auto* clean = app.add_subcommand("clean", "Drop oversize and zero records, sort by start");
  std::string clean_in, clean_out, clean_report, clean_stage;
  clean->add_option("--in", clean_in, "Raw event CSV")->required();
  clean->add_option("--out", clean_out, "Cleaned event CSV")->required();
  clean->add_option("--report", clean_report, "Cleaning report JSON");
  clean->add_option("--stage", clean_stage, "Keep only this stage");

  // features
  auto* feats = app.add_subcommand("features", "Build the feature matrix");
  std::string feats_in, feats_out, feats_meta, feats_groups = "A", feats_stage, feats_vocab;
  double feats_tz_hours = 0.0, feats_holdout = 0.9;
  feats->add_option("--in", feats_in, "Cleaned event CSV")->required();
  feats->add_option("--out", feats_out, "Feature CSV")->required();
  feats->add_option("--meta", feats_meta, "Metadata JSON (default <out>.meta.json)");
  feats->add_option("--groups", feats_groups, "Feature groups, e.g. A,B,C2,D1,D3,E");
  feats->add_option("--stage", feats_stage, "Keep only this stage");
  feats->add_option("--tz-offset-hours", feats_tz_hours, "Local time offset from UTC");
  feats->add_option("--holdout", feats_holdout, "Leading share the category levels are fitted on")
      ->check(CLI::Range(0.0, 1.0));
  feats->add_option("--vocab-from", feats_vocab, "Reuse the vocabulary of this metadata JSON");

  // cv
  auto* cv = app.add_subcommand("cv", "Nested time-ordered CV with random search");
  std::string cv_features, cv_meta, cv_out, cv_family = "gbt";
  std::size_t cv_num_params = 10, cv_k = 10, cv_train_width = 20000, cv_test_width = 2000,
              cv_train_size = 5000, cv_test_size = 500;
  std::uint64_t cv_seed = 0;
  bool cv_full_regions = false;
  cv->add_option("--features", cv_features, "Feature CSV")->required();
  cv->add_option("--meta", cv_meta, "Feature metadata JSON");
  cv->add_option("--out", cv_out, "CV result JSON")->required();
  cv->add_option("--family", cv_family, "gbt or rf");
  cv->add_option("--num-params", cv_num_params, "Random-search candidates");
  cv->add_option("--cv-k", cv_k, "Folds per candidate");
  cv->add_option("--train-width", cv_train_width, "Rows in each fold's train region");
  cv->add_option("--test-width", cv_test_width, "Rows in each fold's test region");
  cv->add_option("--train-size", cv_train_size, "Rows sampled from the train region");
  cv->add_option("--test-size", cv_test_size, "Rows sampled from the test region");
  cv->add_option("--seed", cv_seed, "Search and fold seed");
  cv->add_flag("--full-regions", cv_full_regions, "Use whole regions instead of sampled subsets");

  // train
  auto* train = app.add_subcommand("train", "Fit a model on the train side of the holdout split");
  std::string train_features, train_meta, train_out, train_params, train_family = "gbt";
  HoldoutOpts train_holdout;
  train->add_option("--features", train_features, "Feature CSV")->required();
  train->add_option("--meta", train_meta, "Feature metadata JSON");
  train->add_option("--out", train_out, "Model JSON")->required();
  train->add_option("--params", train_params, "Hyperparameter JSON or CV result");
  train->add_option("--family", train_family, "gbt or rf");
  train_holdout.add(train);

  // eval
  auto* eval = app.add_subcommand("eval", "Score a model on the holdout test side");
  std::string eval_features, eval_meta, eval_model, eval_out, eval_pairs;
  HoldoutOpts eval_holdout;
  eval->add_option("--features", eval_features, "Feature CSV")->required();
  eval->add_option("--meta", eval_meta, "Feature metadata JSON");
  eval->add_option("--model", eval_model, "Model JSON")->required();
  eval->add_option("--out", eval_out, "Evaluation summary JSON");
  eval->add_option("--pairs", eval_pairs, "Predicted-vs-actual CSV");
  eval_holdout.add(eval);

  // report
  auto* report = app.add_subcommand("report", "Summarize the artifacts of a run");
  std::string rep_cleaning, rep_meta, rep_cv, rep_model, rep_eval, rep_out;
  std::size_t rep_top = 10;
  bool rep_timing = false;
  report->add_option("--cleaning", rep_cleaning, "Cleaning report JSON");
  report->add_option("--features-meta", rep_meta, "Feature metadata JSON");
  report->add_option("--cv", rep_cv, "CV result JSON");
  report->add_option("--model", rep_model, "Model JSON");
  report->add_option("--eval", rep_eval, "Evaluation summary JSON");
  report->add_option("--top", rep_top, "Importances to list");
  report->add_option("--out", rep_out, "Report JSON");
  report->add_flag("--include-timing", rep_timing, "Add recorded run times (not reproducible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      json config = json::object();
      if (!synth_config.empty()) config = json::parse(read_file(synth_config));
      if (synth->count("--n-events")) config["n_events"] = synth_n;
      if (!std::isnan(synth_rho)) config["rho"] = synth_rho;
      if (synth_seed_opt->count()) config["seed"] = synth_seed;
      if (!synth_stage.empty()) config["stage"] = synth_stage;
      xl_events* raw = nullptr;
      char* meta = nullptr;
      char* trace = nullptr;
      check(xl_synth_generate(config.dump().c_str(), &raw, &meta,
                              synth_trace.empty() ? nullptr : &trace));
      Events events(raw);
      CString meta_s(meta), trace_s(trace);
      check(xl_events_save(events.get(), synth_out.c_str()));
      write_file(synth_out + ".meta.json", meta_s.get());
      if (trace_s) write_file(synth_trace, trace_s.get());
      std::printf("wrote %zu events to %s\n", xl_events_count(events.get()), synth_out.c_str());
    } else if (clean->parsed()) {
      auto events = maybe_filter(load_events(clean_in), clean_stage);
      xl_events* raw = nullptr;
      char* rep = nullptr;
      check(xl_events_clean(events.get(), &raw, &rep));
      Events cleaned(raw);
      CString rep_s(rep);
      check(xl_events_sort(cleaned.get()));
      check(xl_events_save(cleaned.get(), clean_out.c_str()));
      if (!clean_report.empty()) write_file(clean_report, rep_s.get());
      const auto j = json::parse(rep_s.get());
      std::printf("kept %zu of %zu events (%zu oversize, %zu zero-valued removed)\n",
                  j.at("n_output").get<std::size_t>(), j.at("n_input").get<std::size_t>(),
                  j.at("n_oversize_removed").get<std::size_t>(),
                  j.at("n_zero_removed").get<std::size_t>());
    } else if (feats->parsed()) {
      auto events = maybe_filter(load_events(feats_in), feats_stage);
      check(xl_events_sort(events.get()));
      json opts{{"groups", feats_groups},
                {"utc_offset_seconds", static_cast<std::int64_t>(std::llround(feats_tz_hours * 3600))}};
      if (!feats_vocab.empty()) {
        opts["vocabulary_meta"] = read_file(feats_vocab);
      } else {
        opts["vocab_fraction"] = feats_holdout > 0.0 ? feats_holdout : 1.0;
      }
      xl_features* raw = nullptr;
      check(xl_features_assemble(events.get(), opts.dump().c_str(), &raw));
      Features features(raw);
      const auto meta = meta_path_for(feats_out, feats_meta);
      check(xl_features_save(features.get(), feats_out.c_str(), meta.c_str()));
      std::printf("wrote %zu rows x %zu columns to %s\n", xl_features_rows(features.get()),
                  xl_features_cols(features.get()), feats_out.c_str());
    } else if (cv->parsed()) {
      auto features = load_features(cv_features, cv_meta);
      json config{{"family", cv_family},         {"num_params", cv_num_params},
                  {"k", cv_k},                   {"train_width", cv_train_width},
                  {"test_width", cv_test_width}, {"train_size", cv_train_size},
                  {"test_size", cv_test_size},   {"seed", cv_seed},
                  {"use_subsets", !cv_full_regions}};
      char* out = nullptr;
      check(xl_cv_run(features.get(), config.dump().c_str(), &out));
      CString out_s(out);
      write_file(cv_out, out_s.get());
      const auto j = json::parse(out_s.get());
      const auto best = j.at("best_index").get<std::size_t>();
      std::printf("best candidate %zu, mean RMSE %.3f MB/s\n", best,
                  j.at("candidates").at(best).at("mean_rmse").get<double>());
    } else if (train->parsed()) {
      auto features = load_features(train_features, train_meta);
      const std::string params = train_params.empty() ? std::string() : read_file(train_params);
      const auto holdout = train_holdout.to_json();
      xl_model* raw = nullptr;
      check(xl_model_fit(features.get(), train_family.c_str(),
                         params.empty() ? nullptr : params.c_str(), holdout.c_str(), &raw));
      Model model(raw);
      check(xl_model_save(model.get(), train_out.c_str()));
      std::printf("wrote %s model to %s\n", train_family.c_str(), train_out.c_str());
    } else if (eval->parsed()) {
      auto features = load_features(eval_features, eval_meta);
      xl_model* raw = nullptr;
      check(xl_model_load(eval_model.c_str(), &raw));
      Model model(raw);
      char* summary = nullptr;
      char* pairs = nullptr;
      check(xl_holdout_eval(model.get(), features.get(), eval_holdout.to_json().c_str(), &summary,
                            eval_pairs.empty() ? nullptr : &pairs));
      CString summary_s(summary), pairs_s(pairs);
      if (!eval_out.empty()) write_file(eval_out, summary_s.get());
      if (pairs_s) write_file(eval_pairs, pairs_s.get());
      const auto j = json::parse(summary_s.get());
      std::printf("holdout RMSE %.3f MB/s over %zu events\n", j.at("rmse").get<double>(),
                  j.at("n_test").get<std::size_t>());
    } else if (report->parsed()) {
      json inputs{{"top_n", rep_top}, {"include_timing", rep_timing}};
      auto put = [&](const char* key, const std::string& path) {
        if (!path.empty()) inputs[key] = path;
      };
      put("cleaning", rep_cleaning);
      put("features_meta", rep_meta);
      put("cv", rep_cv);
      put("model", rep_model);
      put("eval", rep_eval);
      char* rep = nullptr;
      char* table = nullptr;
      check(xl_report_build(inputs.dump().c_str(), &rep, &table));
      CString rep_s(rep), table_s(table);
      if (!rep_out.empty()) write_file(rep_out, rep_s.get());
      std::fputs(table_s.get(), stdout);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", xl_status_name(f.status), f.message.c_str());
    return f.status == XL_ERR_INVALID_ARGUMENT ? kExitUsage : kExitData;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error (parse): %s\n", e.what());
    return kExitData;
  }
  return 0;
}
