#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xferlag/event.hpp"
#include "xferlag/models.hpp"
#include "xferlag/validation.hpp"

namespace xferlag {

std::string cleaning_report_to_json(const CleaningReport& report);
CleaningReport cleaning_report_from_json(const std::string& text);

// Holdout evaluation artifact written by `eval`.
struct EvalSummary {
  ModelFamily family = ModelFamily::Gbt;
  HoldoutConfig holdout;
  double rmse = 0.0;
  std::size_t n_test = 0;
  double elapsed_seconds = 0.0;
};

std::string eval_summary_to_json(const EvalSummary& summary);
EvalSummary eval_summary_from_json(const std::string& text);

// Any subset of the pipeline artifacts, as JSON text.
struct RunReportInputs {
  std::optional<std::string> cleaning_json;
  std::optional<std::string> features_meta_json;
  std::optional<std::string> cv_json;
  std::optional<std::string> model_json;
  std::optional<std::string> eval_json;
  std::size_t top_n = 10;
  bool include_timing = false;
};

struct RunReport {
  std::optional<CleaningReport> cleaning;
  std::optional<std::string> feature_groups;
  std::optional<std::size_t> feature_count;
  std::optional<CvResult> cv;
  std::optional<double> holdout_rmse;
  std::optional<std::string> model_family;
  std::vector<FeatureImportance> top_importances;  // descending
  double importance_total = 0.0;                   // over all features, not just the top
  std::map<std::string, double> timing;
};

RunReport build_run_report(const RunReportInputs& inputs);
std::string run_report_to_json(const RunReport& report);
std::string render_run_report(const RunReport& report);

}  // namespace xferlag
