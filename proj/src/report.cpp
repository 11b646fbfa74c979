#include "xferlag/report.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "xferlag/error.hpp"

namespace xferlag {
namespace {

using nlohmann::json;

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad ") + what + " JSON: " + e.what(), "");
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string cleaning_report_to_json(const CleaningReport& r) {
  return json{{"format", "xferlag-cleaning"},
              {"n_input", r.n_input},
              {"n_oversize_removed", r.n_oversize_removed},
              {"n_zero_removed", r.n_zero_removed},
              {"n_output", r.n_output}}
      .dump(2);
}

CleaningReport cleaning_report_from_json(const std::string& text) {
  const auto j = parse_or_throw(text, "cleaning report");
  try {
    CleaningReport r;
    j.at("n_input").get_to(r.n_input);
    j.at("n_oversize_removed").get_to(r.n_oversize_removed);
    j.at("n_zero_removed").get_to(r.n_zero_removed);
    j.at("n_output").get_to(r.n_output);
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad cleaning report: ") + e.what(), "");
  }
}

std::string eval_summary_to_json(const EvalSummary& s) {
  return json{{"format", "xferlag-eval"},
              {"family", std::string(to_string(s.family))},
              {"holdout",
               {{"split", s.holdout.split},
                {"train_subset", s.holdout.train_subset},
                {"test_subset", s.holdout.test_subset},
                {"seed", s.holdout.seed}}},
              {"rmse", s.rmse},
              {"n_test", s.n_test},
              {"elapsed_seconds", s.elapsed_seconds}}
      .dump(2);
}

EvalSummary eval_summary_from_json(const std::string& text) {
  const auto j = parse_or_throw(text, "eval summary");
  try {
    EvalSummary s;
    s.family = parse_model_family(j.at("family").get<std::string>());
    const auto& h = j.at("holdout");
    h.at("split").get_to(s.holdout.split);
    h.at("train_subset").get_to(s.holdout.train_subset);
    h.at("test_subset").get_to(s.holdout.test_subset);
    h.at("seed").get_to(s.holdout.seed);
    j.at("rmse").get_to(s.rmse);
    j.at("n_test").get_to(s.n_test);
    s.elapsed_seconds = j.value("elapsed_seconds", 0.0);
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad eval summary: ") + e.what(), "");
  }
}

RunReport build_run_report(const RunReportInputs& in) {
  RunReport r;
  if (in.cleaning_json) r.cleaning = cleaning_report_from_json(*in.cleaning_json);
  if (in.features_meta_json) {
    const auto j = parse_or_throw(*in.features_meta_json, "feature metadata");
    try {
      std::string groups;
      for (const auto& g : j.at("spec").at("groups")) {
        if (!groups.empty()) groups.push_back(',');
        groups += g.get<std::string>();
      }
      r.feature_groups = groups;
      r.feature_count = j.at("columns").size();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad feature metadata: ") + e.what(), "");
    }
  }
  if (in.cv_json) {
    r.cv = cv_result_from_json(*in.cv_json);
    if (in.include_timing) {
      const auto j = parse_or_throw(*in.cv_json, "cv");
      if (j.contains("elapsed_seconds")) r.timing["cv"] = j.at("elapsed_seconds").get<double>();
    }
  }
  if (in.model_json) {
    const auto model = model_from_json(*in.model_json);
    r.model_family = std::string(to_string(model.family));
    const auto ranked = ranked_importance(model);
    for (const auto& imp : ranked) r.importance_total += imp.share;
    for (std::size_t i = 0; i < std::min(in.top_n, ranked.size()); ++i) {
      r.top_importances.push_back(ranked[i]);
    }
  }
  if (in.eval_json) {
    const auto s = eval_summary_from_json(*in.eval_json);
    r.holdout_rmse = s.rmse;
    if (!r.model_family) r.model_family = std::string(to_string(s.family));
    if (in.include_timing) r.timing["eval"] = s.elapsed_seconds;
  }
  return r;
}

std::string run_report_to_json(const RunReport& r) {
  json j{{"format", "xferlag-report"}, {"version", 1}};
  if (r.cleaning) j["cleaning"] = json::parse(cleaning_report_to_json(*r.cleaning));
  if (r.feature_groups) {
    j["features"] = {{"groups", *r.feature_groups}, {"n_columns", r.feature_count.value_or(0)}};
  }
  if (r.model_family) j["model_family"] = *r.model_family;
  if (r.cv) {
    json means = json::array();
    for (const auto& c : r.cv->candidates) means.push_back(c.mean_rmse);
    j["cv"] = {{"candidate_mean_rmse", means},
               {"best_index", r.cv->best_index},
               {"best_mean_rmse", r.cv->candidates.at(r.cv->best_index).mean_rmse},
               {"best_params", json::parse(params_to_json_text(r.cv->best_params))}};
  }
  if (r.holdout_rmse) j["holdout_rmse_mbs"] = *r.holdout_rmse;
  json imps = json::array();
  for (const auto& imp : r.top_importances) {
    imps.push_back({{"feature", imp.name}, {"share", imp.share}, {"percent", 100.0 * imp.share}});
  }
  j["top_importances"] = imps;
  j["importance_total_percent"] = 100.0 * r.importance_total;
  if (!r.timing.empty()) j["timing_seconds"] = r.timing;
  return j.dump(2);
}

std::string render_run_report(const RunReport& r) {
  std::ostringstream out;
  if (r.cleaning) {
    out << "cleaning: " << r.cleaning->n_input << " in, " << r.cleaning->n_oversize_removed
        << " oversize, " << r.cleaning->n_zero_removed << " zero, " << r.cleaning->n_output
        << " kept\n";
  }
  if (r.feature_groups) {
    out << "features: groups " << *r.feature_groups << ", " << r.feature_count.value_or(0)
        << " columns\n";
  }
  if (r.cv) {
    out << "cv: " << r.cv->candidates.size() << " candidates, best #" << r.cv->best_index
        << " mean RMSE " << fixed(r.cv->candidates.at(r.cv->best_index).mean_rmse, 3) << " MB/s\n";
  }
  if (r.holdout_rmse) out << "holdout RMSE: " << fixed(*r.holdout_rmse, 3) << " MB/s\n";
  if (!r.top_importances.empty()) {
    std::size_t width = 7;
    for (const auto& imp : r.top_importances) width = std::max(width, imp.name.size());
    out << "\n" << std::string("feature") << std::string(width - 7 + 2, ' ') << "importance\n";
    out << std::string(width + 12, '-') << "\n";
    for (const auto& imp : r.top_importances) {
      out << imp.name << std::string(width - imp.name.size() + 2, ' ')
          << fixed(100.0 * imp.share, 3) << "%\n";
    }
  }
  for (const auto& [stage, seconds] : r.timing) {
    out << "time " << stage << ": " << fixed(seconds, 2) << " s\n";
  }
  return out.str();
}

}  // namespace xferlag
