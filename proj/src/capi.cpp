#include "xferlag/xferlag.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "csv.hpp"
#include "json.hpp"
#include "xferlag/error.hpp"
#include "xferlag/event.hpp"
#include "xferlag/features.hpp"
#include "xferlag/models.hpp"
#include "xferlag/report.hpp"
#include "xferlag/synth.hpp"
#include "xferlag/validation.hpp"

struct xl_events {
  xferlag::EventLog log;
};

struct xl_features {
  xferlag::FeatureMatrix matrix;
};

struct xl_model {
  xferlag::EnsembleModel model;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

xl_status status_of(xferlag::ErrorKind kind) {
  switch (kind) {
    case xferlag::ErrorKind::InvalidArgument: return XL_ERR_INVALID_ARGUMENT;
    case xferlag::ErrorKind::Schema: return XL_ERR_SCHEMA;
    case xferlag::ErrorKind::Row: return XL_ERR_ROW;
    case xferlag::ErrorKind::Parse: return XL_ERR_PARSE;
    case xferlag::ErrorKind::Precondition: return XL_ERR_PRECONDITION;
    case xferlag::ErrorKind::Io: return XL_ERR_IO;
  }
  return XL_ERR_INTERNAL;
}

template <class F>
xl_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return XL_OK;
  } catch (const xferlag::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = std::string("JSON: ") + e.what();
    return XL_ERR_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return XL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return XL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return XL_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw xferlag::InvalidArgument(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json_arg(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return json::object();
  try {
    auto j = json::parse(text);
    if (!j.is_object()) throw xferlag::ParseError(std::string(what) + " must be a JSON object", "");
    return j;
  } catch (const json::exception& e) {
    throw xferlag::ParseError(std::string("bad ") + what + ": " + e.what(), text);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw xferlag::IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

xferlag::HoldoutConfig holdout_from_json(const json& j) {
  xferlag::HoldoutConfig h;
  h.split = j.value("split", h.split);
  h.train_subset = j.value("train_subset", h.train_subset);
  h.test_subset = j.value("test_subset", h.test_subset);
  h.seed = j.value("seed", h.seed);
  return h;
}

xferlag::SearchSpace search_space_from_json(const json& j) {
  xferlag::SearchSpace s;
  s.learning_rate_min = j.value("learning_rate_min", s.learning_rate_min);
  s.learning_rate_max = j.value("learning_rate_max", s.learning_rate_max);
  s.n_estimators_min = j.value("n_estimators_min", s.n_estimators_min);
  s.n_estimators_max = j.value("n_estimators_max", s.n_estimators_max);
  s.max_depth_min = j.value("max_depth_min", s.max_depth_min);
  s.max_depth_max = j.value("max_depth_max", s.max_depth_max);
  s.min_samples_split_min = j.value("min_samples_split_min", s.min_samples_split_min);
  s.min_samples_split_max = j.value("min_samples_split_max", s.min_samples_split_max);
  s.min_samples_leaf_min = j.value("min_samples_leaf_min", s.min_samples_leaf_min);
  s.min_samples_leaf_max = j.value("min_samples_leaf_max", s.min_samples_leaf_max);
  s.max_features_min = j.value("max_features_min", s.max_features_min);
  s.max_features_max = j.value("max_features_max", s.max_features_max);
  s.subsample_min = j.value("subsample_min", s.subsample_min);
  s.subsample_max = j.value("subsample_max", s.subsample_max);
  s.bootstrap = j.value("bootstrap", s.bootstrap);
  return s;
}

std::string trace_csv(const xferlag::SynthResult& r) {
  std::string out = "event_id,source_state,host_state,node_state,delay_seconds,delay_factor\n";
  const auto& t = r.trace;
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    out += std::to_string(r.events[i].id);
    for (double v : {t.source_state[i], t.host_state[i], t.node_state[i], t.delay_seconds[i],
                     t.delay_factor[i]}) {
      out.push_back(',');
      out += xferlag::csv::format_double17(v);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace

extern "C" {

const char* xl_version(void) { return "0.1.0"; }

const char* xl_last_error(void) { return g_last_error.c_str(); }

const char* xl_status_name(xl_status status) {
  switch (status) {
    case XL_OK: return "ok";
    case XL_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case XL_ERR_SCHEMA: return "schema";
    case XL_ERR_ROW: return "row";
    case XL_ERR_PARSE: return "parse";
    case XL_ERR_PRECONDITION: return "precondition";
    case XL_ERR_IO: return "io";
    case XL_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void xl_string_free(char* text) { std::free(text); }

xl_status xl_events_load(const char* path, xl_events** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new xl_events{xferlag::load_event_csv(path)};
  });
}

xl_status xl_events_parse(const char* csv, size_t length, xl_events** out) {
  return guarded([&] {
    require(csv, "csv");
    require(out, "out");
    *out = new xl_events{xferlag::parse_event_csv(std::string_view(csv, length))};
  });
}

xl_status xl_events_save(const xl_events* events, const char* path) {
  return guarded([&] {
    require(events, "events");
    require(path, "path");
    xferlag::save_event_csv(path, events->log);
  });
}

xl_status xl_events_to_csv(const xl_events* events, char** out_csv) {
  return guarded([&] {
    require(events, "events");
    require(out_csv, "out_csv");
    *out_csv = dup_string(xferlag::format_event_csv(events->log));
  });
}

size_t xl_events_count(const xl_events* events) { return events ? events->log.size() : 0; }

void xl_events_free(xl_events* events) { delete events; }

xl_status xl_events_clean(const xl_events* events, xl_events** out, char** report_json) {
  return guarded([&] {
    require(events, "events");
    require(out, "out");
    auto result = xferlag::clean_events(events->log);
    std::string report = xferlag::cleaning_report_to_json(result.report);
    auto* handle = new xl_events{std::move(result.events)};
    if (report_json) {
      try {
        *report_json = dup_string(report);
      } catch (...) {
        delete handle;
        throw;
      }
    }
    *out = handle;
  });
}

xl_status xl_events_sort(xl_events* events) {
  return guarded([&] {
    require(events, "events");
    events->log = xferlag::sort_by_start(std::move(events->log));
  });
}

xl_status xl_events_filter_stage(const xl_events* events, const char* stage, xl_events** out) {
  return guarded([&] {
    require(events, "events");
    require(stage, "stage");
    require(out, "out");
    auto log = xferlag::filter_stage(events->log, xferlag::parse_stage(stage));
    xferlag::renumber(log);
    *out = new xl_events{std::move(log)};
  });
}

xl_status xl_synth_generate(const char* config_json, xl_events** out, char** meta_json,
                            char** trace) {
  return guarded([&] {
    require(out, "out");
    const auto config = xferlag::synth_config_from_json(
        config_json && *config_json ? std::string(config_json) : std::string("{}"));
    auto result = xferlag::generate_workload(config);
    std::string meta, trace_text;
    if (meta_json) {
      json m{{"format", "xferlag-synth"},
             {"config", json::parse(xferlag::synth_config_to_json(config))},
             {"n_events", result.events.size()}};
      meta = m.dump(2);
    }
    if (trace) trace_text = trace_csv(result);
    char* meta_c = meta_json ? dup_string(meta) : nullptr;
    char* trace_c = nullptr;
    try {
      if (trace) trace_c = dup_string(trace_text);
    } catch (...) {
      std::free(meta_c);
      throw;
    }
    *out = new xl_events{std::move(result.events)};
    if (meta_json) *meta_json = meta_c;
    if (trace) *trace = trace_c;
  });
}

xl_status xl_features_assemble(const xl_events* events, const char* options_json,
                               xl_features** out) {
  return guarded([&] {
    require(events, "events");
    require(out, "out");
    const auto opts = parse_json_arg(options_json, "feature options");
    if (!opts.contains("groups")) throw xferlag::InvalidArgument("feature options need \"groups\"");
    const auto spec = xferlag::parse_feature_spec(opts.at("groups").get<std::string>(),
                                                  opts.value("utc_offset_seconds", std::int64_t{0}));
    xferlag::CategoryVocabulary vocab;
    if (opts.contains("vocabulary_meta")) {
      vocab = xferlag::vocabulary_from_meta_json(opts.at("vocabulary_meta").get<std::string>());
    } else {
      const double fraction = opts.value("vocab_fraction", 1.0);
      if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw xferlag::InvalidArgument("vocab_fraction must be in (0, 1]");
      }
      const auto n = events->log.size();
      const auto n_fit = static_cast<std::size_t>(fraction * static_cast<double>(n) + 1e-9);
      vocab = xferlag::fit_vocabulary(events->log, n_fit);
    }
    *out = new xl_features{xferlag::assemble_features(events->log, spec, &vocab)};
  });
}

xl_status xl_features_save(const xl_features* features, const char* csv_path,
                           const char* meta_path) {
  return guarded([&] {
    require(features, "features");
    require(csv_path, "csv_path");
    require(meta_path, "meta_path");
    xferlag::save_feature_matrix(features->matrix, csv_path, meta_path);
  });
}

xl_status xl_features_load(const char* csv_path, const char* meta_path, xl_features** out) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(meta_path, "meta_path");
    require(out, "out");
    *out = new xl_features{xferlag::load_feature_matrix(csv_path, meta_path)};
  });
}

xl_status xl_features_meta_json(const xl_features* features, char** out_json) {
  return guarded([&] {
    require(features, "features");
    require(out_json, "out_json");
    *out_json = dup_string(xferlag::feature_meta_json(features->matrix));
  });
}

size_t xl_features_rows(const xl_features* features) {
  return features ? features->matrix.n_rows : 0;
}

size_t xl_features_cols(const xl_features* features) {
  return features ? features->matrix.n_cols() : 0;
}

void xl_features_free(xl_features* features) { delete features; }

xl_status xl_model_fit(const xl_features* features, const char* family, const char* params_json,
                       const char* holdout_json, xl_model** out) {
  return guarded([&] {
    require(features, "features");
    require(family, "family");
    require(out, "out");
    const auto fam = xferlag::parse_model_family(family);
    xferlag::HyperParams params;
    if (params_json && *params_json) params = xferlag::params_from_json_text(params_json);
    const auto& x = features->matrix;
    std::vector<std::size_t> rows;
    if (holdout_json) {
      rows = xferlag::holdout_split(x.n_rows, holdout_from_json(parse_json_arg(holdout_json, "holdout")))
                 .train_rows;
    } else {
      rows.resize(x.n_rows);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    *out = new xl_model{xferlag::fit_model(fam, x, x.targets, rows, params)};
  });
}

xl_status xl_model_save(const xl_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    xferlag::save_model(model->model, path);
  });
}

xl_status xl_model_load(const char* path, xl_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new xl_model{xferlag::load_model(path)};
  });
}

xl_status xl_model_to_json(const xl_model* model, char** out_json) {
  return guarded([&] {
    require(model, "model");
    require(out_json, "out_json");
    *out_json = dup_string(xferlag::model_to_json(model->model));
  });
}

xl_status xl_model_predict(const xl_model* model, const xl_features* features, double* out,
                           size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(features, "features");
    require(out, "out");
    if (capacity < features->matrix.n_rows) {
      throw xferlag::InvalidArgument("output buffer holds " + std::to_string(capacity) +
                                     " values, need " + std::to_string(features->matrix.n_rows));
    }
    const auto pred = xferlag::predict(model->model, features->matrix);
    std::copy(pred.begin(), pred.end(), out);
  });
}

xl_status xl_model_importances_json(const xl_model* model, char** out_json) {
  return guarded([&] {
    require(model, "model");
    require(out_json, "out_json");
    json arr = json::array();
    for (const auto& imp : xferlag::ranked_importance(model->model)) {
      arr.push_back({{"feature", imp.name}, {"share", imp.share}});
    }
    *out_json = dup_string(arr.dump(2));
  });
}

void xl_model_free(xl_model* model) { delete model; }

xl_status xl_holdout_eval(const xl_model* model, const xl_features* features,
                          const char* holdout_json, char** summary_json, char** pairs_csv) {
  return guarded([&] {
    require(model, "model");
    require(features, "features");
    const auto config = holdout_from_json(parse_json_arg(holdout_json, "holdout"));
    const auto t0 = std::chrono::steady_clock::now();
    const auto& x = features->matrix;
    const auto result = xferlag::holdout_score(model->model, x, x.targets, config);
    const auto t1 = std::chrono::steady_clock::now();
    xferlag::EvalSummary s;
    s.family = model->model.family;
    s.holdout = config;
    s.rmse = result.rmse;
    s.n_test = result.test_rows.size();
    s.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
    std::string pairs;
    if (pairs_csv) {
      pairs = "event_id,actual,predicted\n";
      for (std::size_t i = 0; i < result.test_rows.size(); ++i) {
        pairs += std::to_string(x.event_ids[result.test_rows[i]]) + "," +
                 xferlag::csv::format_double17(result.actual[i]) + "," +
                 xferlag::csv::format_double17(result.predicted[i]) + "\n";
      }
    }
    char* summary_c = summary_json ? dup_string(xferlag::eval_summary_to_json(s)) : nullptr;
    try {
      if (pairs_csv) *pairs_csv = dup_string(pairs);
    } catch (...) {
      std::free(summary_c);
      throw;
    }
    if (summary_json) *summary_json = summary_c;
  });
}

xl_status xl_cv_run(const xl_features* features, const char* config_json, char** result_json) {
  return guarded([&] {
    require(features, "features");
    require(result_json, "result_json");
    const auto j = parse_json_arg(config_json, "cv config");
    xferlag::CvConfig c;
    c.num_params = j.value("num_params", c.num_params);
    c.k = j.value("k", c.k);
    c.train_width = j.value("train_width", c.train_width);
    c.test_width = j.value("test_width", c.test_width);
    c.train_size = j.value("train_size", c.train_size);
    c.test_size = j.value("test_size", c.test_size);
    c.seed = j.value("seed", c.seed);
    c.use_subsets = j.value("use_subsets", c.use_subsets);
    const auto family = xferlag::parse_model_family(j.value("family", std::string("gbt")));
    const auto space =
        search_space_from_json(j.contains("search_space") ? j.at("search_space") : json::object());
    const auto& x = features->matrix;
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = xferlag::nested_cv(x, x.targets, c, family, space);
    const auto t1 = std::chrono::steady_clock::now();
    auto out = json::parse(xferlag::cv_result_to_json(result, c, family));
    out["elapsed_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    *result_json = dup_string(out.dump(2));
  });
}

xl_status xl_report_build(const char* inputs_json, char** report_json, char** table_text) {
  return guarded([&] {
    const auto j = parse_json_arg(inputs_json, "report inputs");
    xferlag::RunReportInputs in;
    auto load = [&](const char* key, std::optional<std::string>& slot) {
      if (j.contains(key) && !j.at(key).is_null()) slot = read_file(j.at(key).get<std::string>());
    };
    load("cleaning", in.cleaning_json);
    load("features_meta", in.features_meta_json);
    load("cv", in.cv_json);
    load("model", in.model_json);
    load("eval", in.eval_json);
    in.top_n = j.value("top_n", in.top_n);
    in.include_timing = j.value("include_timing", in.include_timing);
    const auto report = xferlag::build_run_report(in);
    char* report_c = report_json ? dup_string(xferlag::run_report_to_json(report)) : nullptr;
    try {
      if (table_text) *table_text = dup_string(xferlag::render_run_report(report));
    } catch (...) {
      std::free(report_c);
      throw;
    }
    if (report_json) *report_json = report_c;
  });
}

}  // extern "C"
