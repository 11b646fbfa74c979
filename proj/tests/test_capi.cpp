// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "xferlag/xferlag.h"

using nlohmann::json;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  xl_string_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

xl_events* synth(std::size_t n, std::uint64_t seed) {
  xl_events* ev = nullptr;
  const auto cfg = json{{"n_events", n}, {"seed", seed}}.dump();
  REQUIRE(xl_synth_generate(cfg.c_str(), &ev, nullptr, nullptr) == XL_OK);
  return ev;
}

int run(const std::string& args) {
  const std::string cmd = std::string(XFERLAG_CLI) + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("status codes and messages") {
  xl_events* ev = nullptr;
  const char* bad = "start_time,stop_time\n";
  CHECK(xl_events_parse(bad, std::strlen(bad), &ev) == XL_ERR_SCHEMA);
  CHECK(std::string(xl_last_error()).find("file_size_gb") != std::string::npos);
  CHECK(ev == nullptr);

  const std::string row_err =
      "start_time,stop_time,file_size_gb,transfer_rate_mbs,instrument,experiment,target_host,"
      "target_fs,source_fs,node,file_name,stage\n1,2,1,abc,a,b,c,d,e,f,g,DSS_TO_FFB\n";
  CHECK(xl_events_parse(row_err.c_str(), row_err.size(), &ev) == XL_ERR_ROW);
  CHECK(std::string(xl_last_error()).rfind("row 0", 0) == 0);

  CHECK(xl_events_load("/nonexistent/file.csv", &ev) == XL_ERR_IO);
  CHECK(xl_events_load(nullptr, &ev) == XL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(xl_status_name(XL_ERR_PRECONDITION)) == "precondition");
  CHECK(xl_events_count(nullptr) == 0);
  xl_events_free(nullptr);
}

TEST_CASE("events through the C API") {
  xl_events* ev = synth(500, 1);
  CHECK(xl_events_count(ev) == 500);
  char* csv = nullptr;
  REQUIRE(xl_events_to_csv(ev, &csv) == XL_OK);
  const std::string text = take(csv);
  xl_events* back = nullptr;
  REQUIRE(xl_events_parse(text.data(), text.size(), &back) == XL_OK);
  char* csv2 = nullptr;
  REQUIRE(xl_events_to_csv(back, &csv2) == XL_OK);
  CHECK(take(csv2) == text);

  xl_events* cleaned = nullptr;
  char* report = nullptr;
  REQUIRE(xl_events_clean(back, &cleaned, &report) == XL_OK);
  const auto j = json::parse(take(report));
  CHECK(j["n_output"] == 500);
  xl_events* dss = nullptr;
  REQUIRE(xl_events_filter_stage(cleaned, "DSS_TO_FFB", &dss) == XL_OK);
  CHECK(xl_events_count(dss) == 0);  // the generator emits FFB_TO_ANA by default
  xl_events* none = nullptr;
  CHECK(xl_events_filter_stage(cleaned, "nope", &none) == XL_ERR_INVALID_ARGUMENT);
  xl_events_free(dss);
  xl_events_free(cleaned);
  xl_events_free(back);
  xl_events_free(ev);
}

TEST_CASE("features, model, holdout and CV") {
  xl_events* ev = synth(4000, 2);
  xl_features* f = nullptr;
  CHECK(xl_features_assemble(ev, "{\"groups\":\"B\"}", &f) == XL_ERR_INVALID_ARGUMENT);
  CHECK(xl_features_assemble(ev, "{}", &f) == XL_ERR_INVALID_ARGUMENT);
  CHECK(xl_features_assemble(ev, "{bad", &f) == XL_ERR_PARSE);
  REQUIRE(xl_features_assemble(ev, "{\"groups\":\"A,D1\",\"vocab_fraction\":0.9}", &f) == XL_OK);
  CHECK(xl_features_rows(f) == 4000);

  xl_model* m = nullptr;
  const char* holdout = "{\"split\":0.9,\"seed\":1}";
  REQUIRE(xl_model_fit(f, "gbt", "{\"n_estimators\":40,\"max_depth\":4}", holdout, &m) == XL_OK);
  std::vector<double> pred(xl_features_rows(f));
  CHECK(xl_model_predict(m, f, pred.data(), 10) == XL_ERR_INVALID_ARGUMENT);
  REQUIRE(xl_model_predict(m, f, pred.data(), pred.size()) == XL_OK);
  for (double p : pred) CHECK(p >= 0.0);

  char* summary = nullptr;
  char* pairs = nullptr;
  REQUIRE(xl_holdout_eval(m, f, holdout, &summary, &pairs) == XL_OK);
  const auto s = json::parse(take(summary));
  CHECK(s["n_test"] == 400);
  const auto pair_text = take(pairs);
  CHECK(pair_text.rfind("event_id,actual,predicted\n", 0) == 0);
  CHECK(std::count(pair_text.begin(), pair_text.end(), '\n') == 401);

  char* imps = nullptr;
  REQUIRE(xl_model_importances_json(m, &imps) == XL_OK);
  const auto ij = json::parse(take(imps));
  double total = 0;
  for (std::size_t i = 0; i < ij.size(); ++i) {
    total += ij[i]["share"].get<double>();
    if (i) CHECK(ij[i - 1]["share"].get<double>() >= ij[i]["share"].get<double>());
  }
  CHECK(total == doctest::Approx(1.0));

  // Save, reload and predict the same values.
  REQUIRE(xl_model_save(m, "capi_model.json") == XL_OK);
  REQUIRE(xl_features_save(f, "capi_f.csv", "capi_f.meta.json") == XL_OK);
  xl_model* m2 = nullptr;
  xl_features* f2 = nullptr;
  REQUIRE(xl_model_load("capi_model.json", &m2) == XL_OK);
  REQUIRE(xl_features_load("capi_f.csv", "capi_f.meta.json", &f2) == XL_OK);
  std::vector<double> pred2(pred.size());
  REQUIRE(xl_model_predict(m2, f2, pred2.data(), pred2.size()) == XL_OK);
  CHECK(pred2 == pred);

  xl_features* fa = nullptr;
  REQUIRE(xl_features_assemble(ev, "{\"groups\":\"A\"}", &fa) == XL_OK);
  CHECK(xl_model_predict(m, fa, pred.data(), pred.size()) == XL_ERR_INVALID_ARGUMENT);

  char* cv = nullptr;
  const auto cfg = json{{"family", "rf"}, {"num_params", 2}, {"k", 2}, {"train_width", 1000},
                        {"test_width", 200}, {"train_size", 500}, {"test_size", 100},
                        {"search_space", {{"n_estimators_max", 60}}}}
                       .dump();
  REQUIRE(xl_cv_run(f, cfg.c_str(), &cv) == XL_OK);
  const auto cvj = json::parse(take(cv));
  CHECK(cvj["candidates"].size() == 2);
  CHECK(xl_cv_run(f, "{\"train_width\": 100000}", &cv) == XL_ERR_INVALID_ARGUMENT);

  xl_features_free(fa);
  xl_features_free(f2);
  xl_model_free(m2);
  xl_model_free(m);
  xl_features_free(f);
  xl_events_free(ev);
}

TEST_CASE("CLI pipeline end to end") {
  REQUIRE(run("synth --out cli_raw.csv --n-events 6000 --seed 3 --trace cli_trace.csv") == 0);
  CHECK(json::parse(slurp("cli_raw.csv.meta.json"))["n_events"] == 6000);
  REQUIRE(run("clean --in cli_raw.csv --out cli_clean.csv --report cli_clean.json") == 0);
  REQUIRE(run("features --in cli_clean.csv --out cli_f.csv --groups A,B,C2,D1,D3,E "
              "--tz-offset-hours -7") == 0);
  REQUIRE(run("cv --features cli_f.csv --out cli_cv.json --num-params 2 --cv-k 2 "
              "--train-width 2000 --test-width 400 --train-size 1000 --test-size 200") == 0);
  REQUIRE(run("train --features cli_f.csv --params cli_cv.json --out cli_model.json") == 0);
  REQUIRE(run("eval --features cli_f.csv --model cli_model.json --out cli_eval.json "
              "--pairs cli_pairs.csv") == 0);
  CHECK(slurp("cli_stdout.txt").find("holdout RMSE") != std::string::npos);
  const std::string report_args =
      "report --cleaning cli_clean.json --features-meta cli_f.csv.meta.json --cv cli_cv.json "
      "--model cli_model.json --eval cli_eval.json --top 200 --out ";
  REQUIRE(run(report_args + "cli_report1.json") == 0);
  CHECK(slurp("cli_stdout.txt").find("importance") != std::string::npos);
  const auto rep = json::parse(slurp("cli_report1.json"));
  CHECK(rep["importance_total_percent"].get<double>() == doctest::Approx(100.0).epsilon(1e-4));
  double listed = 0;
  for (std::size_t i = 0; i < rep["top_importances"].size(); ++i) {
    listed += rep["top_importances"][i]["percent"].get<double>();
    if (i) {
      CHECK(rep["top_importances"][i - 1]["share"].get<double>() >=
            rep["top_importances"][i]["share"].get<double>());
    }
  }
  CHECK(listed == doctest::Approx(100.0).epsilon(1e-4));
  CHECK(rep["holdout_rmse_mbs"].get<double>() >= 0.0);
  CHECK_FALSE(rep.contains("timing_seconds"));

  // Replaying every stage from the same inputs gives the same report.
  REQUIRE(run("clean --in cli_raw.csv --out cli_clean2.csv --report cli_clean2.json") == 0);
  CHECK(slurp("cli_clean2.csv") == slurp("cli_clean.csv"));
  REQUIRE(run("features --in cli_clean2.csv --out cli_f2.csv --groups A,B,C2,D1,D3,E "
              "--tz-offset-hours -7") == 0);
  CHECK(slurp("cli_f2.csv") == slurp("cli_f.csv"));
  REQUIRE(run("cv --features cli_f2.csv --out cli_cv2.json --num-params 2 --cv-k 2 "
              "--train-width 2000 --test-width 400 --train-size 1000 --test-size 200") == 0);
  REQUIRE(run("train --features cli_f2.csv --params cli_cv2.json --out cli_model2.json") == 0);
  CHECK(slurp("cli_model2.json") == slurp("cli_model.json"));
  REQUIRE(run("eval --features cli_f2.csv --model cli_model2.json --out cli_eval2.json") == 0);
  REQUIRE(run("report --cleaning cli_clean2.json --features-meta cli_f2.csv.meta.json --cv "
              "cli_cv2.json --model cli_model2.json --eval cli_eval2.json --top 200 --out "
              "cli_report2.json") == 0);
  CHECK(slurp("cli_report2.json") == slurp("cli_report1.json"));
}

TEST_CASE("CLI mean-only model scores the test spread") {
  REQUIRE(run("synth --out cli_m.csv --n-events 3000 --seed 9") == 0);
  REQUIRE(run("features --in cli_m.csv --out cli_mf.csv --groups A") == 0);
  // A single shrunk-to-nothing tree leaves the training mean as the prediction.
  {
    std::ofstream p("cli_mean_params.json");
    p << R"({"n_estimators": 1, "learning_rate": 1e-12, "max_depth": 1})";
  }
  REQUIRE(run("train --features cli_mf.csv --params cli_mean_params.json --out cli_mm.json") == 0);
  REQUIRE(run("eval --features cli_mf.csv --model cli_mm.json --out cli_me.json --pairs cli_mp.csv") == 0);
  const double got = json::parse(slurp("cli_me.json"))["rmse"].get<double>();

  std::ifstream pairs("cli_mp.csv");
  std::string line;
  std::getline(pairs, line);
  std::vector<double> actual;
  double pred0 = -1;
  while (std::getline(pairs, line)) {
    std::stringstream ss(line);
    std::string id, a, p;
    std::getline(ss, id, ',');
    std::getline(ss, a, ',');
    std::getline(ss, p, ',');
    actual.push_back(std::stod(a));
    pred0 = std::stod(p);
  }
  double mean = 0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double var = 0;
  for (double a : actual) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(actual.size()));
  // rmse^2 = sd^2 + (train mean - test mean)^2
  CHECK(got * got == doctest::Approx(sd * sd + (pred0 - mean) * (pred0 - mean)).epsilon(1e-6));
  CHECK(got >= sd);
}

TEST_CASE("CLI exit codes") {
  CHECK(run("") == 2);
  CHECK(run("train") == 2);
  CHECK(run("features --in cli_raw.csv --out x.csv --groups Z") == 2);
  CHECK(run("synth --out x.csv --n-events abc") == 2);
  {
    std::ofstream bad("cli_bad.csv");
    bad << "start_time,stop_time,file_size_gb,transfer_rate_mbs,instrument,experiment,target_host,"
           "target_fs,source_fs,node,file_name,stage\n"
           "1,2,1,5,a,b,c,d,e,f,g,DSS_TO_FFB\n1,2,1,oops,a,b,c,d,e,f,g,DSS_TO_FFB\n";
  }
  CHECK(run("clean --in cli_bad.csv --out y.csv") == 1);
  CHECK(slurp("cli_stderr.txt").find("row 1") != std::string::npos);
  CHECK(run("clean --in does_not_exist.csv --out y.csv") == 1);
}
