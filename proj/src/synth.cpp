#include "xferlag/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <queue>

#include "json.hpp"
#include "xferlag/error.hpp"
#include "xferlag/filename.hpp"
#include "xferlag/random.hpp"

namespace xferlag {
namespace {

constexpr std::array<const char*, 7> kInstruments = {"cxi", "xpp", "mec", "xcs", "sxr", "mfx", "amo"};
constexpr std::size_t kHosts = 6;
constexpr std::size_t kSourceFs = 2;
constexpr std::size_t kTargetFs = 3;

std::string two_digit(std::size_t v) {
  return (v < 10 ? "0" : "") + std::to_string(v);
}

// Stationary log-state observed at irregular times.
class ResourceState {
 public:
  ResourceState(double sigma, Rng& rng) : sigma_(sigma), log_state_(sigma * standard_normal(rng)) {}

  double at(std::int64_t t, double rho, double step_seconds, Rng& rng) {
    const double elapsed = std::max<double>(0.0, static_cast<double>(t - last_time_));
    if (initialized_ && elapsed > 0.0) {
      const double a = rho <= 0.0 ? 0.0 : std::pow(rho, elapsed / step_seconds);
      log_state_ = a * log_state_ + sigma_ * std::sqrt(std::max(0.0, 1.0 - a * a)) * standard_normal(rng);
    } else if (!initialized_) {
      initialized_ = true;
    }
    last_time_ = t;
    return std::exp(log_state_);
  }

  void resample(Rng& rng) { log_state_ = sigma_ * standard_normal(rng); }
  void perturb(double scale, Rng& rng) { log_state_ += scale * sigma_ * standard_normal(rng); }

 private:
  double sigma_;
  double log_state_;
  std::int64_t last_time_ = 0;
  bool initialized_ = false;
};

struct Skeleton {
  std::int64_t start = 0;
  double delay = 0.0;
  bool large_delay = false;
  double size = 0.0;
  std::size_t instrument = 0;
  std::size_t experiment = 0;  // global experiment index
  std::size_t run = 0;
  std::size_t stream = 0;
  std::size_t chunk = 0;
  std::size_t host = 0;
  std::size_t source_fs = 0;
  std::size_t target_fs = 0;
  std::size_t order = 0;  // generation order, tie-break
};

struct InstrumentTimeline {
  std::int64_t next_chunk = 0;
  std::size_t experiment_slot = 0;
  std::size_t run_in_experiment = 0;
  std::size_t run_number = 0;
  // Current run.
  std::size_t streams = 0;
  std::size_t chunks_left = 0;
  std::size_t chunk = 0;
  std::size_t host_offset = 0;
  std::vector<double> last_chunk_size;  // per stream
  std::vector<std::size_t> chunks_per_stream;
};

}  // namespace

void validate(const SynthConfig& c) {
  const auto check = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string("invalid synth config: ") + what);
  };
  check(c.n_instruments >= 1 && c.n_instruments <= kInstruments.size(), "n_instruments in [1, 7]");
  check(c.experiments_per_instrument >= 1 && c.experiments_per_instrument <= 100,
        "experiments_per_instrument in [1, 100]");
  check(c.runs_per_experiment >= 1, "runs_per_experiment >= 1");
  check(c.streams_min >= 1 && c.streams_min <= c.streams_max && c.streams_max <= 99, "streams range");
  check(c.chunk_cap_gb > 0.0 && c.chunk_cap_gb <= kMaxFileSizeGb, "chunk_cap_gb in (0, 1000]");
  check(c.run_volume_median_gb > 0.0 && c.run_volume_log_sd >= 0.0, "run volume");
  check(c.chunk_interval_min_s >= 1.0 && c.chunk_interval_min_s <= c.chunk_interval_max_s,
        "chunk interval");
  check(c.run_gap_mean_s >= 0.0, "run_gap_mean_s >= 0");
  check(c.rho >= 0.0 && c.rho < 1.0, "0 <= rho < 1");
  check(c.state_step_seconds > 0.0, "state_step_seconds > 0");
  check(c.source_state_sigma >= 0.0 && c.host_state_sigma >= 0.0 && c.node_state_sigma >= 0.0,
        "state sigmas >= 0");
  check(c.rate_max_mbs > 0.0 && c.half_rate_size_gb >= 0.0, "rate curve");
  check(c.min_rate_mbs > 0.0 && c.min_rate_mbs <= c.rate_cap_mbs, "rate bounds");
  check(c.noise_scale >= 0.0, "noise_scale >= 0");
  check(c.delay_probability >= 0.0 && c.delay_probability <= 1.0, "delay_probability in [0, 1]");
  check(c.large_delay_fraction >= 0.0 && c.large_delay_fraction <= 1.0,
        "large_delay_fraction in [0, 1]");
  check(c.small_delay_min_s >= 0.0 && c.small_delay_min_s <= c.small_delay_max_s, "small delays");
  check(c.large_delay_min_s >= 0.0 && c.large_delay_min_s <= c.large_delay_max_s, "large delays");
  check(c.delay_boost >= 0.0, "delay_boost >= 0");
}

SynthResult generate_workload(const SynthConfig& c) {
  validate(c);
  SynthResult result;
  if (c.n_events == 0) return result;

  // Independent streams so that, e.g., changing noise does not move the timeline.
  Rng layout_rng(derive_seed(c.seed, 1));
  Rng state_rng(derive_seed(c.seed, 2));
  Rng noise_rng(derive_seed(c.seed, 3));

  // --- Phase 1: chunk timeline and file skeletons -------------------------
  std::vector<InstrumentTimeline> timelines(c.n_instruments);
  using Next = std::pair<std::int64_t, std::size_t>;
  std::priority_queue<Next, std::vector<Next>, std::greater<>> due;
  for (std::size_t i = 0; i < c.n_instruments; ++i) {
    timelines[i].next_chunk =
        c.start_time + static_cast<std::int64_t>(uniform_real(layout_rng, 0.0, c.chunk_interval_max_s));
    due.emplace(timelines[i].next_chunk, i);
  }

  const auto start_run = [&](InstrumentTimeline& tl) {
    if (tl.run_in_experiment == c.runs_per_experiment) {
      tl.run_in_experiment = 0;
      tl.experiment_slot = (tl.experiment_slot + 1) % c.experiments_per_instrument;
    }
    ++tl.run_in_experiment;
    ++tl.run_number;
    tl.streams = static_cast<std::size_t>(
        uniform_int(layout_rng, static_cast<std::int64_t>(c.streams_min),
                    static_cast<std::int64_t>(c.streams_max)));
    tl.host_offset = static_cast<std::size_t>(uniform_index(layout_rng, kHosts));
    const double volume =
        c.run_volume_median_gb * std::exp(c.run_volume_log_sd * standard_normal(layout_rng));
    tl.chunks_per_stream.assign(tl.streams, 0);
    tl.last_chunk_size.assign(tl.streams, 0.0);
    std::size_t max_chunks = 0;
    for (std::size_t s = 0; s < tl.streams; ++s) {
      const double v = std::clamp(volume * uniform_real(layout_rng, 0.97, 1.03), 0.01, 20.0 * c.chunk_cap_gb);
      const auto chunks = static_cast<std::size_t>(std::ceil(v / c.chunk_cap_gb));
      tl.chunks_per_stream[s] = std::max<std::size_t>(1, chunks);
      tl.last_chunk_size[s] = std::max(0.01, v - c.chunk_cap_gb * static_cast<double>(tl.chunks_per_stream[s] - 1));
      max_chunks = std::max(max_chunks, tl.chunks_per_stream[s]);
    }
    tl.chunks_left = max_chunks;
    tl.chunk = 0;
  };

  std::vector<Skeleton> files;
  files.reserve(c.n_events);
  while (files.size() < c.n_events) {
    const auto [now, inst] = due.top();
    due.pop();
    auto& tl = timelines[inst];
    if (tl.chunks_left == 0) start_run(tl);

    const std::size_t experiment = inst * c.experiments_per_instrument + tl.experiment_slot;
    for (std::size_t s = 0; s < tl.streams && files.size() < c.n_events; ++s) {
      if (tl.chunk >= tl.chunks_per_stream[s]) continue;
      Skeleton f;
      f.instrument = inst;
      f.experiment = experiment;
      f.run = tl.run_number;
      f.stream = s + 1;
      f.chunk = tl.chunk;
      f.host = (tl.host_offset + s) % kHosts;
      f.source_fs = inst % kSourceFs;
      f.target_fs = experiment % kTargetFs;
      const bool last = tl.chunk + 1 == tl.chunks_per_stream[s];
      f.size = last ? tl.last_chunk_size[s]
                    : c.chunk_cap_gb * uniform_real(layout_rng, 0.985, 0.9885);
      f.delay = 0.0;
      if (uniform01(layout_rng) < c.delay_probability) {
        f.large_delay = uniform01(layout_rng) < c.large_delay_fraction;
        f.delay = f.large_delay
                      ? uniform_real(layout_rng, c.large_delay_min_s, c.large_delay_max_s)
                      : uniform_real(layout_rng, c.small_delay_min_s, c.small_delay_max_s);
        f.delay = std::round(f.delay);
      }
      f.start = now + static_cast<std::int64_t>(f.delay);
      f.order = files.size();
      files.push_back(f);
    }
    ++tl.chunk;
    --tl.chunks_left;
    std::int64_t next =
        now + static_cast<std::int64_t>(uniform_real(layout_rng, c.chunk_interval_min_s, c.chunk_interval_max_s));
    if (tl.chunks_left == 0) {
      next += static_cast<std::int64_t>(-c.run_gap_mean_s * std::log(1.0 - uniform01(layout_rng)));
    }
    tl.next_chunk = next;
    due.emplace(next, inst);
  }

  std::stable_sort(files.begin(), files.end(), [](const Skeleton& a, const Skeleton& b) {
    return a.start != b.start ? a.start < b.start : a.order < b.order;
  });

  // --- Phase 2: hidden states and rates, in start order -------------------
  std::vector<ResourceState> source_states, host_states, node_states;
  for (std::size_t i = 0; i < kSourceFs; ++i) source_states.emplace_back(c.source_state_sigma, state_rng);
  for (std::size_t i = 0; i < kHosts; ++i) host_states.emplace_back(c.host_state_sigma, state_rng);
  for (std::size_t i = 0; i < c.n_instruments * c.streams_max; ++i) {
    node_states.emplace_back(c.node_state_sigma, state_rng);
  }

  auto& events = result.events;
  auto& trace = result.trace;
  events.reserve(files.size());
  for (const auto& f : files) {
    auto& node_state = node_states[f.instrument * c.streams_max + (f.stream - 1)];
    auto& host_state = host_states[f.host];
    if (f.large_delay) {
      node_state.resample(state_rng);
      host_state.resample(state_rng);
    } else if (f.delay > 0.0) {
      node_state.perturb(0.25, state_rng);
      host_state.perturb(0.25, state_rng);
    }
    const double s_src = source_states[f.source_fs].at(f.start, c.rho, c.state_step_seconds, state_rng);
    const double s_host = host_state.at(f.start, c.rho, c.state_step_seconds, state_rng);
    const double s_node = node_state.at(f.start, c.rho, c.state_step_seconds, state_rng);
    const double delay_factor = 1.0 + c.delay_boost * (1.0 - std::exp(-f.delay / 1800.0));
    const double base = c.rate_max_mbs * f.size / (f.size + c.half_rate_size_gb);
    double rate = base * s_src * s_host * s_node * delay_factor;
    if (c.noise_scale > 0.0) rate += c.noise_scale * standard_normal(noise_rng);
    rate = std::clamp(rate, c.min_rate_mbs, c.rate_cap_mbs);

    TransferEvent e;
    e.id = events.size();
    e.start_time = f.start;
    const double seconds = f.size * 1000.0 / rate;
    e.stop_time = f.start + std::max<std::int64_t>(1, std::llround(seconds));
    e.file_size = f.size;
    e.transfer_rate = rate;
    e.instrument = kInstruments[f.instrument];
    const std::size_t exp_num = 100 * (f.instrument + 1) + f.experiment % c.experiments_per_instrument;
    e.experiment = e.instrument + std::to_string(exp_num);
    e.target_host = "psana20" + std::to_string(f.host + 1);
    e.target_fs = "ana" + two_digit(f.target_fs + 1);
    e.source_fs = "ffb" + two_digit(f.source_fs + 1);
    e.node = e.instrument + "dss" + two_digit(f.stream);
    e.file_name = format_filename({exp_num, f.run, f.stream, f.chunk});
    e.stage = c.stage;
    events.push_back(std::move(e));

    trace.source_state.push_back(s_src);
    trace.host_state.push_back(s_host);
    trace.node_state.push_back(s_node);
    trace.delay_seconds.push_back(f.delay);
    trace.delay_factor.push_back(delay_factor);
  }

  // Start-sorted with the canonical tie-break, ids re-dense afterwards.
  std::vector<std::size_t> perm(events.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = events[a];
    const auto& y = events[b];
    if (x.start_time != y.start_time) return x.start_time < y.start_time;
    return x.stop_time < y.stop_time;
  });
  SynthResult sorted;
  for (auto p : perm) {
    sorted.events.push_back(std::move(events[p]));
    sorted.trace.source_state.push_back(trace.source_state[p]);
    sorted.trace.host_state.push_back(trace.host_state[p]);
    sorted.trace.node_state.push_back(trace.node_state[p]);
    sorted.trace.delay_seconds.push_back(trace.delay_seconds[p]);
    sorted.trace.delay_factor.push_back(trace.delay_factor[p]);
  }
  renumber(sorted.events);
  return sorted;
}

namespace {
using nlohmann::json;

template <typename T>
void read_opt(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}
}  // namespace

std::string synth_config_to_json(const SynthConfig& c) {
  json j{{"n_events", c.n_events},
         {"n_instruments", c.n_instruments},
         {"experiments_per_instrument", c.experiments_per_instrument},
         {"runs_per_experiment", c.runs_per_experiment},
         {"streams_min", c.streams_min},
         {"streams_max", c.streams_max},
         {"chunk_cap_gb", c.chunk_cap_gb},
         {"run_volume_median_gb", c.run_volume_median_gb},
         {"run_volume_log_sd", c.run_volume_log_sd},
         {"chunk_interval_min_s", c.chunk_interval_min_s},
         {"chunk_interval_max_s", c.chunk_interval_max_s},
         {"run_gap_mean_s", c.run_gap_mean_s},
         {"rho", c.rho},
         {"state_step_seconds", c.state_step_seconds},
         {"source_state_sigma", c.source_state_sigma},
         {"host_state_sigma", c.host_state_sigma},
         {"node_state_sigma", c.node_state_sigma},
         {"rate_max_mbs", c.rate_max_mbs},
         {"half_rate_size_gb", c.half_rate_size_gb},
         {"rate_cap_mbs", c.rate_cap_mbs},
         {"min_rate_mbs", c.min_rate_mbs},
         {"noise_scale", c.noise_scale},
         {"delay_probability", c.delay_probability},
         {"large_delay_fraction", c.large_delay_fraction},
         {"small_delay_min_s", c.small_delay_min_s},
         {"small_delay_max_s", c.small_delay_max_s},
         {"large_delay_min_s", c.large_delay_min_s},
         {"large_delay_max_s", c.large_delay_max_s},
         {"delay_boost", c.delay_boost},
         {"stage", std::string(to_string(c.stage))},
         {"start_time", c.start_time},
         {"seed", c.seed}};
  return j.dump(2);
}

SynthConfig synth_config_from_json(const std::string& text) {
  SynthConfig c;
  try {
    const auto j = json::parse(text);
    read_opt(j, "n_events", c.n_events);
    read_opt(j, "n_instruments", c.n_instruments);
    read_opt(j, "experiments_per_instrument", c.experiments_per_instrument);
    read_opt(j, "runs_per_experiment", c.runs_per_experiment);
    read_opt(j, "streams_min", c.streams_min);
    read_opt(j, "streams_max", c.streams_max);
    read_opt(j, "chunk_cap_gb", c.chunk_cap_gb);
    read_opt(j, "run_volume_median_gb", c.run_volume_median_gb);
    read_opt(j, "run_volume_log_sd", c.run_volume_log_sd);
    read_opt(j, "chunk_interval_min_s", c.chunk_interval_min_s);
    read_opt(j, "chunk_interval_max_s", c.chunk_interval_max_s);
    read_opt(j, "run_gap_mean_s", c.run_gap_mean_s);
    read_opt(j, "rho", c.rho);
    read_opt(j, "state_step_seconds", c.state_step_seconds);
    read_opt(j, "source_state_sigma", c.source_state_sigma);
    read_opt(j, "host_state_sigma", c.host_state_sigma);
    read_opt(j, "node_state_sigma", c.node_state_sigma);
    read_opt(j, "rate_max_mbs", c.rate_max_mbs);
    read_opt(j, "half_rate_size_gb", c.half_rate_size_gb);
    read_opt(j, "rate_cap_mbs", c.rate_cap_mbs);
    read_opt(j, "min_rate_mbs", c.min_rate_mbs);
    read_opt(j, "noise_scale", c.noise_scale);
    read_opt(j, "delay_probability", c.delay_probability);
    read_opt(j, "large_delay_fraction", c.large_delay_fraction);
    read_opt(j, "small_delay_min_s", c.small_delay_min_s);
    read_opt(j, "small_delay_max_s", c.small_delay_max_s);
    read_opt(j, "large_delay_min_s", c.large_delay_min_s);
    read_opt(j, "large_delay_max_s", c.large_delay_max_s);
    read_opt(j, "delay_boost", c.delay_boost);
    if (j.contains("stage")) c.stage = parse_stage(j.at("stage").get<std::string>());
    read_opt(j, "start_time", c.start_time);
    read_opt(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad synth config JSON: ") + e.what(), "");
  }
  validate(c);
  return c;
}

}  // namespace xferlag
