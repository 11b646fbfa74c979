#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xferlag/event.hpp"

namespace xferlag {

// Seeded generator of chunked, multi-stream transfer logs driven by hidden
// per-resource throughput states.
//
// Each resource (source file system, target host, DSS node) carries a
// log-throughput state that follows a stationary Gaussian AR(1) with
// coefficient `rho` per `state_step_seconds` of wall time, sampled at the
// start of every transfer that uses it. The recorded rate is
//
//   rate = g(size) * S_source * S_host * S_node * delay_factor + noise,
//   g(size) = rate_max * size / (size + half_rate_size_gb),
//
// clipped to [min_rate_mbs, rate_cap_mbs].
struct SynthConfig {
  std::size_t n_events = 50000;
  std::size_t n_instruments = 7;  // at most 7
  std::size_t experiments_per_instrument = 4;
  std::size_t runs_per_experiment = 12;
  std::size_t streams_min = 5;
  std::size_t streams_max = 6;
  double chunk_cap_gb = 100.0;
  // Per-stream run volume is log-normal with this median and log-sd.
  double run_volume_median_gb = 150.0;
  double run_volume_log_sd = 1.2;
  double chunk_interval_min_s = 1200.0;
  double chunk_interval_max_s = 2400.0;
  double run_gap_mean_s = 1800.0;

  double rho = 0.95;
  double state_step_seconds = 600.0;
  double source_state_sigma = 0.4;   // stationary log-sd
  double host_state_sigma = 0.25;
  double node_state_sigma = 0.25;

  double rate_max_mbs = 220.0;
  double half_rate_size_gb = 8.0;
  double rate_cap_mbs = 400.0;
  double min_rate_mbs = 0.5;
  double noise_scale = 5.0;  // additive Gaussian noise sd, MB/s

  double delay_probability = 0.03;     // per stream and chunk
  double large_delay_fraction = 0.3;   // share of delays lasting hours
  double small_delay_min_s = 60.0, small_delay_max_s = 300.0;
  double large_delay_min_s = 3600.0, large_delay_max_s = 14400.0;
  double delay_boost = 0.5;            // delay_factor = 1 + boost * (1 - exp(-delay / 1800))

  Stage stage = Stage::FfbToAna;
  std::int64_t start_time = 1496275200;  // 2017-06-01T00:00:00Z
  std::uint64_t seed = 0;

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

// Throws InvalidArgument for out-of-range values.
void validate(const SynthConfig& config);

// Per-event ground truth, aligned with the emitted events.
struct HiddenTrace {
  std::vector<double> source_state;
  std::vector<double> host_state;
  std::vector<double> node_state;
  std::vector<double> delay_seconds;
  std::vector<double> delay_factor;
};

struct SynthResult {
  EventLog events;  // start-sorted, ids 0..n-1
  HiddenTrace trace;
};

SynthResult generate_workload(const SynthConfig& config);

std::string synth_config_to_json(const SynthConfig& config);
// Missing keys keep their defaults.
SynthConfig synth_config_from_json(const std::string& text);

}  // namespace xferlag
