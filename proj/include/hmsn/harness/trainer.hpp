#pragma once

#include "hmsn/harness/checkpoint.hpp"
#include "hmsn/harness/dataset.hpp"
#include "hmsn/objective.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hmsn::harness {

struct StepMetrics {
  long step = 0;
  objective::LossBreakdown loss;
  double proto_mean_norm = 0.0;
  double lr = 0.0;
  double ema = 0.0;
  std::vector<int> rep_norm_hist;  // 10 bins over [0, hist_max), overflow in the last

  // One JSON object, shortest round-trip doubles, no trailing newline.
  std::string to_json() const;
};

constexpr int kHistBins = 10;

// Batch indices for a step: a per-epoch permutation that depends only on
// (seed, epoch), with the last partial batch dropped.
std::vector<int> batch_indices(std::uint64_t seed, long step, std::size_t dataset_size, int batch_size);

// One optimization step on `state`; advances state.step.
StepMetrics train_step(TrainState& state, const Dataset& data, long total_steps);

struct TrainOptions {
  std::string resume;    // checkpoint to continue from
  long stop_after = -1;  // stop once this many steps are done (total schedule unchanged)
  std::function<void(const StepMetrics&)> on_step;
};

struct TrainResult {
  TrainState state;
  std::string checkpoint;  // path of the last checkpoint written
  std::string metrics;     // path of the metrics log
};

// Writes <out_dir>/config.json, appends to <out_dir>/metrics.jsonl, writes
// <out_dir>/checkpoint.bin at the end and ckpt_<step>.bin every
// checkpoint_every steps. A non-finite loss or gradient writes
// <out_dir>/diagnostic.json and throws.
TrainResult train(const RunConfig& config, const TrainOptions& options = {});
TrainResult train(const RunConfig& config, const Dataset& data, const TrainOptions& options = {});

// Parses metrics.jsonl back into per-step records.
std::vector<StepMetrics> read_metrics(const std::string& path);

}  // namespace hmsn::harness
