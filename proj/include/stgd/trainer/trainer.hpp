#pragma once

#include "stgd/core/graph.hpp"
#include "stgd/model/model.hpp"
#include "stgd/nn/parameters.hpp"
#include "stgd/objective/objective.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace stgd::trainer {

using objective::LossBreakdown;
using objective::Thresholds;

/// Capacity-growth stage of the thresholding schedule.
enum class Stage { SgGrowth, TGrowth, Done };

std::string to_string(Stage s);
Stage parse_stage(const std::string& name);

struct TrainerConfig {
  double epsilon = 1e-5;  // initial I_t and I_sg
  double alpha = 0.5;     // I_sg step
  double gamma = 0.5;     // I_t step
  int K = 5;              // epochs per I_sg block
  int J = 5;              // epochs per I_t block
  double learning_rate = 1e-3;
  int batch_size = 8;
  int max_epochs = 300;
  /// Periodic checkpoints retained on disk (oldest pruned); final.ckpt is always kept.
  int keep_checkpoints = 3;
  model::Variant variant = model::Variant::Indep;
  std::uint64_t seed = 0;
  objective::Betas betas;

  /// Throws ConfigError on invalid values.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainerConfig from_json(const nlohmann::json& j);
};

struct TrainerState {
  double I_t = 0;
  double I_sg = 0;
  Stage stage = Stage::SgGrowth;
  /// Completed epochs.
  int epoch = 0;
  /// Completed epochs of the current K/J block and their summed R2, R3.
  int block_epoch = 0;
  double block_r2 = 0;
  double block_r3 = 0;
  bool max_epochs_reached = false;

  Thresholds thresholds(const objective::Betas& betas) const;
  bool operator==(const TrainerState&) const = default;
};

/// Thresholds at epsilon, stage SgGrowth, before the first increment.
TrainerState initial_state(const TrainerConfig& config);

/// First step of the schedule: I_sg += alpha before any training.
TrainerState begin_schedule(const TrainerState& state, const TrainerConfig& config);

/// Transition after a completed block with block-averaged R2/R3:
///   SgGrowth: R3 < 0 -> TGrowth (then, as on every TGrowth check, R2 < 0 ->
///             Done, else I_t += gamma); otherwise I_sg += alpha.
///   TGrowth:  R2 < 0 -> Done; otherwise I_t += gamma.
TrainerState thresholding_step(const TrainerState& state, double avg_r2, double avg_r3,
                               const TrainerConfig& config);

/// Executes one epoch of updates at fixed thresholds and returns the
/// per-sequence average loss breakdown of that epoch.
class EpochRunner {
 public:
  virtual ~EpochRunner() = default;
  virtual LossBreakdown run_epoch(int epoch, const Thresholds& thresholds) = 0;
};

/// One CSV row of the training log.
struct LogRow {
  int epoch = 0;
  Stage stage = Stage::SgGrowth;
  double I_t = 0;
  double I_sg = 0;
  LossBreakdown loss;
};

std::string csv_header();
std::string csv_row(const LogRow& row);

/// Observer hooks; any may be empty.
struct TrainHooks {
  std::function<void(const LogRow&)> on_epoch;
  /// Called after every threshold increment and at termination (final=true).
  std::function<void(const TrainerState&, bool final)> on_checkpoint;
};

/// Runs the thresholding schedule from `state` until Done or max_epochs.
/// Returns the final state (max_epochs_reached set when the cap stopped it).
TrainerState run_schedule(TrainerState state, const TrainerConfig& config, EpochRunner& runner,
                          const TrainHooks& hooks = {});

/// Gradient-based epoch runner over a dataset held in memory. Batches and
/// reparameterization noise derive from (seed, epoch, batch), so an epoch is
/// a pure function of the parameters, optimizer state and epoch index.
class ModelEpochRunner : public EpochRunner {
 public:
  ModelEpochRunner(model::StgdVae& model, nn::Adam& optimizer,
                   const std::vector<SpatiotemporalGraph>& data, const TrainerConfig& config);

  LossBreakdown run_epoch(int epoch, const Thresholds& thresholds) override;
  /// Loss over the data without updates or noise (posterior means).
  LossBreakdown evaluate(const Thresholds& thresholds) const;
  /// Called with the current parameters before a non-finite loss aborts.
  std::function<void()> on_numerical_failure;

 private:
  model::StgdVae& model_;
  nn::Adam& optimizer_;
  const std::vector<SpatiotemporalGraph>& data_;
  TrainerConfig config_;
};

/// Loss over `data` without updates, using posterior means when `noise_seed`
/// is empty.
LossBreakdown evaluate_loss(const model::StgdVae& model, const std::vector<SpatiotemporalGraph>& data,
                            const Thresholds& thresholds, int batch_size,
                            std::optional<std::uint64_t> noise_seed = std::nullopt);

// ---- checkpoints ------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  model::ModelConfig model_config;
  TrainerConfig trainer_config;
  TrainerState state;
  std::unique_ptr<model::StgdVae> model;
  nn::Adam optimizer;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL);

void save_checkpoint(const std::filesystem::path& path, const model::StgdVae& model,
                     const TrainerConfig& trainer_config, const TrainerState& state,
                     const nn::Adam& optimizer);
/// Throws VersionError for another format version and DataError for a
/// corrupted or truncated file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---- full training run --------------------------------------------------------

struct TrainResult {
  TrainerState state;
  std::filesystem::path final_checkpoint;
  std::filesystem::path log;
};

/// Trains on `data`, writing `training_log.csv`, `checkpoints/` and
/// `final.ckpt` under `out_dir`. With `resume`, continues from that
/// checkpoint (its configs take precedence) and keeps the log rows of the
/// epochs it already covers.
TrainResult train(const model::ModelConfig& model_config, const TrainerConfig& config,
                  const std::vector<SpatiotemporalGraph>& data,
                  const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& resume = std::nullopt,
                  const std::function<void(const LogRow&)>& progress = {});

}  // namespace stgd::trainer
