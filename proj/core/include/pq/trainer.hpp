#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pq/dataset.hpp"
#include "pq/nn.hpp"
#include "pq/optim.hpp"

namespace pq::train {

struct TrainConfig {
  std::string architecture = "cnn-1c";
  int k_folds = 10;
  int max_epochs = 100;
  int patience = 10;
  double min_delta = 0.0001;
  int batch_size = 32;
  std::uint64_t seed = 0;
  std::optional<double> noise_snr_db;  // set: retrain on a noisy copy of the data
  optim::NadamConfig nadam;
  int threads = 1;  // fold-level parallelism; results identical at any value

  void validate() const;
};

struct EpochStats {
  double train_acc = 0.0;
  double train_loss = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
};

struct FoldRecord {
  std::vector<EpochStats> epochs;
  int stop_epoch = 0;   // epochs actually run
  int best_epoch = 0;   // 0-based epoch with highest val accuracy (ties: earliest)
  double best_val_acc = 0.0;
  std::vector<double> best_params;  // network parameters at best_epoch
};

using Confusion = std::array<std::array<std::uint64_t, kClassCount>, kClassCount>;

struct TrainReport {
  std::string architecture;
  std::string structure;
  std::uint64_t seed = 0;
  int k_folds = 0;
  std::optional<double> noise_snr_db;
  std::vector<FoldRecord> per_fold;
  double mean_val_acc = 0.0;
  int best_fold = 0;  // highest best_val_acc, ties to the lowest index
  Confusion confusion{};  // validation predictions pooled over folds at best epochs
  double wall_time_s = 0.0;

  double mean_stop_epoch() const;
};

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  Confusion confusion{};
  std::size_t total = 0;
};

/// True iff none of the last `patience` epochs improved the running-best
/// validation accuracy by strictly more than min_delta. The first epoch
/// always counts as an improvement (baseline -inf), so the earliest possible
/// stop is after patience + 1 epochs.
bool early_stop(std::span<const double> val_acc_history, int patience, double min_delta);

/// Argmax predictions of `net` over the chosen records: confusion[i][j]
/// counts true class i+1 predicted as j+1, accuracy = trace/total.
EvalResult evaluate(const nn::Network& net, const Dataset& d,
                    std::span<const std::size_t> indices);
EvalResult evaluate(const nn::Network& net, const Dataset& d);

/// One fold: per-epoch reshuffled mini-batches, Nadam updates on the mean
/// batch gradient, train/val metrics per epoch, early stopping, best-epoch
/// checkpoint. shuffle_seed drives the per-epoch permutations. train and
/// val index sets must be disjoint; this is re-checked every epoch.
FoldRecord train_fold(nn::Network& net, std::span<const std::size_t> train_idx,
                      std::span<const std::size_t> val_idx, const Dataset& dataset,
                      const TrainConfig& config, std::uint64_t shuffle_seed);

/// Stratified k-fold cross-validation: independent per-fold initialization
/// (seed = mix(config.seed, fold)), mean best validation accuracy, pooled
/// confusion matrix. Applies the noisy-copy transformation first when
/// config.noise_snr_db is set. Deterministic for a fixed seed at any thread
/// count.
TrainReport run_cv(const Dataset& dataset, const TrainConfig& config);

/// Network holding the best fold's best-epoch parameters.
nn::Network best_network(const TrainReport& report, const Dataset& dataset);

/// CSV bundle: epochs.csv (fold,epoch,train_acc,train_loss,val_acc,val_loss),
/// folds.csv (fold,stop_epoch,best_epoch,best_val_acc), confusion.csv (6x6
/// counts with true-class rows), summary.csv (one row). Wall time is
/// deliberately excluded so re-runs are byte-identical.
void write_report_bundle(const TrainReport& report, const std::filesystem::path& dir);

/// Re-reads summary.csv written by write_report_bundle.
struct SummaryRow {
  std::string architecture;
  std::string structure;
  int k_folds = 0;
  double mean_val_acc = 0.0;
  bool noisy = false;
  double noise_snr_db = 0.0;
  std::uint64_t seed = 0;
  double mean_stop_epoch = 0.0;
  std::string stop_epochs;  // semicolon-joined per-fold values
};
SummaryRow read_summary(const std::filesystem::path& summary_csv);

}  // namespace pq::train
