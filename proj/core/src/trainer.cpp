#include "pq/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pq::train {

namespace {

// Seed-stream tags; any two generators derived from the same user seed must
// use distinct tags.
constexpr std::uint64_t kFoldAssignStream = 0x464F4C44;   // fold assignment shuffle
constexpr std::uint64_t kNoiseStream = 0x4E4F4953;        // awgn copy
constexpr std::uint64_t kFoldSeedStream = 0x494E4954;     // per-fold init + shuffles
constexpr std::uint64_t kEpochStream = 0x45504F43;        // per-epoch batch order

int label_index(const Waveform& w) { return static_cast<int>(w.label) - 1; }

void format_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (k_folds < 2) throw std::invalid_argument("TrainConfig: k_folds must be >= 2");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (min_delta < 0.0) throw std::invalid_argument("TrainConfig: min_delta must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (threads < 1) throw std::invalid_argument("TrainConfig: threads must be >= 1");
}

double TrainReport::mean_stop_epoch() const {
  if (per_fold.empty()) return 0.0;
  double sum = 0.0;
  for (const FoldRecord& f : per_fold) sum += f.stop_epoch;
  return sum / static_cast<double>(per_fold.size());
}

bool early_stop(std::span<const double> val_acc_history, int patience, double min_delta) {
  if (val_acc_history.empty()) {
    throw std::invalid_argument("early_stop: empty history");
  }
  const std::size_t n = val_acc_history.size();
  if (n < static_cast<std::size_t>(patience) + 1) return false;
  double best_before = -std::numeric_limits<double>::infinity();
  std::size_t last_improvement = 0;  // index of the last epoch that improved
  for (std::size_t i = 0; i < n; ++i) {
    if (val_acc_history[i] - best_before > min_delta) last_improvement = i;
    best_before = std::max(best_before, val_acc_history[i]);
  }
  return last_improvement + static_cast<std::size_t>(patience) < n;
}

EvalResult evaluate(const nn::Network& net, const Dataset& d,
                    std::span<const std::size_t> indices) {
  if (indices.empty()) {
    throw std::invalid_argument("evaluate: no records selected");
  }
  EvalResult r;
  r.total = indices.size();
  double loss_sum = 0.0;
  for (std::size_t idx : indices) {
    const Waveform& w = d.records[idx];
    const nn::ForwardTrace trace =
        nn::network_forward_trace(net, nn::Tensor1D::from_samples(w.samples));
    const int truth = label_index(w);
    const int pred = static_cast<int>(std::distance(
        trace.probs.begin(), std::max_element(trace.probs.begin(), trace.probs.end())));
    r.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)]++;
    loss_sum += nn::cross_entropy_loss(trace.logits, truth);
  }
  std::uint64_t correct = 0;
  for (int c = 0; c < kClassCount; ++c) correct += r.confusion[c][c];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  r.mean_loss = loss_sum / static_cast<double>(r.total);
  return r;
}

EvalResult evaluate(const nn::Network& net, const Dataset& d) {
  std::vector<std::size_t> all(d.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return evaluate(net, d, all);
}

FoldRecord train_fold(nn::Network& net, std::span<const std::size_t> train_idx,
                      std::span<const std::size_t> val_idx, const Dataset& dataset,
                      const TrainConfig& config, std::uint64_t shuffle_seed) {
  config.validate();
  if (train_idx.empty() || val_idx.empty()) {
    throw std::invalid_argument("train_fold: empty train or validation set");
  }

  std::vector<bool> in_train(dataset.records.size(), false);
  std::vector<bool> in_val(dataset.records.size(), false);
  for (std::size_t i : train_idx) in_train[i] = true;
  for (std::size_t i : val_idx) {
    if (in_train[i]) {
      throw std::invalid_argument("train_fold: train and validation sets overlap");
    }
    in_val[i] = true;
  }

  optim::Nadam nadam(config.nadam, net.parameter_count());
  std::vector<double> params = net.parameters();

  FoldRecord rec;
  std::vector<double> val_acc_history;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng epoch_rng = Rng::derived(shuffle_seed,
                                 Rng::mix(kEpochStream, static_cast<std::uint64_t>(epoch)));
    const auto batches =
        optim::make_batches(train_idx, static_cast<std::size_t>(config.batch_size), epoch_rng);

    for (const auto& batch : batches) {
      net.zero_gradients();
      for (std::size_t idx : batch) {
        // Fold isolation: a validation record must never be trained on.
        if (in_val[idx] || !in_train[idx]) {
          throw std::logic_error("train_fold: batch index escaped the training set");
        }
        const Waveform& w = dataset.records[idx];
        const nn::ForwardTrace trace =
            nn::network_forward_trace(net, nn::Tensor1D::from_samples(w.samples));
        nn::network_backward(net, trace, label_index(w));
      }
      // Mean gradient so the learning rate is batch-size-insensitive.
      const double inv = 1.0 / static_cast<double>(batch.size());
      std::vector<double> grads = net.gradients();
      for (double& g : grads) g *= inv;
      nadam.step(params, grads);
      net.set_parameters(params);
    }

    EpochStats stats;
    const EvalResult train_eval = evaluate(net, dataset, train_idx);
    const EvalResult val_eval = evaluate(net, dataset, val_idx);
    stats.train_acc = train_eval.accuracy;
    stats.train_loss = train_eval.mean_loss;
    stats.val_acc = val_eval.accuracy;
    stats.val_loss = val_eval.mean_loss;
    rec.epochs.push_back(stats);
    val_acc_history.push_back(stats.val_acc);

    if (rec.epochs.size() == 1 || stats.val_acc > rec.best_val_acc) {
      rec.best_val_acc = stats.val_acc;
      rec.best_epoch = epoch;
      rec.best_params = params;
    }
    if (early_stop(val_acc_history, config.patience, config.min_delta)) {
      break;
    }
  }
  rec.stop_epoch = static_cast<int>(rec.epochs.size());
  return rec;
}

TrainReport run_cv(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();

  Dataset noisy_holder;
  const Dataset* working = &dataset;
  if (config.noise_snr_db.has_value()) {
    noisy_holder = add_awgn(dataset, *config.noise_snr_db,
                            Rng::mix(config.seed, kNoiseStream));
    working = &noisy_holder;
  }

  const FoldAssignment folds =
      stratified_folds(*working, config.k_folds, Rng::mix(config.seed, kFoldAssignStream));
  const int input_len = static_cast<int>(working->records.front().samples.size());

  TrainReport report;
  report.architecture = config.architecture;
  report.seed = config.seed;
  report.k_folds = config.k_folds;
  report.noise_snr_db = config.noise_snr_db;
  report.per_fold.resize(static_cast<std::size_t>(config.k_folds));
  std::vector<Confusion> fold_confusion(static_cast<std::size_t>(config.k_folds));

  {
    nn::Network probe = nn::build_architecture(config.architecture, input_len, 0);
    report.structure = probe.structure;
  }

  std::atomic<int> next_fold{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const int fold = next_fold.fetch_add(1);
      if (fold >= config.k_folds || failed.load()) return;
      try {
        const std::uint64_t fold_seed =
            Rng::mix(Rng::mix(config.seed, kFoldSeedStream), static_cast<std::uint64_t>(fold));
        nn::Network net = nn::build_architecture(config.architecture, input_len, fold_seed);
        const auto val_idx = folds.indices_in_fold(fold);
        const auto train_idx = folds.indices_not_in_fold(fold);
        FoldRecord rec = train_fold(net, train_idx, val_idx, *working, config, fold_seed);
        net.set_parameters(rec.best_params);
        const EvalResult best_eval = evaluate(net, *working, val_idx);
        fold_confusion[static_cast<std::size_t>(fold)] = best_eval.confusion;
        report.per_fold[static_cast<std::size_t>(fold)] = std::move(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) {
          try {
            throw;
          } catch (const std::exception& e) {
            first_error = e.what();
          } catch (...) {
            first_error = "unknown error in training worker";
          }
        }
        return;
      }
    }
  };

  const int worker_count = std::min(config.threads, config.k_folds);
  if (worker_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed.load()) {
    throw std::runtime_error("run_cv: " + first_error);
  }

  double acc_sum = 0.0;
  for (int fold = 0; fold < config.k_folds; ++fold) {
    const FoldRecord& rec = report.per_fold[static_cast<std::size_t>(fold)];
    acc_sum += rec.best_val_acc;
    if (rec.best_val_acc > report.per_fold[static_cast<std::size_t>(report.best_fold)].best_val_acc) {
      report.best_fold = fold;
    }
    for (int i = 0; i < kClassCount; ++i) {
      for (int j = 0; j < kClassCount; ++j) {
        report.confusion[i][j] += fold_confusion[static_cast<std::size_t>(fold)][i][j];
      }
    }
  }
  report.mean_val_acc = acc_sum / static_cast<double>(config.k_folds);
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

nn::Network best_network(const TrainReport& report, const Dataset& dataset) {
  const int input_len = static_cast<int>(dataset.records.front().samples.size());
  nn::Network net = nn::build_architecture(report.architecture, input_len, 0);
  net.set_parameters(report.per_fold[static_cast<std::size_t>(report.best_fold)].best_params);
  return net;
}

void write_report_bundle(const TrainReport& report, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    std::string out = "fold,epoch,train_acc,train_loss,val_acc,val_loss\n";
    for (std::size_t f = 0; f < report.per_fold.size(); ++f) {
      const FoldRecord& rec = report.per_fold[f];
      for (std::size_t e = 0; e < rec.epochs.size(); ++e) {
        const EpochStats& s = rec.epochs[e];
        out += std::to_string(f) + "," + std::to_string(e) + ",";
        format_double(out, s.train_acc);
        out += ",";
        format_double(out, s.train_loss);
        out += ",";
        format_double(out, s.val_acc);
        out += ",";
        format_double(out, s.val_loss);
        out += "\n";
      }
    }
    std::ofstream(dir / "epochs.csv", std::ios::trunc) << out;
  }

  {
    std::string out = "fold,stop_epoch,best_epoch,best_val_acc\n";
    for (std::size_t f = 0; f < report.per_fold.size(); ++f) {
      const FoldRecord& rec = report.per_fold[f];
      out += std::to_string(f) + "," + std::to_string(rec.stop_epoch) + "," +
             std::to_string(rec.best_epoch) + ",";
      format_double(out, rec.best_val_acc);
      out += "\n";
    }
    std::ofstream(dir / "folds.csv", std::ios::trunc) << out;
  }

  {
    std::string out = "true_class";
    for (int j = 1; j <= kClassCount; ++j) out += ",pred_" + std::to_string(j);
    out += "\n";
    for (int i = 0; i < kClassCount; ++i) {
      out += std::to_string(i + 1);
      for (int j = 0; j < kClassCount; ++j) {
        out += "," + std::to_string(report.confusion[i][j]);
      }
      out += "\n";
    }
    std::ofstream(dir / "confusion.csv", std::ios::trunc) << out;
  }

  {
    std::string stop_epochs;
    for (std::size_t f = 0; f < report.per_fold.size(); ++f) {
      if (f > 0) stop_epochs += ";";
      stop_epochs += std::to_string(report.per_fold[f].stop_epoch);
    }
    std::string out =
        "architecture,structure,k_folds,mean_val_acc,noisy,noise_snr_db,seed,"
        "mean_stop_epoch,stop_epochs\n";
    out += report.architecture + ",\"" + report.structure + "\"," +
           std::to_string(report.k_folds) + ",";
    format_double(out, report.mean_val_acc);
    out += ",";
    out += report.noise_snr_db.has_value() ? "1" : "0";
    out += ",";
    format_double(out, report.noise_snr_db.value_or(0.0));
    out += "," + std::to_string(report.seed) + ",";
    format_double(out, report.mean_stop_epoch());
    out += "," + stop_epochs + "\n";
    std::ofstream(dir / "summary.csv", std::ios::trunc) << out;
  }
}

SummaryRow read_summary(const std::filesystem::path& summary_csv) {
  std::ifstream in(summary_csv);
  if (!in) {
    throw std::runtime_error("read_summary: cannot open " + summary_csv.string());
  }
  std::string header, line;
  if (!std::getline(in, header) || !std::getline(in, line)) {
    throw std::runtime_error("read_summary: " + summary_csv.string() + " is not a summary file");
  }
  // Fields: architecture,"structure",k_folds,mean_val_acc,noisy,noise_snr_db,
  //         seed,mean_stop_epoch,stop_epochs
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(cur);
  if (fields.size() != 9) {
    throw std::runtime_error("read_summary: malformed row in " + summary_csv.string());
  }
  SummaryRow row;
  row.architecture = fields[0];
  row.structure = fields[1];
  row.k_folds = std::stoi(fields[2]);
  row.mean_val_acc = std::stod(fields[3]);
  row.noisy = fields[4] == "1";
  row.noise_snr_db = std::stod(fields[5]);
  row.seed = std::stoull(fields[6]);
  row.mean_stop_epoch = std::stod(fields[7]);
  row.stop_epochs = fields[8];
  return row;
}

}  // namespace pq::train
