// pqcli: synthesize power-quality disturbance datasets, train the 1-D CNN
// classifier, evaluate saved models, and render result tables.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pq/dataset.hpp"
#include "pq/nn.hpp"
#include "pq/trainer.hpp"
#include "pq/version.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kGenerateNoiseStream = 0x47454E4E;  // generate --snr-db

void write_manifest(const fs::path& path, const std::string& command, std::uint64_t seed,
                    const json& flags, const json& inputs, const json& outputs) {
  json m;
  m["command"] = command;
  m["tool_version"] = pq::kVersion;
  m["seed"] = seed;
  m["flags"] = flags;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << m.dump(2) << "\n";
}

struct GenerateOptions {
  std::uint64_t per_class = 500;
  std::uint64_t seed = 0;
  std::string out;
  double sample_rate = 5000.0;
  double fundamental = 60.0;
  double duration = 0.2;
  double amplitude = 1.0;
  std::optional<double> snr_db;
  bool plot = false;
  bool csv = false;
};

int run_generate(const GenerateOptions& opt) {
  pq::SignalSpec spec;
  spec.sample_rate_hz = opt.sample_rate;
  spec.fundamental_hz = opt.fundamental;
  spec.duration_s = opt.duration;
  spec.amplitude_pu = opt.amplitude;

  pq::Dataset d = pq::build_dataset(spec, opt.per_class, opt.seed);
  if (opt.snr_db.has_value()) {
    d = pq::add_awgn(d, *opt.snr_db, pq::Rng::mix(opt.seed, kGenerateNoiseStream));
  }

  const fs::path out_path(opt.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  pq::save_dataset(d, out_path);

  json outputs;
  outputs["dataset"] = out_path.string();

  if (opt.csv) {
    fs::path csv_path = out_path;
    csv_path.replace_extension(".csv");
    pq::export_csv(d, csv_path);
    outputs["dataset_csv"] = csv_path.string();
  }

  if (opt.plot) {
    // One example waveform per class, first record of each.
    json plots = json::array();
    for (int code = 1; code <= pq::kClassCount; ++code) {
      const pq::EventClass c = pq::class_from_code(code);
      const pq::Waveform* first = nullptr;
      for (const pq::Waveform& w : d.records) {
        if (w.label == c) {
          first = &w;
          break;
        }
      }
      if (first == nullptr) continue;
      const std::string base =
          "waveform_class" + std::to_string(code) + "_" + pq::class_name(c);
      const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
      const fs::path svg_path = dir / (base + ".svg");
      const fs::path csv_path = dir / (base + ".csv");
      const std::string title =
          std::string("class ") + std::to_string(code) + ": " + pq::class_name(c);
      pq::cli::write_svg_line_chart(first->samples, spec.sample_rate_hz, title, svg_path);
      std::ofstream csv(csv_path, std::ios::trunc);
      csv << "t_s,value\n";
      char buf[64];
      for (std::size_t i = 0; i < first->samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n",
                      static_cast<double>(i) / spec.sample_rate_hz, first->samples[i]);
        csv << buf;
      }
      plots.push_back(svg_path.string());
      plots.push_back(csv_path.string());
    }
    outputs["plots"] = plots;
  }

  json flags;
  flags["per_class"] = opt.per_class;
  flags["sample_rate"] = opt.sample_rate;
  flags["fundamental"] = opt.fundamental;
  flags["duration"] = opt.duration;
  flags["amplitude"] = opt.amplitude;
  if (opt.snr_db.has_value()) flags["noise_snr_db"] = *opt.snr_db;
  flags["plot"] = opt.plot;
  flags["csv"] = opt.csv;

  write_manifest(out_path.string() + ".manifest.json", "generate", opt.seed, flags,
                 json::object(), outputs);

  std::cout << "wrote " << d.records.size() << " records ("
            << opt.per_class << " per class) to " << out_path.string() << "\n";
  return 0;
}

struct TrainOptions {
  std::string data;
  std::string out;
  pq::train::TrainConfig config;
};

int run_train(const TrainOptions& opt) {
  const pq::Dataset d = pq::load_dataset(opt.data);
  const pq::train::TrainReport report = pq::train::run_cv(d, opt.config);

  const fs::path dir(opt.out);
  fs::create_directories(dir);
  pq::train::write_report_bundle(report, dir);
  pq::nn::save_model(pq::train::best_network(report, d), dir / "model.pqnn");

  json flags;
  flags["arch"] = opt.config.architecture;
  flags["k_folds"] = opt.config.k_folds;
  flags["max_epochs"] = opt.config.max_epochs;
  flags["patience"] = opt.config.patience;
  flags["min_delta"] = opt.config.min_delta;
  flags["batch_size"] = opt.config.batch_size;
  flags["lr"] = opt.config.nadam.lr;
  flags["beta1"] = opt.config.nadam.beta1;
  flags["beta2"] = opt.config.nadam.beta2;
  flags["eps"] = opt.config.nadam.eps;
  flags["threads"] = opt.config.threads;
  if (opt.config.noise_snr_db.has_value()) flags["noise_snr_db"] = *opt.config.noise_snr_db;

  json inputs;
  inputs["dataset"] = opt.data;
  json outputs;
  outputs["bundle"] = dir.string();
  outputs["model"] = (dir / "model.pqnn").string();

  write_manifest(dir / "manifest.json", "train", opt.config.seed, flags, inputs, outputs);

  std::printf("architecture  %s (%s)\n", report.architecture.c_str(),
              report.structure.c_str());
  std::printf("mean val acc  %.4f over %d folds\n", report.mean_val_acc, report.k_folds);
  std::printf("stop epochs  ");
  for (const auto& fold : report.per_fold) std::printf(" %d", fold.stop_epoch);
  std::printf("  (mean %.1f)\n", report.mean_stop_epoch());
  std::printf("wall time     %.1f s\n", report.wall_time_s);
  std::printf("bundle        %s\n", dir.string().c_str());
  return 0;
}

struct EvaluateOptions {
  std::string model;
  std::string data;
  std::string out;
};

int run_evaluate(const EvaluateOptions& opt) {
  const pq::nn::Network net = pq::nn::load_model(opt.model);
  const pq::Dataset d = pq::load_dataset(opt.data);
  const pq::train::EvalResult result = pq::train::evaluate(net, d);

  const fs::path dir(opt.out);
  fs::create_directories(dir);

  {
    std::uint64_t correct = 0;
    for (int c = 0; c < pq::kClassCount; ++c) correct += result.confusion[c][c];
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "accuracy,correct,total,mean_loss\n%.17g,%" PRIu64 ",%zu,%.17g\n",
                  result.accuracy, correct, result.total, result.mean_loss);
    std::ofstream(dir / "metrics.csv", std::ios::trunc) << buf;
  }
  {
    std::string out = "true_class";
    for (int j = 1; j <= pq::kClassCount; ++j) out += ",pred_" + std::to_string(j);
    out += "\n";
    for (int i = 0; i < pq::kClassCount; ++i) {
      out += std::to_string(i + 1);
      for (int j = 0; j < pq::kClassCount; ++j) {
        out += "," + std::to_string(result.confusion[i][j]);
      }
      out += "\n";
    }
    std::ofstream(dir / "confusion.csv", std::ios::trunc) << out;
  }

  json inputs;
  inputs["model"] = opt.model;
  inputs["dataset"] = opt.data;
  json outputs;
  outputs["bundle"] = dir.string();
  write_manifest(dir / "manifest.json", "evaluate", 0, json::object(), inputs, outputs);

  std::printf("accuracy %.4f on %zu records (model %s)\n", result.accuracy, result.total,
              net.arch_name.c_str());
  return 0;
}

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string out;
};

int run_report(const ReportOptions& opt) {
  struct Row {
    std::string structure;
    std::optional<double> clean_acc;
    std::optional<double> noisy_acc;
  };
  std::map<std::string, Row> rows;

  std::vector<fs::path> summaries;
  for (const std::string& in : opt.inputs) {
    const fs::path p(in);
    if (fs::is_regular_file(p) && p.filename() == "summary.csv") {
      summaries.push_back(p);
    } else if (fs::is_directory(p)) {
      for (const auto& entry : fs::recursive_directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().filename() == "summary.csv") {
          summaries.push_back(entry.path());
        }
      }
    }
  }
  std::sort(summaries.begin(), summaries.end());
  if (summaries.empty()) {
    throw std::runtime_error("report: no summary.csv bundles found under the given paths");
  }

  for (const fs::path& p : summaries) {
    const pq::train::SummaryRow s = pq::train::read_summary(p);
    Row& row = rows[s.architecture];
    row.structure = s.structure;
    if (s.noisy) {
      row.noisy_acc = s.mean_val_acc;
    } else {
      row.clean_acc = s.mean_val_acc;
    }
  }

  std::string table;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %-32s %12s %12s\n", "Network", "Structure",
                "Clean (%)", "Noisy (%)");
  table += buf;
  table += std::string(69, '-') + "\n";
  for (const auto& [name, row] : rows) {
    std::string clean = "-";
    std::string noisy = "-";
    if (row.clean_acc) {
      std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * *row.clean_acc);
      clean = buf;
    }
    if (row.noisy_acc) {
      std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * *row.noisy_acc);
      noisy = buf;
    }
    std::snprintf(buf, sizeof(buf), "%-10s %-32s %12s %12s\n", name.c_str(),
                  row.structure.c_str(), clean.c_str(), noisy.c_str());
    table += buf;
  }

  std::cout << table;
  if (!opt.out.empty()) {
    const fs::path out_path(opt.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    std::ofstream(out_path, std::ios::trunc) << table;
    json inputs;
    inputs["bundles"] = json::array();
    for (const fs::path& p : summaries) inputs["bundles"].push_back(p.string());
    json outputs;
    outputs["table"] = out_path.string();
    write_manifest(out_path.string() + ".manifest.json", "report", 0, json::object(), inputs,
                   outputs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"power-quality disturbance synthesis and 1-D CNN classification"};
  app.set_version_flag("--version", std::string(pq::kVersion));
  app.require_subcommand(1);

  GenerateOptions gen;
  double gen_snr = 0.0;
  auto* generate = app.add_subcommand("generate", "Synthesize a labeled waveform dataset");
  generate->add_option("--per-class", gen.per_class, "Records per event class")
      ->default_val(500)
      ->check(CLI::Range(std::uint64_t{1}, std::uint64_t{10'000'000}));
  generate->add_option("--seed", gen.seed, "Generation seed")->default_val(0);
  generate->add_option("--out", gen.out, "Output dataset path (.pqds)")->required();
  generate->add_option("--sample-rate", gen.sample_rate, "Sampling rate, Hz")
      ->default_val(5000.0);
  generate->add_option("--fundamental", gen.fundamental, "Fundamental frequency, Hz")
      ->default_val(60.0);
  generate->add_option("--duration", gen.duration, "Signal duration, s")->default_val(0.2);
  generate->add_option("--amplitude", gen.amplitude, "Amplitude, per unit")->default_val(1.0);
  auto* gen_snr_opt = generate->add_option(
      "--snr-db", gen_snr, "Add white Gaussian noise at this SNR (dB); omit for clean data");
  generate->add_flag("--plot", gen.plot, "Write one SVG + CSV example waveform per class");
  generate->add_flag("--csv", gen.csv, "Also export the whole dataset as CSV");

  TrainOptions tr;
  double train_snr = 0.0;
  auto* train = app.add_subcommand("train", "Cross-validated training run");
  train->add_option("--data", tr.data, "Dataset file (.pqds)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--arch", tr.config.architecture,
                    "Architecture: cnn-1a | cnn-1b | cnn-1c | cnn-1d")
      ->default_val("cnn-1c");
  train->add_option("--out", tr.out, "Output bundle directory")->required();
  train->add_option("--seed", tr.config.seed, "Training seed")->default_val(0);
  train->add_option("--k-folds", tr.config.k_folds, "Stratified folds")->default_val(10);
  train->add_option("--max-epochs", tr.config.max_epochs, "Epoch cap")->default_val(100);
  train->add_option("--patience", tr.config.patience, "Early-stop patience, epochs")
      ->default_val(10);
  train->add_option("--min-delta", tr.config.min_delta,
                    "Early-stop improvement threshold on validation accuracy")
      ->default_val(0.0001);
  train->add_option("--batch-size", tr.config.batch_size, "Mini-batch size")->default_val(32);
  train->add_option("--lr", tr.config.nadam.lr, "Nadam learning rate")->default_val(0.001);
  train->add_option("--beta1", tr.config.nadam.beta1, "Nadam beta1")->default_val(0.9);
  train->add_option("--beta2", tr.config.nadam.beta2, "Nadam beta2")->default_val(0.999);
  train->add_option("--eps", tr.config.nadam.eps, "Nadam epsilon")->default_val(1e-8);
  auto* train_snr_opt = train->add_option(
      "--snr-db", train_snr, "Retrain on a noisy copy of the dataset at this SNR (dB)");
  train->add_option("--threads", tr.config.threads, "Fold-level worker threads")
      ->default_val(1);

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved model on a dataset");
  evaluate->add_option("--model", ev.model, "Model file (.pqnn)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--data", ev.data, "Dataset file (.pqds)")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--out", ev.out, "Output metrics directory")->required();

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "Render a result table from training bundles");
  report->add_option("--in", rep.inputs, "Bundle directories (scanned recursively)")
      ->required()
      ->expected(-1);
  report->add_option("--out", rep.out, "Also write the table to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      if (gen_snr_opt->count() > 0) gen.snr_db = gen_snr;
      return run_generate(gen);
    }
    if (train->parsed()) {
      if (train_snr_opt->count() > 0) tr.config.noise_snr_db = train_snr;
      return run_train(tr);
    }
    if (evaluate->parsed()) {
      return run_evaluate(ev);
    }
    if (report->parsed()) {
      return run_report(rep);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
