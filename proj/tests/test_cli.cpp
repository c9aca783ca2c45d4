// End-to-end checks of the pqcli binary, driven through std::system. The
// binary path arrives in the PQCLI environment variable (set by ctest).

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pq/dataset.hpp"
#include "pq/nn.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* env = std::getenv("PQCLI");
  REQUIRE_MESSAGE(env != nullptr, "PQCLI environment variable must point at the pqcli binary");
  return env;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path log = workdir / "last_run.log";
  const std::string cmd =
      "cd " + workdir.string() + " && " + cli_path() + " " + args + " > " + log.string() +
      " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pqts_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli: generate writes dataset, manifest, and plots") {
  const fs::path dir = fresh_dir("generate");
  const RunResult r =
      run_cli("generate --per-class 2 --seed 7 --out d.pqds --plot --csv", dir);
  CHECK(r.exit_code == 0);

  const pq::Dataset d = pq::load_dataset(dir / "d.pqds");
  CHECK(d.records.size() == 12);
  CHECK(d.seed == 7);
  CHECK_FALSE(d.noise_snr_db.has_value());

  const std::string manifest = slurp(dir / "d.pqds.manifest.json");
  CHECK(manifest.find("\"command\": \"generate\"") != std::string::npos);
  CHECK(manifest.find("\"per_class\": 2") != std::string::npos);

  CHECK(fs::exists(dir / "d.csv"));
  for (const char* name :
       {"waveform_class1_sag.svg", "waveform_class4_harmonics.svg",
        "waveform_class6_flicker.csv"}) {
    CHECK(fs::exists(dir / name));
  }
  const std::string svg = slurp(dir / "waveform_class1_sag.svg");
  CHECK(svg.substr(0, 4) == "<svg");
}

TEST_CASE("cli: generate rejects per-class 0 and writes nothing") {
  const fs::path dir = fresh_dir("generate_bad");
  const RunResult r = run_cli("generate --per-class 0 --out d.pqds", dir);
  CHECK(r.exit_code != 0);
  CHECK_FALSE(fs::exists(dir / "d.pqds"));
}

TEST_CASE("cli: generate with noise records the SNR in dataset and manifest") {
  const fs::path dir = fresh_dir("generate_noise");
  const RunResult r = run_cli("generate --per-class 1 --seed 3 --snr-db 80 --out n.pqds", dir);
  CHECK(r.exit_code == 0);
  const pq::Dataset d = pq::load_dataset(dir / "n.pqds");
  REQUIRE(d.noise_snr_db.has_value());
  CHECK(*d.noise_snr_db == 80.0);
  const std::string manifest = slurp(dir / "n.pqds.manifest.json");
  CHECK(manifest.find("\"noise_snr_db\": 80.0") != std::string::npos);
}

TEST_CASE("cli: train/evaluate/report round trip") {
  const fs::path dir = fresh_dir("pipeline");
  REQUIRE(run_cli("generate --per-class 4 --seed 11 --out d.pqds", dir).exit_code == 0);

  const RunResult train = run_cli(
      "train --data d.pqds --arch cnn-1c --k-folds 2 --max-epochs 2 --batch-size 6 "
      "--seed 5 --out run_clean",
      dir);
  CHECK(train.exit_code == 0);
  CHECK(train.output.find("mean val acc") != std::string::npos);
  for (const char* name :
       {"model.pqnn", "epochs.csv", "folds.csv", "confusion.csv", "summary.csv",
        "manifest.json"}) {
    CHECK(fs::exists(dir / "run_clean" / name));
  }

  const pq::nn::Network model = pq::nn::load_model(dir / "run_clean" / "model.pqnn");
  CHECK(model.arch_name == "cnn-1c");
  CHECK(model.input_length == 1000);

  const RunResult eval =
      run_cli("evaluate --model run_clean/model.pqnn --data d.pqds --out eval_clean", dir);
  CHECK(eval.exit_code == 0);
  CHECK(fs::exists(dir / "eval_clean" / "metrics.csv"));
  CHECK(fs::exists(dir / "eval_clean" / "confusion.csv"));
  CHECK(fs::exists(dir / "eval_clean" / "manifest.json"));

  const RunResult noisy_train = run_cli(
      "train --data d.pqds --arch cnn-1c --k-folds 2 --max-epochs 2 --batch-size 6 "
      "--seed 5 --snr-db 80 --out run_noisy",
      dir);
  CHECK(noisy_train.exit_code == 0);

  const RunResult report = run_cli("report --in . --out table.txt", dir);
  CHECK(report.exit_code == 0);
  CHECK(report.output.find("cnn-1c") != std::string::npos);
  CHECK(report.output.find("1 layer, 200x1") != std::string::npos);
  const std::string table = slurp(dir / "table.txt");
  CHECK(table.find("Clean (%)") != std::string::npos);
  CHECK(table.find("Noisy (%)") != std::string::npos);
}

TEST_CASE("cli: train rejects unknown architectures listing the valid names") {
  const fs::path dir = fresh_dir("bad_arch");
  REQUIRE(run_cli("generate --per-class 2 --seed 1 --out d.pqds", dir).exit_code == 0);
  const RunResult r =
      run_cli("train --data d.pqds --arch bogus --k-folds 2 --max-epochs 1 --out run", dir);
  CHECK(r.exit_code != 0);
  for (const char* name : {"cnn-1a", "cnn-1b", "cnn-1c", "cnn-1d"}) {
    CHECK(r.output.find(name) != std::string::npos);
  }
}

TEST_CASE("cli: identical train commands produce byte-identical CSV outputs") {
  const fs::path dir = fresh_dir("determinism");
  REQUIRE(run_cli("generate --per-class 3 --seed 2 --out d.pqds", dir).exit_code == 0);
  const std::string flags =
      "train --data d.pqds --arch cnn-1c --k-folds 3 --max-epochs 2 --batch-size 4 --seed 8";
  REQUIRE(run_cli(flags + " --out run_a", dir).exit_code == 0);
  REQUIRE(run_cli(flags + " --out run_b --threads 2", dir).exit_code == 0);
  for (const char* name : {"summary.csv", "epochs.csv", "folds.csv", "confusion.csv"}) {
    CHECK(slurp(dir / "run_a" / name) == slurp(dir / "run_b" / name));
  }
  CHECK(slurp(dir / "run_a" / "model.pqnn") == slurp(dir / "run_b" / "model.pqnn"));
}

TEST_CASE("cli: evaluate with mismatched model/data fails without partial output") {
  const fs::path dir = fresh_dir("mismatch");
  REQUIRE(run_cli("generate --per-class 2 --seed 4 --out d1000.pqds", dir).exit_code == 0);
  REQUIRE(
      run_cli("generate --per-class 2 --seed 4 --duration 0.1 --out d500.pqds", dir).exit_code ==
      0);
  REQUIRE(run_cli("train --data d1000.pqds --k-folds 2 --max-epochs 1 --batch-size 4 "
                  "--out run",
                  dir)
              .exit_code == 0);
  const RunResult r =
      run_cli("evaluate --model run/model.pqnn --data d500.pqds --out eval_bad", dir);
  CHECK(r.exit_code != 0);
  CHECK_FALSE(fs::exists(dir / "eval_bad" / "metrics.csv"));
  CHECK_FALSE(fs::exists(dir / "eval_bad" / "confusion.csv"));
}

TEST_CASE("cli: report on an empty directory is a missing-bundle error") {
  const fs::path dir = fresh_dir("empty_report");
  fs::create_directories(dir / "nothing_here");
  const RunResult r = run_cli("report --in nothing_here", dir);
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("no summary.csv") != std::string::npos);
}
