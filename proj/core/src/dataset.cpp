#include "pq/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace pq {

namespace {

constexpr char kMagic[4] = {'P', 'Q', 'D', 'S'};
constexpr std::uint16_t kFormatVersion = 1;

// Stream ids partitioning the seed space: record generators must never
// collide with fold or noise generators derived from the same seed.
constexpr std::uint64_t kRecordStream = 0x01;

}  // namespace

std::array<std::size_t, kClassCount> Dataset::class_counts() const {
  std::array<std::size_t, kClassCount> counts{};
  for (const Waveform& w : records) {
    counts[static_cast<std::size_t>(w.label) - 1]++;
  }
  return counts;
}

std::vector<std::size_t> FoldAssignment::indices_in_fold(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::indices_not_in_fold(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

Dataset build_dataset(const SignalSpec& spec, std::size_t per_class, std::uint64_t seed) {
  spec.validate();
  if (per_class < 1) {
    throw std::invalid_argument("build_dataset: per_class must be >= 1");
  }
  Dataset d;
  d.spec = spec;
  d.seed = seed;
  d.records.reserve(per_class * kClassCount);
  for (int code = 1; code <= kClassCount; ++code) {
    const EventClass c = static_cast<EventClass>(code);
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t record_index = static_cast<std::size_t>(code - 1) * per_class + i;
      Rng rng = Rng::derived(seed, Rng::mix(kRecordStream, record_index));
      const EventParams p = sample_params(c, rng, spec);
      d.records.push_back(generate(c, spec, p));
    }
  }
  return d;
}

Waveform add_awgn(const Waveform& w, double snr_db, Rng& rng) {
  if (std::isnan(snr_db)) {
    throw std::invalid_argument("add_awgn: snr_db is NaN");
  }
  if (snr_db == std::numeric_limits<double>::infinity()) {
    return w;  // no-noise sentinel
  }
  double power = 0.0;
  for (double s : w.samples) power += s * s;
  power /= static_cast<double>(w.samples.size());
  if (power <= 0.0) {
    throw std::invalid_argument("add_awgn: silent signal (zero power), SNR undefined");
  }
  const double noise_var = power / std::pow(10.0, snr_db / 10.0);
  const double sigma = std::sqrt(noise_var);
  Waveform noisy = w;
  for (double& s : noisy.samples) s += sigma * rng.gaussian();
  return noisy;
}

Dataset add_awgn(const Dataset& d, double snr_db, std::uint64_t noise_seed) {
  Dataset noisy;
  noisy.spec = d.spec;
  noisy.seed = d.seed;
  noisy.noise_snr_db = snr_db;
  noisy.records.reserve(d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    Rng rng = Rng::derived(noise_seed, i);
    noisy.records.push_back(add_awgn(d.records[i], snr_db, rng));
  }
  return noisy;
}

FoldAssignment stratified_folds(const Dataset& d, int k, std::uint64_t seed) {
  if (k < 2) {
    throw std::invalid_argument("stratified_folds: k must be >= 2");
  }
  std::array<std::vector<std::size_t>, kClassCount> by_class;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    by_class[static_cast<std::size_t>(d.records[i].label) - 1].push_back(i);
  }
  for (int c = 0; c < kClassCount; ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(k)) {
      std::ostringstream os;
      os << "stratified_folds: class " << (c + 1) << " has " << by_class[c].size()
         << " records, fewer than k=" << k;
      throw std::invalid_argument(os.str());
    }
  }
  FoldAssignment fa;
  fa.k = k;
  fa.fold_of.assign(d.records.size(), -1);
  for (int c = 0; c < kClassCount; ++c) {
    auto& idx = by_class[c];
    Rng rng = Rng::derived(seed, static_cast<std::uint64_t>(c));
    // Fisher-Yates, then deal round-robin: per-class fold counts differ by <= 1.
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
      std::swap(idx[i - 1], idx[j]);
    }
    for (std::size_t pos = 0; pos < idx.size(); ++pos) {
      fa.fold_of[idx[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    }
  }
  return fa;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("save_dataset: cannot open " + tmp.string() + " for writing");
    }
    out.write(kMagic, sizeof(kMagic));
    io::write_scalar<std::uint16_t>(out, kFormatVersion);
    io::write_scalar<double>(out, d.spec.sample_rate_hz);
    io::write_scalar<double>(out, d.spec.fundamental_hz);
    io::write_scalar<double>(out, d.spec.duration_s);
    io::write_scalar<double>(out, d.spec.amplitude_pu);
    io::write_scalar<std::uint64_t>(out, d.seed);
    io::write_scalar<std::uint8_t>(out, d.noise_snr_db.has_value() ? 1 : 0);
    io::write_scalar<double>(out, d.noise_snr_db.value_or(0.0));
    const std::uint64_t samples_per_record =
        d.records.empty() ? static_cast<std::uint64_t>(d.spec.sample_count())
                          : static_cast<std::uint64_t>(d.records.front().samples.size());
    io::write_scalar<std::uint64_t>(out, samples_per_record);
    io::write_scalar<std::uint64_t>(out, d.records.size());
    for (const Waveform& w : d.records) {
      io::write_scalar<std::uint8_t>(out, static_cast<std::uint8_t>(w.label));
      const EventParams& p = w.params;
      for (double field : {p.alpha, p.t1_s, p.t2_s, p.h3, p.h5, p.h7,
                           p.omega_n_hz, p.tau_s, p.beta_hz}) {
        io::write_scalar<double>(out, field);
      }
      io::write_f64_array(out, w.samples.data(), w.samples.size());
    }
    if (!out) {
      throw std::runtime_error("save_dataset: write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_dataset: cannot open " + path.string());
  }
  io::Reader r(in, path.string());

  char magic[4];
  r.read_bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    r.fail("bad magic, not a PQDS dataset file");
  }
  const auto version = r.read_scalar<std::uint16_t>("format version");
  if (version != kFormatVersion) {
    r.fail("unsupported PQDS format version " + std::to_string(version) +
           " (expected " + std::to_string(kFormatVersion) + ")");
  }

  Dataset d;
  d.spec.sample_rate_hz = r.read_scalar<double>("sample_rate_hz");
  d.spec.fundamental_hz = r.read_scalar<double>("fundamental_hz");
  d.spec.duration_s = r.read_scalar<double>("duration_s");
  d.spec.amplitude_pu = r.read_scalar<double>("amplitude_pu");
  d.seed = r.read_scalar<std::uint64_t>("seed");
  const auto has_noise = r.read_scalar<std::uint8_t>("noise flag");
  const double snr = r.read_scalar<double>("noise_snr_db");
  if (has_noise) d.noise_snr_db = snr;

  const auto samples_per_record = r.read_scalar<std::uint64_t>("samples_per_record");
  const auto record_count = r.read_scalar<std::uint64_t>("record_count");
  if (samples_per_record == 0) {
    r.fail("samples_per_record is zero");
  }

  d.records.reserve(record_count);
  for (std::uint64_t i = 0; i < record_count; ++i) {
    Waveform w;
    w.spec = d.spec;
    const auto label = r.read_scalar<std::uint8_t>("record label");
    if (label < 1 || label > kClassCount) {
      r.fail("record label " + std::to_string(label) + " outside 1..6");
    }
    w.label = static_cast<EventClass>(label);
    EventParams& p = w.params;
    for (double* field : {&p.alpha, &p.t1_s, &p.t2_s, &p.h3, &p.h5, &p.h7,
                          &p.omega_n_hz, &p.tau_s, &p.beta_hz}) {
      *field = r.read_scalar<double>("record params");
    }
    w.samples.resize(samples_per_record);
    r.read_f64_array(w.samples.data(), w.samples.size(), "record samples");
    d.records.push_back(std::move(w));
  }
  r.expect_eof();
  return d;
}

void export_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("export_csv: cannot open " + path.string() + " for writing");
  }
  const std::size_t n =
      d.records.empty() ? static_cast<std::size_t>(d.spec.sample_count())
                        : d.records.front().samples.size();
  out << "label";
  for (std::size_t j = 0; j < n; ++j) out << ",s" << j;
  out << "\n";
  char buf[32];
  for (const Waveform& w : d.records) {
    out << static_cast<int>(w.label);
    for (double s : w.samples) {
      std::snprintf(buf, sizeof(buf), "%.17g", s);
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace pq
