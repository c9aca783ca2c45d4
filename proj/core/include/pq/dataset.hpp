#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pq/rng.hpp"
#include "pq/signal.hpp"

namespace pq {

/// Labeled waveform collection. All records share one SignalSpec; records
/// are ordered class-major (all sags, then all swells, ...).
struct Dataset {
  SignalSpec spec;
  std::uint64_t seed = 0;
  std::optional<double> noise_snr_db;  // unset = clean
  std::vector<Waveform> records;

  /// Per-class record counts indexed by class code - 1. Sums to records.size().
  std::array<std::size_t, kClassCount> class_counts() const;
};

/// Record index -> fold id in [0, k).
struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;

  std::vector<std::size_t> indices_in_fold(int fold) const;
  std::vector<std::size_t> indices_not_in_fold(int fold) const;
};

/// per_class records for each of the six classes, parameters drawn
/// independently per record. Record i derives its generator from
/// (seed, i), so the build is schedule-independent and bitwise
/// reproducible.
Dataset build_dataset(const SignalSpec& spec, std::size_t per_class, std::uint64_t seed);

/// w + n with n zero-mean Gaussian calibrated to the requested SNR against
/// the mean square power of w's samples. snr_db = +infinity returns w
/// unchanged. Throws std::invalid_argument for a silent signal or a NaN
/// snr_db.
Waveform add_awgn(const Waveform& w, double snr_db, Rng& rng);

/// Noisy copy of a dataset; record i gets its own generator derived from
/// (noise_seed, i). The clean dataset is untouched.
Dataset add_awgn(const Dataset& d, double snr_db, std::uint64_t noise_seed);

/// Stratified assignment: per class, a seeded shuffle dealt round-robin, so
/// per-fold class counts differ by at most 1. Throws std::invalid_argument
/// if k < 2 or some class has fewer than k records.
FoldAssignment stratified_folds(const Dataset& d, int k, std::uint64_t seed);

/// Binary .pqds container, bit-exact round-trip. Writes to a temp file and
/// renames, so a failed save leaves nothing behind.
void save_dataset(const Dataset& d, const std::filesystem::path& path);

/// Throws DatasetFormatError (with byte offset) on malformed input and a
/// distinct message on version mismatch. Never returns a partial dataset.
Dataset load_dataset(const std::filesystem::path& path);

/// Inspection-only CSV: header row, then one row per record: label followed
/// by every sample. Not a round-trip format.
void export_csv(const Dataset& d, const std::filesystem::path& path);

}  // namespace pq
