#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "pq/rng.hpp"

namespace pq::optim {

struct NadamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Nadam: Adam moments with a Nesterov look-ahead on the first moment.
/// Per scalar parameter theta with gradient g at 1-based step t:
///   m <- b1*m + (1-b1)*g          v <- b2*v + (1-b2)*g^2
///   m_hat = m / (1 - b1^t)        v_hat = v / (1 - b2^t)
///   theta <- theta - lr * (b1*m_hat + (1-b1)*g/(1-b1^t)) / (sqrt(v_hat) + eps)
class Nadam {
 public:
  Nadam(NadamConfig config, std::size_t parameter_count);

  /// One update over all parameters. Throws std::invalid_argument on shape
  /// mismatch and std::runtime_error if any gradient is non-finite; in both
  /// cases the step is aborted with parameters and state untouched.
  void step(std::span<double> params, std::span<const double> grads);

  const NadamConfig& config() const { return config_; }
  std::int64_t step_count() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

  /// Binary state round-trip; restoring mid-training reproduces the
  /// subsequent trajectory bitwise.
  void save_state(std::ostream& out) const;
  void load_state(std::istream& in);

 private:
  NadamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

/// Seeded shuffle of the given indices partitioned into consecutive batches;
/// the final batch may be short. Every index appears exactly once.
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices,
                                                   std::size_t batch_size, Rng& rng);

}  // namespace pq::optim
