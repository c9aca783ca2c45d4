#include "pq/optim.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace pq::optim {

Nadam::Nadam(NadamConfig config, std::size_t parameter_count)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {
  if (!(config_.lr > 0.0) || !(config_.eps > 0.0) ||
      !(config_.beta1 > 0.0 && config_.beta1 < 1.0) ||
      !(config_.beta2 > 0.0 && config_.beta2 < 1.0)) {
    throw std::invalid_argument("Nadam: lr, eps > 0 and beta1, beta2 in (0,1) required");
  }
}

void Nadam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    std::ostringstream os;
    os << "Nadam::step: got " << params.size() << " params / " << grads.size()
       << " grads, state holds " << m_.size();
    throw std::invalid_argument(os.str());
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw std::runtime_error("Nadam::step: non-finite gradient, step aborted");
    }
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  t_ += 1;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = grads[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / bias1;
    const double v_hat = v_[i] / bias2;
    const double lookahead = b1 * m_hat + (1.0 - b1) * g / bias1;
    params[i] -= config_.lr * lookahead / (std::sqrt(v_hat) + config_.eps);
  }
}

namespace {
constexpr char kStateMagic[4] = {'P', 'Q', 'O', 'S'};
constexpr std::uint16_t kStateVersion = 1;
}  // namespace

void Nadam::save_state(std::ostream& out) const {
  out.write(kStateMagic, sizeof(kStateMagic));
  io::write_scalar<std::uint16_t>(out, kStateVersion);
  io::write_scalar<double>(out, config_.lr);
  io::write_scalar<double>(out, config_.beta1);
  io::write_scalar<double>(out, config_.beta2);
  io::write_scalar<double>(out, config_.eps);
  io::write_scalar<std::int64_t>(out, t_);
  io::write_scalar<std::uint64_t>(out, m_.size());
  io::write_f64_array(out, m_.data(), m_.size());
  io::write_f64_array(out, v_.data(), v_.size());
}

void Nadam::load_state(std::istream& in) {
  io::Reader r(in, "nadam state");
  char magic[4];
  r.read_bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kStateMagic, sizeof(kStateMagic)) != 0) {
    r.fail("bad magic, not a Nadam state blob");
  }
  const auto version = r.read_scalar<std::uint16_t>("state version");
  if (version != kStateVersion) {
    r.fail("unsupported Nadam state version " + std::to_string(version));
  }
  config_.lr = r.read_scalar<double>("lr");
  config_.beta1 = r.read_scalar<double>("beta1");
  config_.beta2 = r.read_scalar<double>("beta2");
  config_.eps = r.read_scalar<double>("eps");
  t_ = r.read_scalar<std::int64_t>("step counter");
  const auto n = r.read_scalar<std::uint64_t>("moment size");
  m_.resize(n);
  v_.resize(n);
  r.read_f64_array(m_.data(), n, "first moment");
  r.read_f64_array(v_.data(), n, "second moment");
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> indices,
                                                   std::size_t batch_size, Rng& rng) {
  if (batch_size < 1) {
    throw std::invalid_argument("make_batches: batch_size must be >= 1");
  }
  std::vector<std::size_t> order(indices.begin(), indices.end());
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace pq::optim
