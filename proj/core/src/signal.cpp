#include "pq/signal.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pq {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;
constexpr double kTwoPi = 2.0 * kPi;

[[noreturn]] void fail_range(const char* cls, const char* name, double value,
                             double lo, double hi) {
  std::ostringstream os;
  os << cls << ": " << name << "=" << value << " outside [" << lo << ", " << hi << "]";
  throw std::invalid_argument(os.str());
}

void check_range(const char* cls, const char* name, double value, double lo, double hi) {
  if (!(value >= lo && value <= hi)) fail_range(cls, name, value, lo, hi);
}

void check_window(const char* cls, const SignalSpec& spec, const EventParams& p) {
  if (!(p.t1_s >= 0.0)) {
    std::ostringstream os;
    os << cls << ": t1_s=" << p.t1_s << " must be >= 0";
    throw std::invalid_argument(os.str());
  }
  const double half_cycle = 0.5 / spec.fundamental_hz;
  if (!(p.t2_s - p.t1_s >= half_cycle)) {
    std::ostringstream os;
    os << cls << ": event window t2_s-t1_s=" << (p.t2_s - p.t1_s)
       << " shorter than half a cycle (" << half_cycle << " s)";
    throw std::invalid_argument(os.str());
  }
  if (!(p.t2_s <= spec.duration_s)) {
    std::ostringstream os;
    os << cls << ": t2_s=" << p.t2_s << " beyond duration " << spec.duration_s;
    throw std::invalid_argument(os.str());
  }
}

Waveform make_waveform(EventClass label, const SignalSpec& spec, const EventParams& p) {
  spec.validate();
  Waveform w;
  w.label = label;
  w.params = p;
  w.spec = spec;
  w.samples.resize(static_cast<std::size_t>(spec.sample_count()));
  return w;
}

}  // namespace

int SignalSpec::sample_count() const {
  return static_cast<int>(std::llround(duration_s * sample_rate_hz));
}

void SignalSpec::validate() const {
  if (!(sample_rate_hz > 0.0) || !(fundamental_hz > 0.0) || !(duration_s > 0.0) ||
      !(amplitude_pu > 0.0)) {
    throw std::invalid_argument("SignalSpec: all fields must be positive");
  }
  if (sample_rate_hz < 2.0 * 7.0 * fundamental_hz) {
    std::ostringstream os;
    os << "SignalSpec: sample_rate_hz=" << sample_rate_hz
       << " below Nyquist for the 7th harmonic (" << 2.0 * 7.0 * fundamental_hz << " Hz)";
    throw std::invalid_argument(os.str());
  }
  const double n_exact = duration_s * sample_rate_hz;
  const double n_round = std::llround(n_exact);
  if (std::abs(n_exact - n_round) > 1e-9 * std::max(1.0, n_exact)) {
    std::ostringstream os;
    os << "SignalSpec: duration_s*sample_rate_hz=" << n_exact
       << " is not a whole number of samples";
    throw std::invalid_argument(os.str());
  }
  if (n_round < 2) {
    throw std::invalid_argument("SignalSpec: fewer than 2 samples");
  }
}

const char* class_name(EventClass c) {
  switch (c) {
    case EventClass::Sag: return "sag";
    case EventClass::Swell: return "swell";
    case EventClass::Interruption: return "interruption";
    case EventClass::Harmonics: return "harmonics";
    case EventClass::Transient: return "transient";
    case EventClass::Flicker: return "flicker";
  }
  throw std::invalid_argument("unknown EventClass code");
}

EventClass class_from_code(int code) {
  if (code < 1 || code > kClassCount) {
    std::ostringstream os;
    os << "event class code " << code << " outside 1.." << kClassCount;
    throw std::invalid_argument(os.str());
  }
  return static_cast<EventClass>(code);
}

Waveform gen_sag(const SignalSpec& spec, const EventParams& p, ParamCheck check) {
  if (check == ParamCheck::Enforce) {
    check_range("sag", "alpha", p.alpha, 0.1, 0.9);
    check_window("sag", spec, p);
  }
  Waveform w = make_waveform(EventClass::Sag, spec, p);
  const double omega = spec.omega();
  const double v0 = spec.amplitude_pu;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    const double gate = unit_step(t - p.t1_s) - unit_step(t - p.t2_s);
    w.samples[i] = v0 * (1.0 - p.alpha * gate) * std::sin(omega * t);
  }
  return w;
}

Waveform gen_swell(const SignalSpec& spec, const EventParams& p, ParamCheck check) {
  if (check == ParamCheck::Enforce) {
    check_range("swell", "alpha", p.alpha, 0.1, 0.9);
    check_window("swell", spec, p);
  }
  Waveform w = make_waveform(EventClass::Swell, spec, p);
  const double omega = spec.omega();
  const double v0 = spec.amplitude_pu;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    const double gate = unit_step(t - p.t1_s) - unit_step(t - p.t2_s);
    w.samples[i] = v0 * (1.0 + p.alpha * gate) * std::sin(omega * t);
  }
  return w;
}

Waveform gen_interruption(const SignalSpec& spec, const EventParams& p, ParamCheck check) {
  if (check == ParamCheck::Enforce) {
    check_range("interruption", "alpha", p.alpha, 0.9, 1.0);
    check_window("interruption", spec, p);
  }
  Waveform w = make_waveform(EventClass::Interruption, spec, p);
  const double omega = spec.omega();
  const double v0 = spec.amplitude_pu;
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    const double gate = unit_step(t - p.t1_s) - unit_step(t - p.t2_s);
    w.samples[i] = v0 * (1.0 - p.alpha * gate) * std::sin(omega * t);
  }
  return w;
}

double harmonics_h1(const EventParams& p) {
  return std::sqrt(1.0 - p.h3 * p.h3 - p.h5 * p.h5 - p.h7 * p.h7);
}

Waveform gen_harmonics(const SignalSpec& spec, const EventParams& p, ParamCheck check) {
  if (check == ParamCheck::Enforce) {
    check_range("harmonics", "h3", p.h3, 0.05, 0.15);
    check_range("harmonics", "h5", p.h5, 0.05, 0.15);
    check_range("harmonics", "h7", p.h7, 0.05, 0.15);
  }
  Waveform w = make_waveform(EventClass::Harmonics, spec, p);
  const double omega = spec.omega();
  const double h1 = harmonics_h1(p);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    w.samples[i] = h1 * std::sin(omega * t) + p.h3 * std::sin(3.0 * omega * t) +
                   p.h5 * std::sin(5.0 * omega * t) + p.h7 * std::sin(7.0 * omega * t);
  }
  return w;
}

Waveform gen_transient(const SignalSpec& spec, const EventParams& p, ParamCheck check) {
  if (check == ParamCheck::Enforce) {
    check_range("transient", "alpha", p.alpha, 0.1, 0.8);
    check_range("transient", "omega_n_hz", p.omega_n_hz, 100.0, 400.0);
    check_range("transient", "tau_s", p.tau_s, 0.008, 0.04);
    check_range("transient", "t1_s", p.t1_s, 0.0, spec.duration_s);
  }
  Waveform w = make_waveform(EventClass::Transient, spec, p);
  const double omega = spec.omega();
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    double v = std::sin(omega * t);
    // Decaying oscillation enters at t1; ungated it would blow up for t < t1.
    if (t >= p.t1_s) {
      v += p.alpha * std::exp(-(t - p.t1_s) / p.tau_s) * std::sin(kTwoPi * p.omega_n_hz * t);
    }
    w.samples[i] = v;
  }
  return w;
}

Waveform gen_flicker(const SignalSpec& spec, const EventParams& p, ParamCheck check) {
  if (check == ParamCheck::Enforce) {
    check_range("flicker", "alpha", p.alpha, 0.1, 0.2);
    check_range("flicker", "beta_hz", p.beta_hz, 0.5, 25.0);
  }
  Waveform w = make_waveform(EventClass::Flicker, spec, p);
  const double omega = spec.omega();
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate_hz;
    w.samples[i] = (1.0 + p.alpha * std::sin(kTwoPi * p.beta_hz * t)) * std::sin(omega * t);
  }
  return w;
}

Waveform generate(EventClass c, const SignalSpec& spec, const EventParams& p,
                  ParamCheck check) {
  switch (c) {
    case EventClass::Sag: return gen_sag(spec, p, check);
    case EventClass::Swell: return gen_swell(spec, p, check);
    case EventClass::Interruption: return gen_interruption(spec, p, check);
    case EventClass::Harmonics: return gen_harmonics(spec, p, check);
    case EventClass::Transient: return gen_transient(spec, p, check);
    case EventClass::Flicker: return gen_flicker(spec, p, check);
  }
  throw std::invalid_argument("unknown EventClass code");
}

namespace {

// t1 ~ U[0.1 d, 0.5 d]; the window end stays at least 0.1 d away from the
// signal end and the window is never shorter than half a fundamental cycle.
double draw_t1(Rng& rng, const SignalSpec& spec) {
  return rng.uniform(0.1 * spec.duration_s, 0.5 * spec.duration_s);
}

double draw_window_end(Rng& rng, const SignalSpec& spec, double t1) {
  const double half_cycle = 0.5 / spec.fundamental_hz;
  const double max_len = 0.9 * spec.duration_s - t1;
  if (max_len < half_cycle) {
    std::ostringstream os;
    os << "sample_params: duration " << spec.duration_s
       << " s too short to place a half-cycle event window";
    throw std::invalid_argument(os.str());
  }
  return t1 + rng.uniform(half_cycle, max_len);
}

}  // namespace

EventParams sample_params(EventClass c, Rng& rng, const SignalSpec& spec) {
  spec.validate();
  EventParams p;
  switch (c) {
    case EventClass::Sag:
      p.alpha = rng.uniform(0.1, 0.9);
      p.t1_s = draw_t1(rng, spec);
      p.t2_s = draw_window_end(rng, spec, p.t1_s);
      break;
    case EventClass::Swell:
      p.alpha = rng.uniform(0.1, 0.9);
      p.t1_s = draw_t1(rng, spec);
      p.t2_s = draw_window_end(rng, spec, p.t1_s);
      break;
    case EventClass::Interruption:
      p.alpha = rng.uniform(0.9, 1.0);
      p.t1_s = draw_t1(rng, spec);
      p.t2_s = draw_window_end(rng, spec, p.t1_s);
      break;
    case EventClass::Harmonics:
      p.h3 = rng.uniform(0.05, 0.15);
      p.h5 = rng.uniform(0.05, 0.15);
      p.h7 = rng.uniform(0.05, 0.15);
      break;
    case EventClass::Transient:
      p.alpha = rng.uniform(0.1, 0.8);
      p.omega_n_hz = rng.uniform(100.0, 400.0);
      p.tau_s = rng.uniform(0.008, 0.04);
      p.t1_s = draw_t1(rng, spec);
      break;
    case EventClass::Flicker:
      p.alpha = rng.uniform(0.1, 0.2);
      p.beta_hz = rng.uniform(0.5, 25.0);
      break;
    default:
      throw std::invalid_argument("unknown EventClass code");
  }
  return p;
}

}  // namespace pq
