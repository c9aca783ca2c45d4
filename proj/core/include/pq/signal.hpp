#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pq/rng.hpp"

namespace pq {

/// Sampling grid shared by every waveform in a dataset.
struct SignalSpec {
  double sample_rate_hz = 5000.0;
  double fundamental_hz = 60.0;
  double duration_s = 0.2;
  double amplitude_pu = 1.0;

  /// Number of samples implied by (duration, rate). validate() guarantees
  /// this is a whole number >= 2.
  int sample_count() const;

  /// Angular fundamental frequency, rad/s.
  double omega() const { return 2.0 * 3.141592653589793238462643383279 * fundamental_hz; }

  /// Throws std::invalid_argument when the grid is unusable: non-positive
  /// fields, a fractional sample count, fewer than 2 samples, or a rate
  /// below Nyquist for the 7th harmonic.
  void validate() const;

  bool operator==(const SignalSpec&) const = default;
};

/// The six disturbance classes; integer codes are part of the file format.
enum class EventClass : std::uint8_t {
  Sag = 1,
  Swell = 2,
  Interruption = 3,
  Harmonics = 4,
  Transient = 5,
  Flicker = 6,
};

inline constexpr int kClassCount = 6;

const char* class_name(EventClass c);
EventClass class_from_code(int code);  // throws on codes outside 1..6

/// Generator parameters. Which fields are meaningful depends on the class:
///   Sag/Swell/Interruption: alpha, t1_s, t2_s
///   Harmonics:              h3, h5, h7
///   Transient:              alpha, t1_s, omega_n_hz, tau_s
///   Flicker:                alpha, beta_hz
/// Unused fields stay zero.
struct EventParams {
  double alpha = 0.0;
  double t1_s = 0.0;
  double t2_s = 0.0;
  double h3 = 0.0;
  double h5 = 0.0;
  double h7 = 0.0;
  double omega_n_hz = 0.0;
  double tau_s = 0.0;
  double beta_hz = 0.0;

  bool operator==(const EventParams&) const = default;
};

struct Waveform {
  std::vector<double> samples;
  EventClass label = EventClass::Sag;
  EventParams params;
  SignalSpec spec;
};

/// Whether generators enforce the per-class parameter ranges. Bypass exists
/// for tests that probe identity cases (e.g. alpha = 0) outside the ranges.
enum class ParamCheck { Enforce, Bypass };

/// Heaviside step, right-continuous: u(0) = 1. The event window of the
/// sag/swell/interruption envelopes is therefore [t1, t2).
inline double unit_step(double t) { return t >= 0.0 ? 1.0 : 0.0; }

// Each generator evaluates its closed-form model on the sample grid
// t_i = i / sample_rate. Throws std::invalid_argument naming the violated
// bound when params are out of range (unless check == Bypass).
Waveform gen_sag(const SignalSpec& spec, const EventParams& p,
                 ParamCheck check = ParamCheck::Enforce);
Waveform gen_swell(const SignalSpec& spec, const EventParams& p,
                   ParamCheck check = ParamCheck::Enforce);
Waveform gen_interruption(const SignalSpec& spec, const EventParams& p,
                          ParamCheck check = ParamCheck::Enforce);
Waveform gen_harmonics(const SignalSpec& spec, const EventParams& p,
                       ParamCheck check = ParamCheck::Enforce);
Waveform gen_transient(const SignalSpec& spec, const EventParams& p,
                       ParamCheck check = ParamCheck::Enforce);
Waveform gen_flicker(const SignalSpec& spec, const EventParams& p,
                     ParamCheck check = ParamCheck::Enforce);

/// Dispatch by class.
Waveform generate(EventClass c, const SignalSpec& spec, const EventParams& p,
                  ParamCheck check = ParamCheck::Enforce);

/// First harmonic coefficient implied by the unit-energy constraint
/// h1^2 + h3^2 + h5^2 + h7^2 = 1.
double harmonics_h1(const EventParams& p);

/// Draw parameters uniformly from the class's admissible ranges. Event
/// windows (t1, t2) are placed so the event sits inside the signal with
/// margin: t1 ~ U[0.1 d, 0.5 d], window length ~ U[half cycle, 0.9 d - t1].
/// Deterministic for a fixed generator state.
EventParams sample_params(EventClass c, Rng& rng, const SignalSpec& spec);

}  // namespace pq
