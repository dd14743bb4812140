#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stirap/error.hpp"
#include "stirap/hamiltonian.hpp"
#include "stirap/propagator.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

enum class ReductionRegime { Resonant, Eliminated };

/// Two-state description of a three-state pulse pair.
///
/// Resonant (delta = 0): coupling Op, detuning Os. The three-state dynamics of
/// the 1/2-convention Hamiltonian correspond to the spin-1/2 system
/// (1/4)[[Os, Op], [Op, -Os]], i.e. both rates scaled by rate_factor = 1/2.
///
/// Eliminated (|delta| large): coupling -Op Os / (2 delta), detuning
/// (Op^2 - Os^2) / (4 delta), acting on (c1, c3) with rate_factor = 1.
class EffectiveTwoState {
 public:
  EffectiveTwoState(PulseDescriptor desc, ReductionRegime regime, double delta = 0.0)
      : desc_(std::move(desc)), regime_(regime), delta_(delta) {}

  ReductionRegime regime() const { return regime_; }
  const PulseDescriptor& descriptor() const { return desc_; }
  double detuning() const { return delta_; }
  double rate_factor() const { return regime_ == ReductionRegime::Resonant ? 0.5 : 1.0; }
  const std::string& warning() const { return warning_; }
  void set_warning(std::string w) { warning_ = std::move(w); }

  template <class S>
  Jet<S> omega_eff(S t) const {
    const auto j = desc_.jet<S>(t);
    if (regime_ == ReductionRegime::Resonant) return {j.p, j.dp};
    return {-j.p * j.s / (2.0 * delta_), -(j.dp * j.s + j.p * j.ds) / (2.0 * delta_)};
  }

  template <class S>
  Jet<S> delta_eff(S t) const {
    const auto j = desc_.jet<S>(t);
    if (regime_ == ReductionRegime::Resonant) return {j.s, j.ds};
    return {(j.p * j.p - j.s * j.s) / (4.0 * delta_), (j.p * j.dp - j.s * j.ds) / (2.0 * delta_)};
  }

  /// sqrt(omega_eff^2 + delta_eff^2) on the real axis.
  double splitting(double t) const {
    return std::hypot(omega_eff(t).value, delta_eff(t).value);
  }

  /// (Op^2 + Os^2) / (4 delta); constant for DDP-optimized pulses without a mask.
  double eliminated_invariant(double t) const {
    const auto s = evaluate(desc_, t);
    return (s.omega_p * s.omega_p + s.omega_s * s.omega_s) / (4.0 * delta_);
  }

  /// Hamiltonian in the two-state diabatic basis: rate_factor/2 [[d, w], [w, -d]]
  /// for the resonant case, 1/2 [[-d, w], [w, d]] for the eliminated one.
  CMatrix<2> hamiltonian(double t) const {
    const double w = omega_eff(t).value, d = delta_eff(t).value;
    CMatrix<2> h;
    if (regime_ == ReductionRegime::Resonant)
      h << d, w, w, -d;
    else
      h << -d, w, w, d;
    return 0.5 * rate_factor() * h;
  }

  /// Resonant system in its adiabatic frame, where the mapped amplitudes obey
  /// the (b1, b2) -> (c1, c2, c3) relation of map_amplitudes exactly:
  /// 1/2 [[-W/2, -i theta'], [i theta', W/2]] with W = sqrt(Op^2 + Os^2).
  CMatrix<2> adiabatic_hamiltonian(double t) const {
    if (regime_ != ReductionRegime::Resonant)
      throw Error(ErrorKind::InvalidArgument, "adiabatic frame is defined for the resonant case");
    const auto s = evaluate(desc_, t);
    const double rms = std::hypot(s.omega_p, s.omega_s);
    const double rate = mixing_angle_rate(desc_, t);
    CMatrix<2> h;
    h << -0.5 * rms, Complex(0.0, -rate), Complex(0.0, rate), 0.5 * rms;
    return 0.5 * h;
  }

 private:
  PulseDescriptor desc_;
  ReductionRegime regime_;
  double delta_;
  std::string warning_;
};

inline EffectiveTwoState resonant_reduce(const PulseDescriptor& desc) {
  if (desc.is_two_state())
    throw Error(ErrorKind::InvalidArgument, "reduction needs a pump/Stokes family");
  return EffectiveTwoState(desc, ReductionRegime::Resonant);
}

/// Adiabatic elimination of the intermediate state; requires |delta| >= 3 omega0
/// and records a warning below 10 omega0.
inline EffectiveTwoState eliminate(const PulseDescriptor& desc, double delta) {
  if (desc.is_two_state())
    throw Error(ErrorKind::InvalidArgument, "reduction needs a pump/Stokes family");
  const double peak = desc.peak();
  if (!(std::abs(delta) >= 3.0 * peak))
    throw Error(ErrorKind::DetuningTooSmall,
                "|delta| = " + std::to_string(std::abs(delta)) + " is below 3 * omega0");
  EffectiveTwoState eff(desc, ReductionRegime::Eliminated, delta);
  if (std::abs(delta) < 10.0 * peak)
    eff.set_warning("|delta| < 10 * omega0: elimination is only qualitatively accurate");
  return eff;
}

/// (b1, b2) -> (c1, c2, c3):
///   c1 = 2 Re(b1* b2) sin(theta) + (|b1|^2 - |b2|^2) cos(theta)
///   c2 = 2 i Im(b1* b2)
///   c3 = 2 Re(b1* b2) cos(theta) - (|b1|^2 - |b2|^2) sin(theta)
inline CVector<3> map_amplitudes(const CVector<2>& b, double theta) {
  if (std::abs(b.squaredNorm() - 1.0) > 1e-9)
    throw Error(ErrorKind::NotNormalized, "two-state amplitudes must be normalized");
  const Complex cross = std::conj(b(0)) * b(1);
  const double x = 2.0 * cross.real();
  const double y = 2.0 * cross.imag();
  const double z = std::norm(b(0)) - std::norm(b(1));
  CVector<3> c;
  c << x * std::sin(theta) + z * std::cos(theta), Complex(0.0, y),
      x * std::cos(theta) - z * std::sin(theta);
  return c;
}

struct ConsistencySample {
  double t;
  Eigen::Vector3d full;
  Eigen::Vector3d mapped;
  double deviation;  // max |full - mapped| over the three populations
};

struct ConsistencyReport {
  ReductionRegime regime;
  std::vector<ConsistencySample> samples;
  double max_deviation = 0.0;
  double final_deviation = 0.0;
  double full_norm_drift = 0.0;
};

/// Propagates the full three-state system and its two-state reduction on the
/// same sample grid and compares populations.
inline ConsistencyReport consistency_check(const PulseDescriptor& desc, const SystemParams& params,
                                           IntegratorConfig cfg) {
  if (params.delta2 != 0.0 || params.gamma != 0.0)
    throw Error(ErrorKind::InvalidArgument, "consistency check needs delta2 = gamma = 0");
  if (cfg.dense_output_samples < 2) cfg.dense_output_samples = 201;
  const TimeWindow w = params.window;

  ConsistencyReport report;
  std::vector<Eigen::Vector3d> mapped;
  AmplitudeState<3> initial;
  initial.t = w.start;

  if (params.delta == 0.0) {
    report.regime = ReductionRegime::Resonant;
    const auto eff = resonant_reduce(desc);
    // b = (1, 0) maps onto the dark state at the window start; the full run
    // starts from the same vector so the comparison is exact.
    CVector<2> b0(1.0, 0.0);
    initial.c = map_amplitudes(b0, mixing_angle(desc, w.start));
    auto ham = [&eff](double t) { return eff.adiabatic_hamiltonian(t); };
    const auto reduced = propagate_hamiltonian<2>(ham, w, b0, cfg);
    for (const auto& s : reduced.trajectory) {
      CVector<2> b = s.c / s.c.norm();
      mapped.push_back(map_amplitudes(b, mixing_angle(desc, s.t)).cwiseAbs2());
    }
  } else {
    report.regime = ReductionRegime::Eliminated;
    const auto eff = eliminate(desc, params.delta);
    initial.c << 1.0, 0.0, 0.0;
    auto ham = [&eff](double t) { return eff.hamiltonian(t); };
    const auto reduced = propagate_hamiltonian<2>(ham, w, CVector<2>(1.0, 0.0), cfg);
    for (const auto& s : reduced.trajectory) {
      const auto e = evaluate(desc, s.t);
      const double p2 =
          std::norm(e.omega_p * s.c(0) + e.omega_s * s.c(1)) / (4.0 * params.delta * params.delta);
      mapped.emplace_back(std::norm(s.c(0)), p2, std::norm(s.c(1)));
    }
  }

  const auto full = propagate<3>(desc, params, initial, cfg);
  report.full_norm_drift = full.norm_drift;
  for (std::size_t i = 0; i < full.trajectory.size(); ++i) {
    ConsistencySample s;
    s.t = full.trajectory[i].t;
    s.full = full.trajectory[i].c.cwiseAbs2();
    s.mapped = mapped[i];
    s.deviation = (s.full - s.mapped).cwiseAbs().maxCoeff();
    report.max_deviation = std::max(report.max_deviation, s.deviation);
    report.samples.push_back(s);
  }
  report.final_deviation = report.samples.back().deviation;
  return report;
}

}  // namespace stirap
