#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stirap/error.hpp"
#include "stirap/hamiltonian.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

template <int N>
struct AmplitudeState {
  double t = 0.0;
  CVector<N> c = CVector<N>::Zero();

  Eigen::Matrix<double, N, 1> populations() const { return c.cwiseAbs2(); }
};

template <int N>
AmplitudeState<N> basis_state(double t, int k) {
  AmplitudeState<N> s;
  s.t = t;
  s.c.setZero();
  s.c(k) = 1.0;
  return s;
}

template <int N>
struct PropagationResult {
  AmplitudeState<N> final;
  std::vector<AmplitudeState<N>> trajectory;
  double norm_drift = 0.0;      // max |norm^2 - 1| over accepted steps (lossless runs)
  long steps_taken = 0;
  long rejected_steps = 0;
  double error_estimate = 0.0;  // sum of accepted local error norms (max-abs, amplitude units)
};

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.0;      // 0: a twentieth of the window
  double initial_step = 0.0;  // 0: chosen from the Hamiltonian scale
  int dense_output_samples = 0;
  long max_steps = 20'000'000;
  /// Propagation refuses windows whose edge envelopes exceed this fraction of
  /// the peak Rabi frequency (for families that vanish at large |t|).
  double edge_floor = 1e-6;

  void validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0))
      throw Error(ErrorKind::InvalidArgument, "integrator tolerances must be positive");
    if (max_step < 0 || initial_step < 0)
      throw Error(ErrorKind::InvalidArgument, "step sizes must be nonnegative");
    if (dense_output_samples == 1 || dense_output_samples < 0)
      throw Error(ErrorKind::InvalidArgument, "dense output needs 0 or at least 2 samples");
  }

  bool operator==(const IntegratorConfig&) const = default;
};

namespace detail {

// Dormand-Prince 5(4) coefficients and Hairer's dense-output weights.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

// Error norm over real and imaginary parts treated as separate components.
template <int N>
double scaled_error(const CVector<N>& err, const CVector<N>& y0, const CVector<N>& y1,
                    double atol, double rtol) {
  double sum = 0;
  for (int i = 0; i < N; ++i) {
    const double sr = atol + rtol * std::max(std::abs(y0(i).real()), std::abs(y1(i).real()));
    const double si = atol + rtol * std::max(std::abs(y0(i).imag()), std::abs(y1(i).imag()));
    sum += std::pow(err(i).real() / sr, 2) + std::pow(err(i).imag() / si, 2);
  }
  return std::sqrt(sum / (2 * N));
}

}  // namespace detail

/// Integrates i dc/dt = H(t) c from window.start to window.end. The callable
/// returns the N x N Hamiltonian at a real time.
template <int N, class HamFn>
PropagationResult<N> propagate_hamiltonian(HamFn&& hamiltonian, TimeWindow window,
                                           const CVector<N>& initial, const IntegratorConfig& cfg,
                                           bool lossless = true) {
  using D = detail::Dopri5;
  using Vec = CVector<N>;
  cfg.validate();
  if (!(window.start < window.end))
    throw Error(ErrorKind::InvalidArgument, "propagation window must have start < end");

  const Complex minus_i(0.0, -1.0);
  auto rhs = [&](double t, const Vec& y) -> Vec { return minus_i * (hamiltonian(t) * y); };

  PropagationResult<N> result;
  const double t_end = window.end;
  double t = window.start;
  Vec y = initial;
  Vec k1 = rhs(t, y);

  const double max_step = cfg.max_step > 0 ? cfg.max_step : window.length() / 20;
  double h = cfg.initial_step;
  if (h <= 0) {
    const double scale = hamiltonian(t).cwiseAbs().rowwise().sum().maxCoeff();
    h = std::min(max_step, 0.05 * std::pow(cfg.rel_tol, 0.2) / std::max(scale, 1.0 / max_step));
  }
  h = std::min(h, max_step);

  std::vector<double> sample_times;
  if (cfg.dense_output_samples >= 2) {
    const int m = cfg.dense_output_samples;
    for (int i = 0; i < m; ++i) sample_times.push_back(window.start + window.length() * i / (m - 1));
    sample_times.back() = t_end;
    result.trajectory.reserve(m);
    result.trajectory.push_back({t, y});
  }
  std::size_t next_sample = sample_times.empty() ? 0 : 1;

  const double initial_norm2 = y.squaredNorm();
  bool last_rejected = false;
  while (t < t_end) {
    if (result.steps_taken + result.rejected_steps >= cfg.max_steps)
      throw Error(ErrorKind::StepUnderflow, "step budget exhausted at t = " + std::to_string(t));
    bool last = false;
    if (t + h >= t_end) {
      h = t_end - t;
      last = true;
    }
    if (h <= 1e-14 * std::max(1.0, std::abs(t)))
      throw Error(ErrorKind::StepUnderflow, "step size underflow at t = " + std::to_string(t));

    const Vec k2 = rhs(t + D::c2 * h, y + h * (D::a21 * k1));
    const Vec k3 = rhs(t + D::c3 * h, y + h * (D::a31 * k1 + D::a32 * k2));
    const Vec k4 = rhs(t + D::c4 * h, y + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
    const Vec k5 =
        rhs(t + D::c5 * h, y + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
    const Vec k6 = rhs(t + h, y + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 +
                                       D::a65 * k5));
    const Vec y_new =
        y + h * (D::a71 * k1 + D::a73 * k3 + D::a74 * k4 + D::a75 * k5 + D::a76 * k6);
    const double t_new = last ? t_end : t + h;
    const Vec k7 = rhs(t_new, y_new);
    const Vec err = h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 +
                         D::e7 * k7);
    const double err_norm = detail::scaled_error<N>(err, y, y_new, cfg.abs_tol, cfg.rel_tol);

    if (!(err_norm <= 1.0)) {
      ++result.rejected_steps;
      const double factor = std::isfinite(err_norm) ? 0.9 * std::pow(err_norm, -0.2) : 0.1;
      h *= std::max(0.1, factor);
      last_rejected = true;
      continue;
    }

    // Dense output between t and t_new.
    if (next_sample < sample_times.size() && sample_times[next_sample] <= t_new) {
      const Vec diff = y_new - y;
      const Vec bspl = h * k1 - diff;
      const Vec r4 = diff - h * k7 - bspl;
      const Vec r5 = h * (D::d1 * k1 + D::d3 * k3 + D::d4 * k4 + D::d5 * k5 + D::d6 * k6 +
                          D::d7 * k7);
      while (next_sample < sample_times.size() && sample_times[next_sample] <= t_new) {
        const double ts = sample_times[next_sample];
        if (ts == t_new) {
          result.trajectory.push_back({ts, y_new});
        } else {
          const double th = (ts - t) / h, th1 = 1.0 - th;
          result.trajectory.push_back(
              {ts, y + th * (diff + th1 * (bspl + th * (r4 + th1 * r5)))});
        }
        ++next_sample;
      }
    }

    ++result.steps_taken;
    result.error_estimate += err.cwiseAbs().maxCoeff();
    t = t_new;
    y = y_new;
    k1 = k7;
    if (lossless)
      result.norm_drift = std::max(result.norm_drift, std::abs(y.squaredNorm() - initial_norm2));

    double factor = err_norm > 0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
    factor = std::clamp(factor, 0.2, last_rejected ? 1.0 : 5.0);
    h = std::min(h * factor, max_step);
    last_rejected = false;
  }

  result.final = {t_end, y};
  return result;
}

namespace detail {

inline void check_edges(const PulseDescriptor& desc, TimeWindow window, double floor) {
  if (desc.needs_explicit_window()) return;
  const double limit = floor * desc.peak();
  for (double edge : {window.start, window.end}) {
    const auto s = evaluate(desc, edge);
    if (std::abs(s.omega_p) > limit || std::abs(s.omega_s) > limit)
      throw Error(ErrorKind::WindowTooNarrow, "envelopes at t = " + std::to_string(edge) +
                                                  " exceed the edge floor; widen the window");
  }
}

}  // namespace detail

/// Propagates a pulse pair. N = 3 needs a pump/Stokes family and uses the full
/// three-state Hamiltonian; N = 2 needs a two-state family (LZ, constant eps).
template <int N>
PropagationResult<N> propagate(const PulseDescriptor& desc, const SystemParams& params,
                               const AmplitudeState<N>& initial, const IntegratorConfig& cfg) {
  static_assert(N == 2 || N == 3);
  params.validate();
  detail::check_edges(desc, params.window, cfg.edge_floor);
  const TimeWindow window = params.window;
  if (initial.t != window.start)
    throw Error(ErrorKind::InvalidArgument, "initial state time must equal the window start");

  const double norm2 = initial.c.squaredNorm();
  if (params.gamma == 0 && std::abs(norm2 - 1.0) > 1e-9)
    throw Error(ErrorKind::NotNormalized, "initial state must be normalized");
  if (norm2 > 1.0 + 1e-9) throw Error(ErrorKind::NotNormalized, "initial state exceeds unit norm");

  if constexpr (N == 3) {
    if (desc.is_two_state())
      throw Error(ErrorKind::InvalidArgument, "three-state propagation needs a pump/Stokes family");
    const SystemParams p = params;
    auto ham = [&desc, p](double t) { return build_three_state(desc, p, t).entries; };
    return propagate_hamiltonian<3>(ham, window, initial.c, cfg, params.gamma == 0);
  } else {
    if (!desc.is_two_state())
      throw Error(ErrorKind::InvalidArgument, "two-state propagation needs a two-state family");
    auto ham = [&desc](double t) { return build_two_state(desc, t).entries; };
    return propagate_hamiltonian<2>(ham, window, initial.c, cfg, true);
  }
}

template <int N>
Eigen::Matrix<double, N, 1> final_populations(const PropagationResult<N>& result) {
  return result.final.populations();
}

}  // namespace stirap
