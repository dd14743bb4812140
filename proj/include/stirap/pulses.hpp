#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stirap/error.hpp"

namespace stirap {

using Complex = std::complex<double>;

namespace detail {

template <class S>
inline constexpr bool is_complex_v = !std::is_floating_point_v<S>;

inline double real_part(double x) { return x; }
inline double real_part(Complex z) { return z.real(); }

// Logistic function without overflow for either sign of the argument.
template <class S>
S logistic(S x) {
  using std::exp;
  if (real_part(x) >= 0.0) return S(1.0) / (S(1.0) + exp(-x));
  const S e = exp(x);
  return e / (S(1.0) + e);
}

template <class S>
S int_pow(S base, int exponent) {
  S result(1.0);
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

}  // namespace detail

/// Value of a scalar function together with its first derivative.
template <class S>
struct Jet {
  S value;
  S derivative;
};

// ---------------------------------------------------------------------------
// Shape functions f(t): monotone 0 -> 1.

/// f(t) = 1 / (1 + exp(-steepness * t / time_unit))
struct Sigmoid {
  double steepness = 4.0;
  double time_unit = 1.0;
};

using ShapeFunction = std::variant<Sigmoid>;

template <class S>
Jet<S> shape_jet(const ShapeFunction& shape, S t) {
  return std::visit(
      [&](const auto& s) -> Jet<S> {
        const double rate = s.steepness / s.time_unit;
        const S f = detail::logistic<S>(rate * t);
        // 1 - f evaluated as logistic(-x) keeps precision in the right tail.
        const S g = detail::logistic<S>(-rate * t);
        return {f, rate * f * g};
      },
      shape);
}

/// Poles of the analytic continuation of f closest to the real axis, in the
/// upper half-plane, sorted by imaginary part.
inline std::vector<Complex> shape_poles(const ShapeFunction& shape, double max_imag) {
  std::vector<Complex> poles;
  std::visit(
      [&](const Sigmoid& s) {
        const double spacing = std::numbers::pi * s.time_unit / s.steepness;
        for (int k = 0; (2 * k + 1) * spacing <= max_imag; ++k)
          poles.emplace_back(0.0, (2 * k + 1) * spacing);
      },
      shape);
  return poles;
}

inline double shape_time_unit(const ShapeFunction& shape) {
  return std::visit([](const Sigmoid& s) { return s.time_unit; }, shape);
}

// ---------------------------------------------------------------------------
// Mask functions F(t).

/// F(t) = exp(-(t / width)^(2 order))
struct Hypergaussian {
  int order = 3;
  double width = 2.0;
};

struct ConstantMask {};

using MaskFunction = std::variant<Hypergaussian, ConstantMask>;

template <class S>
Jet<S> mask_jet(const MaskFunction& mask, S t) {
  if (const auto* h = std::get_if<Hypergaussian>(&mask)) {
    using std::exp;
    const S u = t / h->width;
    const S u_odd = detail::int_pow(u, 2 * h->order - 1);
    const S F = exp(-(u_odd * u));
    return {F, -2.0 * h->order * u_odd / h->width * F};
  }
  return {S(1.0), S(0.0)};
}

// ---------------------------------------------------------------------------
// Pulse families. Three-state families return (pump, Stokes); the two-state
// families return (coupling, detuning) in the same two slots.

struct DdpOptimized {
  double omega0 = 20.0;
  MaskFunction mask = Hypergaussian{};
  ShapeFunction shape = Sigmoid{};
};

struct Gaussian {
  double omega0 = 20.0;
  double delay = 1.2;
  double width = 1.0;
};

struct FractionalDdp {
  double omega0 = 20.0;
  MaskFunction mask = Hypergaussian{};
  ShapeFunction shape = Sigmoid{};
  double angle = std::numbers::pi / 4;
};

struct FractionalGaussian {
  double omega0 = 20.0;
  double delay = 1.4;
  double width = 1.0;
  double angle = std::numbers::pi / 4;
};

/// Coupling eps0 sin(pi f), detuning eps0 cos(pi f): constant splitting eps0.
struct TwoStateConstantEps {
  double eps0 = 1.0;
  ShapeFunction shape = Sigmoid{};
};

/// Constant coupling omega0, detuning sweep_rate * t.
struct LandauZener {
  double omega0 = 1.0;
  double sweep_rate = 1.0;
};

using PulseFamily = std::variant<DdpOptimized, Gaussian, FractionalDdp, FractionalGaussian,
                                 TwoStateConstantEps, LandauZener>;

struct PulseOptions {
  /// Complex evaluation refuses points closer than this to a shape pole, in
  /// units of the shape time unit.
  double pole_exclusion = 1e-3;
  /// Envelopes below envelope_floor * peak count as zero for angle purposes.
  double envelope_floor = 1e-15;
};

template <class S>
struct EnvelopeJet {
  S p, s;    // pump and Stokes (or coupling and detuning)
  S dp, ds;  // time derivatives
};

struct PulseSample {
  double t;
  double omega_p;
  double omega_s;
};

class PulseDescriptor {
 public:
  explicit PulseDescriptor(PulseFamily family, PulseOptions options = {})
      : family_(std::move(family)), options_(options) {
    validate();
  }

  const PulseFamily& family() const { return family_; }
  const PulseOptions& options() const { return options_; }

  /// Peak Rabi frequency (or eps0 / omega0 for two-state families).
  double peak() const {
    return std::visit(
        [](const auto& f) -> double {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, TwoStateConstantEps>)
            return f.eps0;
          else
            return f.omega0;
        },
        family_);
  }

  bool is_two_state() const {
    return std::holds_alternative<TwoStateConstantEps>(family_) ||
           std::holds_alternative<LandauZener>(family_);
  }

  /// Families whose envelopes do not vanish at large |t|; propagation and
  /// area windows must then be given explicitly by the caller.
  bool needs_explicit_window() const {
    if (is_two_state()) return true;
    if (const auto* d = std::get_if<DdpOptimized>(&family_))
      return std::holds_alternative<ConstantMask>(d->mask);
    if (const auto* d = std::get_if<FractionalDdp>(&family_))
      return std::holds_alternative<ConstantMask>(d->mask);
    return false;
  }

  const ShapeFunction* shape() const {
    return std::visit(
        [](const auto& f) -> const ShapeFunction* {
          if constexpr (requires { f.shape; })
            return &f.shape;
          else
            return nullptr;
        },
        family_);
  }

  const MaskFunction* mask() const {
    return std::visit(
        [](const auto& f) -> const MaskFunction* {
          if constexpr (requires { f.mask; })
            return &f.mask;
          else
            return nullptr;
        },
        family_);
  }

  /// Singularities of the analytic continuation in the upper half-plane with
  /// imaginary part up to max_imag. Only the sigmoid shape has any.
  std::vector<Complex> poles(double max_imag) const {
    if (const auto* s = shape()) return shape_poles(*s, max_imag);
    return {};
  }

  double pole_exclusion_radius() const {
    const auto* s = shape();
    return options_.pole_exclusion * (s ? shape_time_unit(*s) : 1.0);
  }

  /// Throws PoleProximity when t lies inside the exclusion disc of a pole
  /// (in either half-plane).
  void check_pole_distance(Complex t) const {
    const auto* s = shape();
    if (!s) return;
    const double radius = pole_exclusion_radius();
    for (Complex pole : shape_poles(*s, std::abs(t.imag()) + radius + 1.0)) {
      if (std::abs(t - pole) < radius || std::abs(t - std::conj(pole)) < radius)
        throw Error(ErrorKind::PoleProximity,
                    "t = (" + std::to_string(t.real()) + ", " + std::to_string(t.imag()) +
                        ") is within the exclusion radius of a shape pole");
    }
  }

  /// Envelopes and their closed-form derivatives at real or complex time.
  template <class S>
  EnvelopeJet<S> jet(S t) const {
    using std::cos;
    using std::exp;
    using std::sin;
    return std::visit(
        [&](const auto& f) -> EnvelopeJet<S> {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, DdpOptimized> || std::is_same_v<F, FractionalDdp>) {
            double scale = std::numbers::pi / 2;
            if constexpr (std::is_same_v<F, FractionalDdp>) scale = f.angle;
            const auto shape = shape_jet<S>(f.shape, t);
            const auto mask = mask_jet<S>(f.mask, t);
            const S phase = scale * shape.value;
            const S dphase = scale * shape.derivative;
            const S sp = sin(phase), cp = cos(phase);
            return {f.omega0 * mask.value * sp, f.omega0 * mask.value * cp,
                    f.omega0 * (mask.derivative * sp + mask.value * cp * dphase),
                    f.omega0 * (mask.derivative * cp - mask.value * sp * dphase)};
          } else if constexpr (std::is_same_v<F, Gaussian> ||
                               std::is_same_v<F, FractionalGaussian>) {
            const double w2 = f.width * f.width;
            const S late = t - f.delay / 2;
            const S early = t + f.delay / 2;
            const S g_late = f.omega0 * exp(-late * late / w2);
            const S g_early = f.omega0 * exp(-early * early / w2);
            const S dg_late = -2.0 * late / w2 * g_late;
            const S dg_early = -2.0 * early / w2 * g_early;
            if constexpr (std::is_same_v<F, Gaussian>) {
              return {g_late, g_early, dg_late, dg_early};
            } else {
              const double sa = std::sin(f.angle), ca = std::cos(f.angle);
              return {sa * g_late, g_early + ca * g_late, sa * dg_late, dg_early + ca * dg_late};
            }
          } else if constexpr (std::is_same_v<F, TwoStateConstantEps>) {
            const auto shape = shape_jet<S>(f.shape, t);
            const S phase = std::numbers::pi * shape.value;
            const S dphase = std::numbers::pi * shape.derivative;
            const S sp = sin(phase), cp = cos(phase);
            return {f.eps0 * sp, f.eps0 * cp, f.eps0 * cp * dphase, -f.eps0 * sp * dphase};
          } else {
            return {S(f.omega0), f.sweep_rate * t, S(0.0), S(f.sweep_rate)};
          }
        },
        family_);
  }

 private:
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw Error(ErrorKind::InvalidArgument, what);
    };
    auto check_shape = [&](const ShapeFunction& s) {
      std::visit(
          [&](const Sigmoid& sg) {
            require(sg.steepness > 0, "sigmoid steepness must be positive");
            require(sg.time_unit > 0, "time unit must be positive");
          },
          s);
    };
    auto check_mask = [&](const MaskFunction& m) {
      if (const auto* h = std::get_if<Hypergaussian>(&m)) {
        require(h->order >= 1, "hypergaussian order must be >= 1");
        require(h->width > 0, "hypergaussian width must be positive");
      }
    };
    std::visit(
        [&](const auto& f) {
          using F = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<F, TwoStateConstantEps>) {
            require(f.eps0 > 0, "eps0 must be positive");
          } else {
            require(f.omega0 > 0, "omega0 must be positive");
          }
          if constexpr (requires { f.shape; }) check_shape(f.shape);
          if constexpr (requires { f.mask; }) check_mask(f.mask);
          if constexpr (requires { f.width; }) require(f.width > 0, "width must be positive");
          if constexpr (requires { f.delay; })
            require(std::isfinite(f.delay), "delay must be finite");
          if constexpr (requires { f.angle; })
            require(f.angle >= 0 && f.angle <= std::numbers::pi / 2,
                    "fractional angle must lie in [0, pi/2]");
          if constexpr (std::is_same_v<F, LandauZener>)
            require(f.sweep_rate != 0 && std::isfinite(f.sweep_rate),
                    "sweep rate must be finite and nonzero");
          require(std::isfinite(options_.pole_exclusion) && options_.pole_exclusion > 0,
                  "pole exclusion radius must be positive");
        },
        family_);
  }

  PulseFamily family_;
  PulseOptions options_;
};

// ---------------------------------------------------------------------------
// Operations

inline PulseSample evaluate(const PulseDescriptor& desc, double t) {
  const auto j = desc.jet<double>(t);
  return {t, j.p, j.s};
}

/// Analytic continuation of both envelopes. Real input yields exactly zero
/// imaginary parts.
inline std::pair<Complex, Complex> evaluate(const PulseDescriptor& desc, Complex t) {
  if (t.imag() == 0.0) {
    const auto j = desc.jet<double>(t.real());
    return {Complex(j.p, 0.0), Complex(j.s, 0.0)};
  }
  desc.check_pole_distance(t);
  const auto j = desc.jet<Complex>(t);
  return {j.p, j.s};
}

/// atan2 of a nonnegative envelope pair, refusing when both are negligible.
inline double mixing_angle_from(double omega_p, double omega_s, double floor) {
  if (std::abs(omega_p) <= floor && std::abs(omega_s) <= floor)
    throw Error(ErrorKind::DegenerateAngle, "both envelopes below floor");
  return std::atan2(omega_p, omega_s);
}

/// (dOp Os - Op dOs) / (Op^2 + Os^2)
inline double mixing_angle_rate_from(const EnvelopeJet<double>& j, double floor) {
  const double norm2 = j.p * j.p + j.s * j.s;
  if (std::abs(j.p) <= floor && std::abs(j.s) <= floor)
    throw Error(ErrorKind::DegenerateAngle, "both envelopes below floor");
  return (j.dp * j.s - j.p * j.ds) / norm2;
}

namespace detail {

// Ratio Op/Os for the fractional Gaussian pair, written as sin a / (e^-x + cos a)
// with x = 2 t delay / width^2; also returns d(ratio)/dt.
inline std::pair<double, double> fractional_gaussian_ratio(const FractionalGaussian& f, double t) {
  const double rate = 2.0 * f.delay / (f.width * f.width);
  const double x = rate * t;
  const double sa = std::sin(f.angle), ca = std::cos(f.angle);
  if (x >= 0) {
    const double e = std::exp(-x);
    const double denom = e + ca;
    return {sa / denom, sa * rate * e / (denom * denom)};
  }
  const double e = std::exp(x);  // e^-x would overflow
  const double denom = 1.0 + ca * e;
  return {sa * e / denom, sa * rate * e / (denom * denom)};
}

}  // namespace detail

/// Mixing angle atan(Op/Os). Every three-state family has a closed-form ratio,
/// so the angle stays defined where both envelopes underflow.
inline double mixing_angle(const PulseDescriptor& desc, double t) {
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, DdpOptimized>) {
          return std::numbers::pi / 2 * shape_jet<double>(f.shape, t).value;
        } else if constexpr (std::is_same_v<F, FractionalDdp>) {
          return f.angle * shape_jet<double>(f.shape, t).value;
        } else if constexpr (std::is_same_v<F, Gaussian>) {
          // Op/Os = exp(2 t delay / width^2)
          const double x = 2.0 * t * f.delay / (f.width * f.width);
          return x > 0 ? std::numbers::pi / 2 - std::atan(std::exp(-x)) : std::atan(std::exp(x));
        } else if constexpr (std::is_same_v<F, FractionalGaussian>) {
          return std::atan(detail::fractional_gaussian_ratio(f, t).first);
        } else {
          const auto j = desc.jet<double>(t);
          return mixing_angle_from(j.p, j.s, desc.options().envelope_floor * desc.peak());
        }
      },
      desc.family());
}

/// Time derivative of the mixing angle from closed-form family derivatives.
inline double mixing_angle_rate(const PulseDescriptor& desc, double t) {
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, DdpOptimized>) {
          return std::numbers::pi / 2 * shape_jet<double>(f.shape, t).derivative;
        } else if constexpr (std::is_same_v<F, FractionalDdp>) {
          return f.angle * shape_jet<double>(f.shape, t).derivative;
        } else if constexpr (std::is_same_v<F, Gaussian>) {
          const double rate = 2.0 * f.delay / (f.width * f.width);
          return rate / (2.0 * std::cosh(rate * t));
        } else if constexpr (std::is_same_v<F, FractionalGaussian>) {
          const auto [r, dr] = detail::fractional_gaussian_ratio(f, t);
          return dr / (1.0 + r * r);
        } else {
          return mixing_angle_rate_from(desc.jet<double>(t),
                                        desc.options().envelope_floor * desc.peak());
        }
      },
      desc.family());
}

struct TimeWindow {
  double start = -10.0;
  double end = 10.0;

  double length() const { return end - start; }
};

struct PulseAreas {
  double pump = 0;     // integral of Op
  double stokes = 0;   // integral of Os
  double rms = 0;      // sqrt(pump^2 + stokes^2)
  double overlap = 0;  // integral of min(Op, Os)
  double ratio = 0;    // rms / overlap
  double envelope = 0; // integral of sqrt(Op^2 + Os^2)
};

struct AreaOptions {
  /// Edge envelopes must be below edge_floor * peak (families that vanish).
  double edge_floor = 1e-6;
  double tolerance = 1e-11;
};

namespace detail {

template <class F>
double integrate_real(F&& f, TimeWindow w, double tol) {
  // One adaptive pass over the whole window: the tolerance becomes absolute
  // (relative to the total), so regions where the envelope has underflowed
  // do not force refinement.
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, w.start, w.end, 30, tol);
}

}  // namespace detail

inline PulseAreas areas(const PulseDescriptor& desc, TimeWindow window, AreaOptions opts = {}) {
  if (!(window.start < window.end))
    throw Error(ErrorKind::InvalidArgument, "area window must have start < end");
  if (!desc.needs_explicit_window()) {
    const double limit = opts.edge_floor * desc.peak();
    for (double edge : {window.start, window.end}) {
      const auto s = evaluate(desc, edge);
      if (std::abs(s.omega_p) > limit || std::abs(s.omega_s) > limit)
        throw Error(ErrorKind::WindowTooNarrow,
                    "envelope at t = " + std::to_string(edge) + " exceeds the edge floor");
    }
  }
  PulseAreas a;
  a.pump = detail::integrate_real([&](double t) { return evaluate(desc, t).omega_p; }, window,
                                  opts.tolerance);
  a.stokes = detail::integrate_real([&](double t) { return evaluate(desc, t).omega_s; }, window,
                                    opts.tolerance);
  a.overlap = detail::integrate_real(
      [&](double t) {
        const auto s = evaluate(desc, t);
        return std::min(s.omega_p, s.omega_s);
      },
      window, opts.tolerance);
  a.envelope = detail::integrate_real(
      [&](double t) {
        const auto s = evaluate(desc, t);
        return std::hypot(s.omega_p, s.omega_s);
      },
      window, opts.tolerance);
  a.rms = std::hypot(a.pump, a.stokes);
  a.ratio = a.rms / a.overlap;
  return a;
}

struct AdiabaticityMargin {
  double margin;  // min over samples of Omega0 |F| - |dtheta/dt|
  double at;      // where the minimum occurs
};

/// Local adiabaticity reserve Omega0 |F(t)| - |theta'(t)| for the DDP families,
/// where theta' is (pi/2) f' (full transfer) or angle * f' (fractional).
inline AdiabaticityMargin adiabaticity_margin(const PulseDescriptor& desc, TimeWindow window,
                                              int num_samples) {
  double omega0 = 0, scale = 0;
  const MaskFunction* mask = nullptr;
  const ShapeFunction* shape = nullptr;
  if (const auto* d = std::get_if<DdpOptimized>(&desc.family())) {
    omega0 = d->omega0, scale = std::numbers::pi / 2, mask = &d->mask, shape = &d->shape;
  } else if (const auto* d = std::get_if<FractionalDdp>(&desc.family())) {
    omega0 = d->omega0, scale = d->angle, mask = &d->mask, shape = &d->shape;
  } else {
    throw Error(ErrorKind::InvalidArgument, "adiabaticity margin needs a DDP-optimized family");
  }
  if (num_samples < 2) throw Error(ErrorKind::InvalidArgument, "need at least two samples");
  AdiabaticityMargin best{std::numeric_limits<double>::infinity(), window.start};
  for (int i = 0; i < num_samples; ++i) {
    const double t = window.start + window.length() * i / (num_samples - 1);
    const double reserve = omega0 * std::abs(mask_jet<double>(*mask, t).value) -
                           scale * std::abs(shape_jet<double>(*shape, t).derivative);
    if (reserve < best.margin) best = {reserve, t};
  }
  return best;
}

/// Copy of desc with the peak Rabi frequency (eps0 for the constant-splitting
/// family) replaced.
inline PulseDescriptor with_peak(const PulseDescriptor& desc, double peak) {
  PulseFamily family = desc.family();
  std::visit(
      [&](auto& f) {
        if constexpr (requires { f.eps0; })
          f.eps0 = peak;
        else
          f.omega0 = peak;
      },
      family);
  return PulseDescriptor(std::move(family), desc.options());
}

/// Copy of desc with the hypergaussian mask width replaced.
inline PulseDescriptor with_mask_width(const PulseDescriptor& desc, double width) {
  PulseFamily family = desc.family();
  bool changed = false;
  std::visit(
      [&](auto& f) {
        if constexpr (requires { f.mask; }) {
          if (auto* h = std::get_if<Hypergaussian>(&f.mask)) {
            h->width = width;
            changed = true;
          }
        }
      },
      family);
  if (!changed)
    throw Error(ErrorKind::InvalidArgument, "descriptor has no hypergaussian mask to resize");
  return PulseDescriptor(std::move(family), desc.options());
}

// ---------------------------------------------------------------------------
// Construction from a key-value record.

struct PulseConfig {
  std::string family = "ddp-optimized";
  double omega0 = 20.0;
  double tau = 1.2;
  double T = 1.0;
  int n = 3;
  double lambda = 4.0;
  double t0 = 2.0;
  double alpha = std::numbers::pi / 4;
  double eps0 = 1.0;
  double rate = 1.0;
  std::string mask = "hypergaussian";

  bool operator==(const PulseConfig&) const = default;
};

inline const std::vector<std::string>& pulse_family_names() {
  static const std::vector<std::string> names = {
      "ddp-optimized",       "gaussian",   "fractional-ddp",
      "fractional-gaussian", "constant-eps", "landau-zener"};
  return names;
}

inline PulseDescriptor make_pulse(const PulseConfig& c, PulseOptions options = {}) {
  MaskFunction mask;
  if (c.mask == "hypergaussian")
    mask = Hypergaussian{c.n, c.t0 * c.T};
  else if (c.mask == "constant")
    mask = ConstantMask{};
  else
    throw Error(ErrorKind::ValidationError, "unknown mask '" + c.mask + "'");
  const ShapeFunction shape = Sigmoid{c.lambda, c.T};

  if (c.family == "ddp-optimized") return PulseDescriptor(DdpOptimized{c.omega0, mask, shape}, options);
  if (c.family == "gaussian") return PulseDescriptor(Gaussian{c.omega0, c.tau * c.T, c.T}, options);
  if (c.family == "fractional-ddp")
    return PulseDescriptor(FractionalDdp{c.omega0, mask, shape, c.alpha}, options);
  if (c.family == "fractional-gaussian")
    return PulseDescriptor(FractionalGaussian{c.omega0, c.tau * c.T, c.T, c.alpha}, options);
  if (c.family == "constant-eps") return PulseDescriptor(TwoStateConstantEps{c.eps0, shape}, options);
  if (c.family == "landau-zener") return PulseDescriptor(LandauZener{c.omega0, c.rate}, options);
  throw Error(ErrorKind::ValidationError, "unknown pulse family '" + c.family + "'");
}

}  // namespace stirap
