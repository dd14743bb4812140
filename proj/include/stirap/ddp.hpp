#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "stirap/error.hpp"
#include "stirap/pulses.hpp"
#include "stirap/reduction.hpp"

namespace stirap {

/// Two-state model Omega(t), Delta(t) continued into the complex plane. The
/// quasienergy splitting is eps = sqrt(Omega^2 + Delta^2).
struct TwoStateModel {
  std::string name;
  std::function<Jet<Complex>(Complex)> omega;
  std::function<Jet<Complex>(Complex)> delta;
  /// Known singularities in the upper half-plane and their exclusion radius.
  std::vector<Complex> poles;
  double pole_exclusion = 0.0;
  /// Natural time unit (sets deduplication and contour scales).
  double time_unit = 1.0;

  Complex eps_squared(Complex t) const {
    const Complex w = omega(t).value, d = delta(t).value;
    return w * w + d * d;
  }

  /// d(eps^2)/dt
  Complex eps_squared_derivative(Complex t) const {
    const auto w = omega(t), d = delta(t);
    return 2.0 * (w.value * w.derivative + d.value * d.derivative);
  }

  /// Nonadiabatic coupling theta' with theta = atan(Omega / Delta) / 2.
  Complex mixing_rate(Complex t) const {
    const auto w = omega(t), d = delta(t);
    return (w.derivative * d.value - w.value * d.derivative) /
           (2.0 * (w.value * w.value + d.value * d.value));
  }

  void check_poles(Complex t) const {
    for (Complex p : poles)
      if (std::abs(t - p) < pole_exclusion || std::abs(t - std::conj(p)) < pole_exclusion)
        throw Error(ErrorKind::PoleProximity, "point inside a pole exclusion disc");
  }
};

inline TwoStateModel landau_zener_model(double omega0, double rate) {
  TwoStateModel m;
  m.name = "landau-zener";
  m.omega = [omega0](Complex) { return Jet<Complex>{omega0, 0.0}; };
  m.delta = [rate](Complex t) { return Jet<Complex>{rate * t, rate}; };
  m.time_unit = omega0 / std::abs(rate);
  return m;
}

namespace detail {

inline void attach_poles(TwoStateModel& m, const PulseDescriptor& desc, double max_imag) {
  m.poles = desc.poles(max_imag);
  m.pole_exclusion = desc.pole_exclusion_radius();
  if (const auto* s = desc.shape()) m.time_unit = shape_time_unit(*s);
}

inline constexpr double pole_search_limit = 50.0;

}  // namespace detail

/// Two-state families (constant splitting, Landau-Zener) as a DDP model.
inline TwoStateModel two_state_model(const PulseDescriptor& desc) {
  if (!desc.is_two_state())
    throw Error(ErrorKind::InvalidArgument, "expected a two-state pulse family");
  if (const auto* lz = std::get_if<LandauZener>(&desc.family()))
    return landau_zener_model(lz->omega0, lz->sweep_rate);
  TwoStateModel m;
  m.name = "constant-eps";
  m.omega = [desc](Complex t) {
    const auto j = desc.jet<Complex>(t);
    return Jet<Complex>{j.p, j.dp};
  };
  m.delta = [desc](Complex t) {
    const auto j = desc.jet<Complex>(t);
    return Jet<Complex>{j.s, j.ds};
  };
  detail::attach_poles(m, desc, detail::pole_search_limit);
  return m;
}

/// Model from an effective two-state reduction. The resonant regime carries the
/// factor 1/2 of the equivalent spin-1/2 system; zeros are those of Op^2 + Os^2.
inline TwoStateModel reduced_model(const EffectiveTwoState& eff) {
  TwoStateModel m;
  const double k = eff.rate_factor();
  m.name = eff.regime() == ReductionRegime::Resonant ? "resonant" : "eliminated";
  m.omega = [eff, k](Complex t) {
    const auto j = eff.omega_eff<Complex>(t);
    return Jet<Complex>{k * j.value, k * j.derivative};
  };
  m.delta = [eff, k](Complex t) {
    const auto j = eff.delta_eff<Complex>(t);
    return Jet<Complex>{k * j.value, k * j.derivative};
  };
  detail::attach_poles(m, eff.descriptor(), detail::pole_search_limit);
  return m;
}

/// Principal branch of sqrt(Omega^2 + Delta^2): positive on the real axis.
inline Complex quasienergy(const TwoStateModel& model, Complex t) {
  model.check_poles(t);
  return std::sqrt(model.eps_squared(t));
}

struct SearchBox {
  double re_min = -5, re_max = 5;
  double im_min = 1e-6, im_max = 2;

  bool contains(Complex z, double margin = 0.0) const {
    return z.real() >= re_min - margin && z.real() <= re_max + margin &&
           z.imag() >= im_min - margin && z.imag() <= im_max + margin;
  }
};

struct SearchGrid {
  int nx = 16, ny = 16;
};

struct TransitionPoint {
  Complex t0;
  Complex d_value{0.0, 0.0};
  Complex gamma_k{0.0, 0.0};
  double newton_residual = 0.0;  // |eps^2(t0)| / (|Omega|^2 + |Delta|^2)
  int multiplicity = 1;
};

struct ZeroSearch {
  std::vector<TransitionPoint> points;
  int seeds = 0;
  int failed_seeds = 0;  // NoConvergence, reported per seed
};

/// Box clear of poles: Re in the window, Im up to min(2 T, 0.8 * nearest pole).
inline SearchBox default_search_box(const TwoStateModel& model, TimeWindow window) {
  SearchBox box;
  box.re_min = window.start;
  box.re_max = window.end;
  box.im_min = 1e-6 * model.time_unit;
  box.im_max = 2.0 * model.time_unit;
  for (Complex p : model.poles) box.im_max = std::min(box.im_max, 0.8 * p.imag());
  return box;
}

namespace detail {

// (1 / 2 pi i) * closed integral of f around a circle, by the trapezoid rule
// (spectrally accurate for integrands analytic on an annulus).
template <class F>
Complex circle_residue(F&& f, Complex center, double radius, int nodes = 128) {
  Complex sum = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const Complex offset = std::polar(radius, 2.0 * std::numbers::pi * (k + 0.5) / nodes);
    sum += f(center + offset) * offset;
  }
  return sum / double(nodes);
}

inline double distance_to_obstacles(const TwoStateModel& model, Complex t0,
                                     const std::vector<Complex>& other_zeros) {
  double d = 2.0 * std::abs(t0.imag());  // conjugate zero of a real-analytic model
  for (Complex z : other_zeros) {
    if (z == t0) continue;
    d = std::min({d, std::abs(z - t0), std::abs(std::conj(z) - t0)});
  }
  for (Complex p : model.poles)
    d = std::min({d, std::abs(p - t0), std::abs(std::conj(p) - t0)});
  return d;
}

inline double auto_radius(const TwoStateModel& model, Complex t0,
                          const std::vector<Complex>& other_zeros) {
  return std::min(0.3 * distance_to_obstacles(model, t0, other_zeros), 0.5 * model.time_unit);
}

}  // namespace detail

/// Number of zeros of eps^2 inside a circle (argument principle).
inline int zero_multiplicity(const TwoStateModel& model, Complex t0, double radius) {
  const Complex m = detail::circle_residue(
      [&](Complex z) { return model.eps_squared_derivative(z) / model.eps_squared(z); }, t0,
      radius);
  return static_cast<int>(std::lround(m.real()));
}

/// Newton iterations on eps^2 seeded on a uniform grid of cell centres.
inline ZeroSearch find_transition_points(const TwoStateModel& model, const SearchBox& box,
                                         SearchGrid grid) {
  if (!(box.re_min < box.re_max) || !(box.im_min < box.im_max) || box.im_min < 0)
    throw Error(ErrorKind::InvalidArgument, "search box must be a proper upper half-plane rectangle");
  if (grid.nx < 1 || grid.ny < 1) throw Error(ErrorKind::InvalidArgument, "grid must be nonempty");
  for (Complex p : model.poles)
    if (box.contains(p, model.pole_exclusion))
      throw Error(ErrorKind::BoxContainsPole, "search box contains a pole at Im t = " +
                                                  std::to_string(p.imag()));

  const double dedup = 1e-8 * model.time_unit;
  const double width = box.re_max - box.re_min, height = box.im_max - box.im_min;
  const double escape = 0.5 * std::max(width, height);

  auto residual_at = [&](Complex z) {
    const Complex w = model.omega(z).value, d = model.delta(z).value;
    const double scale = std::norm(w) + std::norm(d);
    return scale > 0 ? std::abs(w * w + d * d) / scale : 0.0;
  };

  // Newton with step = f / f'. Stalling near a multiple zero still counts when
  // the normalized residual has become negligible.
  auto newton = [&](Complex z, auto&& step_of) -> std::optional<Complex> {
    try {
      for (int it = 0; it < 80; ++it) {
        model.check_poles(z);
        if (model.eps_squared(z) == 0.0) return z;
        const Complex step = step_of(z);
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return std::nullopt;
        z -= step;
        if (!box.contains(z, escape)) return std::nullopt;
        if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(z))) return z;
      }
      model.check_poles(z);
      if (residual_at(z) <= 1e-14) return z;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::PoleProximity) throw;
    }
    return std::nullopt;
  };
  auto plain = [&](Complex z) { return model.eps_squared(z) / model.eps_squared_derivative(z); };
  // eps^2 / (Omega Delta) = r + 1/r with r = Omega / Delta: same zeros, but no
  // exponentially small factor when one envelope dominates the other.
  auto balanced = [&](Complex z) {
    const auto w = model.omega(z), d = model.delta(z);
    const Complex g = w.value * w.value + d.value * d.value;
    const Complex dg = 2.0 * (w.value * w.derivative + d.value * d.derivative);
    const Complex wd = w.value * d.value;
    const Complex dwd = w.derivative * d.value + w.value * d.derivative;
    return g * wd / (dg * wd - g * dwd);
  };

  ZeroSearch out;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.ny; ++j) {
      ++out.seeds;
      const Complex seed(box.re_min + width * (i + 0.5) / grid.nx,
                         box.im_min + height * (j + 0.5) / grid.ny);
      auto found = newton(seed, plain);
      if (!found || residual_at(*found) > 1e-10) found = newton(seed, balanced);
      if (!found || !(residual_at(*found) <= 1e-10)) {
        ++out.failed_seeds;
        continue;
      }
      const Complex z = *found;
      const double residual = residual_at(z);
      if (!box.contains(z) || z.imag() <= 0) continue;
      const bool duplicate = std::any_of(out.points.begin(), out.points.end(), [&](const auto& p) {
        return std::abs(p.t0 - z) <= dedup;
      });
      if (!duplicate) {
        TransitionPoint tp;
        tp.t0 = z;
        tp.newton_residual = residual;
        out.points.push_back(tp);
      }
    }
  }
  // A multiple zero is only located to about sqrt(machine epsilon); seeds then
  // stall at scattered points around it. Merge such clusters into their centroid.
  const double cluster = 1e-6 * model.time_unit;
  std::vector<TransitionPoint> merged;
  for (const auto& p : out.points) {
    auto near = std::find_if(merged.begin(), merged.end(),
                             [&](const auto& q) { return std::abs(q.t0 - p.t0) <= cluster; });
    if (near == merged.end()) {
      merged.push_back(p);
    } else {
      near->t0 = 0.5 * (near->t0 + p.t0);
      near->newton_residual = residual_at(near->t0);
    }
  }
  out.points = std::move(merged);
  std::sort(out.points.begin(), out.points.end(),
            [](const auto& a, const auto& b) { return a.t0.imag() < b.t0.imag(); });

  std::vector<Complex> zeros;
  for (const auto& p : out.points) zeros.push_back(p.t0);
  for (auto& p : out.points)
    p.multiplicity = zero_multiplicity(model, p.t0, detail::auto_radius(model, p.t0, zeros));
  return out;
}

/// Straight: 0 -> t0. AxisThenVertical: along the real axis to Re t0, then up.
/// RightDetour: along the real axis to Re t0 + offset, up to Im t0, then left
/// to t0; passes zeros that sit below t0 on their right.
enum class ContourKind { Straight, AxisThenVertical, RightDetour };

namespace detail {

// 15-point Kronrod nodes on [-1, 1] (ascending) with Kronrod and embedded
// 7-point Gauss weights (zero on the Kronrod-only nodes).
struct Kronrod15 {
  static constexpr double x[15] = {
      -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
      -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
      -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
      -0.207784955007898467600689403773245, 0.0,
      0.207784955007898467600689403773245,  0.405845151377397166906606412076961,
      0.586087235467691130294144845693013,  0.741531185599394439863864773280788,
      0.864864423359769072789712788640926,  0.949107912342758524526189684047851,
      0.991455371120812639206854697526329};
  static constexpr double wk[15] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
      0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
      0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
      0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
      0.022935322010529224963732008058970};
  static constexpr double wg[15] = {
      0.0, 0.129484966168869693270611432679082, 0.0, 0.279705391489276667901467771423780,
      0.0, 0.381830050505118944950369775488975, 0.0, 0.417959183673469387755102040816327,
      0.0, 0.381830050505118944950369775488975, 0.0, 0.279705391489276667901467771423780,
      0.0, 0.129484966168869693270611432679082, 0.0};
};

// One contour piece z(u), u in [0, 1]. Pieces ending at the transition point
// use z = a + (b - a)(1 - (1 - u)^2) so that eps(z(u)) z'(u) stays smooth
// across the square-root zero.
struct ContourPiece {
  Complex a, b;
  bool ends_at_zero;

  Complex point(double u) const {
    return ends_at_zero ? a + (b - a) * (1.0 - (1.0 - u) * (1.0 - u)) : a + (b - a) * u;
  }
  Complex tangent(double u) const { return ends_at_zero ? 2.0 * (b - a) * (1.0 - u) : b - a; }
};

// Integrates eps along the pieces in order, propagating the sign of the square
// root by continuity from the previous node.
class BranchTrackingIntegrator {
 public:
  BranchTrackingIntegrator(const TwoStateModel& model, double rel_tol)
      : model_(model), rel_tol_(rel_tol) {}

  Complex run(const std::vector<ContourPiece>& pieces, Complex start_eps) {
    Complex current = start_eps;
    Complex total = 0.0;
    // Rough magnitude for the absolute floor of the error test.
    scale_ = 0.0;
    for (const auto& p : pieces) scale_ += std::abs(p.b - p.a) * std::abs(start_eps);
    scale_ = std::max(scale_, 1e-300);
    for (const auto& p : pieces) total += segment(p, 0.0, 1.0, current, 0);
    return total;
  }

 private:
  Complex tracked(Complex z, Complex reference) const {
    model_.check_poles(z);
    const Complex root = std::sqrt(model_.eps_squared(z));
    return std::abs(root - reference) <= std::abs(root + reference) ? root : -root;
  }

  // On success advances `reference` to eps at u1.
  Complex segment(const ContourPiece& piece, double u0, double u1, Complex& reference, int depth) {
    using K = Kronrod15;
    const double mid = 0.5 * (u0 + u1), half = 0.5 * (u1 - u0);
    Complex prev = reference;
    if (++evaluations_ > max_segments)
      throw Error(ErrorKind::ContourBlocked, "contour integral did not converge (zero on the path?)");
    Complex kronrod = 0.0, gauss = 0.0;
    bool jump = false, resolved = false;
    double noise = 0.0, closest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 15; ++i) {
      const double u = mid + half * K::x[i];
      const Complex z = piece.point(u);
      const Complex e = tracked(z, prev);
      const double terms = std::norm(model_.omega(z).value) + std::norm(model_.delta(z).value);
      if (std::abs(e) > unresolved * std::sqrt(terms)) resolved = true;
      closest = std::min(closest, std::abs(e) / std::sqrt(terms));
      // rounding in eps^2 = Omega^2 + Delta^2, carried through the square root
      noise += K::wk[i] * std::abs(piece.tangent(u)) *
               std::min(eps_rounding * terms / (2.0 * std::abs(e)), std::sqrt(eps_rounding * terms));
      if (std::abs(prev) > 0 && std::abs(e) > 0 && std::abs(std::arg(e / prev)) > std::numbers::pi / 2)
        jump = true;
      prev = e;
      const Complex f = e * piece.tangent(u);
      kronrod += K::wk[i] * f;
      gauss += K::wg[i] * f;
    }
    kronrod *= half;
    gauss *= half;
    const double err = std::abs(kronrod - gauss);
    const double allowed = std::max({rel_tol_ * std::abs(kronrod), 1e-15 * scale_ * (u1 - u0),
                                     100.0 * half * noise});
    // Right next to a (multiple) zero eps^2 drowns in rounding and the sign of
    // the root is noise; such a stretch contributes nothing measurable.
    const bool terminal = piece.ends_at_zero && u1 >= 1.0;
    if (!resolved && terminal) {
      reference = prev;
      return kronrod;
    }
    if (!terminal && closest < on_path)
      throw Error(ErrorKind::ContourBlocked, "contour passes through a zero of eps^2");
    if ((jump || err > allowed) && depth < 60) {
      Complex left = segment(piece, u0, mid, reference, depth + 1);
      Complex right = segment(piece, mid, u1, reference, depth + 1);
      return left + right;
    }
    if (jump) throw Error(ErrorKind::ContourBlocked, "branch tracking failed along the contour");
    reference = (u1 >= 1.0 && piece.ends_at_zero) ? prev : tracked(piece.point(u1), prev);
    return kronrod;
  }

  static constexpr long max_segments = 200'000;
  static constexpr double unresolved = 1e-6;
  static constexpr double on_path = 1e-4;  // |eps| / sqrt(|Omega|^2 + |Delta|^2) away from the end
  static constexpr double eps_rounding = 4 * std::numeric_limits<double>::epsilon();  // |eps| relative to sqrt(|Omega|^2 + |Delta|^2)

  const TwoStateModel& model_;
  double rel_tol_;
  double scale_ = 1.0;
  long evaluations_ = 0;
};

inline std::vector<ContourPiece> contour_pieces(Complex t0, ContourKind kind, double offset = 0.0) {
  if (kind == ContourKind::Straight) return {{0.0, t0, true}};
  if (kind == ContourKind::AxisThenVertical)
    return {{0.0, Complex(t0.real(), 0.0), false}, {Complex(t0.real(), 0.0), t0, true}};
  const double x = t0.real() + offset;
  return {{0.0, Complex(x, 0.0), false},
          {Complex(x, 0.0), Complex(x, t0.imag()), false},
          {Complex(x, t0.imag()), t0, true}};
}

inline double segment_distance(Complex p, Complex a, Complex b) {
  const Complex ab = b - a;
  const double len2 = std::norm(ab);
  double s = len2 > 0 ? ((p - a) * std::conj(ab)).real() / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return std::abs(p - (a + s * ab));
}

inline bool contour_clear(const TwoStateModel& model, const std::vector<ContourPiece>& pieces,
                          const std::vector<Complex>& avoid, double radius) {
  for (const auto& piece : pieces) {
    for (Complex p : model.poles)
      for (Complex q : {p, std::conj(p)})
        if (segment_distance(q, piece.a, piece.b) < std::max(radius, model.pole_exclusion))
          return false;
    for (Complex z : avoid)
      if (std::abs(z - piece.b) > 0 && segment_distance(z, piece.a, piece.b) < radius) return false;
  }
  return true;
}

}  // namespace detail

/// D(t0) = integral of eps from 0 to t0 along the requested contour, with the
/// square-root branch fixed by eps(0) > 0 and followed continuously.
inline Complex d_integral(const TwoStateModel& model, Complex t0,
                          ContourKind kind = ContourKind::Straight, double rel_tol = 1e-13,
                          double offset = 0.0) {
  const Complex start = model.eps_squared(0.0);
  if (!(start.real() > 0) || std::abs(start.imag()) > 1e-12 * std::abs(start))
    throw Error(ErrorKind::RealAxisZero, "eps^2(0) must be real and positive");
  detail::BranchTrackingIntegrator integrator(model, rel_tol);
  try {
    return integrator.run(detail::contour_pieces(t0, kind, offset), std::sqrt(start.real()));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::PoleProximity)
      throw Error(ErrorKind::ContourBlocked, "contour passes through a pole exclusion disc");
    throw;
  }
}

/// D(t0) along the straight line, rerouted along the real axis and a vertical
/// leg, or around the right of blocking zeros, when the simpler contours come
/// close to a pole or another zero.
inline Complex d_integral_rerouted(const TwoStateModel& model, Complex t0,
                                   const std::vector<Complex>& other_zeros) {
  const double radius = 0.05 * model.time_unit;
  for (ContourKind kind : {ContourKind::Straight, ContourKind::AxisThenVertical}) {
    if (detail::contour_clear(model, detail::contour_pieces(t0, kind), other_zeros, radius))
      return d_integral(model, t0, kind);
  }
  for (double offset : {0.25, 0.5, 1.0, 2.0}) {
    const double d = offset * model.time_unit;
    if (detail::contour_clear(model, detail::contour_pieces(t0, ContourKind::RightDetour, d),
                              other_zeros, radius))
      return d_integral(model, t0, ContourKind::RightDetour, 1e-13, d);
  }
  throw Error(ErrorKind::ContourBlocked, "no clear contour from the real axis to the zero");
}

/// Gamma_k = 4 i lim (t - t_k) theta'(t), evaluated as a circle residue.
inline Complex residue_factor(const TwoStateModel& model, Complex t0, double radius = 0.0,
                              const std::vector<Complex>& other_zeros = {}) {
  if (radius <= 0) radius = detail::auto_radius(model, t0, other_zeros);
  const int m = zero_multiplicity(model, t0, radius);
  if (m != 1)
    throw Error(ErrorKind::HigherOrderZero, "zero of multiplicity " + std::to_string(m));
  const Complex res = detail::circle_residue([&](Complex z) { return model.mixing_rate(z); }, t0,
                                             radius);
  return Complex(0.0, 4.0) * res;
}

enum class EstimateMode { SingleDominant, MultiPoint, NoPointsFound };

constexpr std::string_view to_string(EstimateMode m) {
  switch (m) {
    case EstimateMode::SingleDominant: return "single-dominant";
    case EstimateMode::MultiPoint: return "multi-point";
    case EstimateMode::NoPointsFound: return "no-points-found";
  }
  return "unknown";
}

struct DdpEstimate {
  double probability = 0.0;
  double single_dominant = 0.0;  // exp(-2 Im D) of the smallest Im D
  double multi_point = 0.0;      // |sum Gamma_k exp(i D_k)|^2, clamped
  bool clamped = false;
  bool higher_order_fallback = false;
  EstimateMode mode = EstimateMode::NoPointsFound;
  std::vector<TransitionPoint> points;
  SearchBox box;
  SearchGrid grid;
  int failed_seeds = 0;
  std::vector<std::string> notes;
};

/// Rejects models whose splitting vanishes on the real segment of the box.
/// Interior local minima of |eps^2| on a sample grid are refined with Brent's
/// method; decaying tails at the segment ends are not zeros.
inline void check_real_axis(const TwoStateModel& model, double re_min, double re_max,
                            int samples = 2001) {
  std::vector<double> values(samples);
  const double h = (re_max - re_min) / (samples - 1);
  auto value = [&](double t) { return std::abs(model.eps_squared(t)); };
  double peak = 0.0;
  for (int i = 0; i < samples; ++i) {
    values[i] = value(re_min + h * i);
    peak = std::max(peak, values[i]);
  }
  for (int i = 1; i + 1 < samples; ++i) {
    if (!(values[i] < values[i - 1] && values[i] <= values[i + 1])) continue;
    const double t0 = re_min + h * i;
    const auto [t, v] = boost::math::tools::brent_find_minima(value, t0 - h, t0 + h,
                                                              std::numeric_limits<double>::digits);
    if (!(v > 1e-12 * peak))
      throw Error(ErrorKind::RealAxisZero,
                  "splitting vanishes on the real axis near t = " + std::to_string(t));
  }
}

inline DdpEstimate estimate(const TwoStateModel& model, const SearchBox& box,
                            SearchGrid grid = {}) {
  check_real_axis(model, box.re_min, box.re_max);
  DdpEstimate out;
  out.box = box;
  out.grid = grid;
  out.notes.push_back("asymptotic estimate; analyticity, isolation and adiabatic-limit conditions are not checked");

  auto search = find_transition_points(model, box, grid);
  out.failed_seeds = search.failed_seeds;
  out.points = std::move(search.points);
  if (out.points.empty()) {
    out.mode = EstimateMode::NoPointsFound;
    out.probability = 0.0;
    out.notes.push_back("no transition points in the searched box");
    return out;
  }

  std::vector<Complex> zeros;
  for (const auto& p : out.points) zeros.push_back(p.t0);
  Complex coherent = 0.0;
  double min_im_d = std::numeric_limits<double>::infinity();
  for (auto& p : out.points) {
    p.d_value = d_integral_rerouted(model, p.t0, zeros);
    if (p.d_value.imag() < 0) {
      // Only happens past even-order zeros, around which eps is single-valued
      // and the sign of the root is a convention.
      p.d_value = -p.d_value;
      out.notes.push_back("sign of D flipped so that Im D > 0");
    }
    min_im_d = std::min(min_im_d, p.d_value.imag());
    try {
      p.gamma_k = residue_factor(model, p.t0, 0.0, zeros);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::HigherOrderZero) throw;
      out.higher_order_fallback = true;
      out.notes.push_back("higher-order zero; falling back to the single-dominant formula");
    }
    coherent += p.gamma_k * std::exp(Complex(0.0, 1.0) * p.d_value);
  }
  out.single_dominant = std::exp(-2.0 * min_im_d);
  if (out.single_dominant > 1.0) {
    out.single_dominant = 1.0;
    out.clamped = true;
  }
  double multi = std::norm(coherent);
  if (multi > 1.0 || multi < 0.0) {
    multi = std::clamp(multi, 0.0, 1.0);
    out.clamped = true;
    out.notes.push_back("multi-point probability clamped to [0, 1]");
  }
  out.multi_point = multi;

  if (out.points.size() == 1 || out.higher_order_fallback) {
    out.mode = EstimateMode::SingleDominant;
    out.probability = out.single_dominant;
  } else {
    out.mode = EstimateMode::MultiPoint;
    out.probability = out.multi_point;
  }
  return out;
}

}  // namespace stirap
