#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "stirap/error.hpp"
#include "stirap/hamiltonian.hpp"
#include "stirap/propagator.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

/// 1 - P3 at the end of a run started in psi1.
inline double transfer_infidelity(const PropagationResult<3>& result) {
  return 1.0 - std::norm(result.final.c(2));
}

/// 1 - |<psi1 cos(a) - psi3 sin(a) | final>|^2
inline double superposition_infidelity(const PropagationResult<3>& result, double alpha) {
  const auto& c = result.final.c;
  return 1.0 - std::norm(std::cos(alpha) * c(0) - std::sin(alpha) * c(2));
}

enum class SweptParameter { PeakRabi, SinglePhotonDetuning, TwoPhotonDetuning, MaskWidth };

constexpr std::string_view column_name(SweptParameter p) {
  switch (p) {
    case SweptParameter::PeakRabi: return "omega0";
    case SweptParameter::SinglePhotonDetuning: return "delta";
    case SweptParameter::TwoPhotonDetuning: return "delta2";
    case SweptParameter::MaskWidth: return "t0";
  }
  return "value";
}

struct SweepTarget {
  enum class Kind { FullTransfer, Superposition } kind = Kind::FullTransfer;
  double alpha = std::numbers::pi / 2;

  static SweepTarget full_transfer() { return {}; }
  static SweepTarget superposition(double alpha) { return {Kind::Superposition, alpha}; }
};

struct SweepSpec {
  SweptParameter swept = SweptParameter::PeakRabi;
  std::vector<double> grid;
  PulseDescriptor base_descriptor{DdpOptimized{}};
  SystemParams base_params{};
  SweepTarget target{};

  void validate() const {
    if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "sweep grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1]))
        throw Error(ErrorKind::InvalidArgument, "sweep grid must be strictly increasing");
    if ((swept == SweptParameter::PeakRabi || swept == SweptParameter::MaskWidth) &&
        !(grid.front() > 0))
      throw Error(ErrorKind::InvalidArgument, "peak Rabi frequency and mask width must be positive");
    if (base_descriptor.is_two_state())
      throw Error(ErrorKind::InvalidArgument, "sweeps run three-state pulse families");
    base_params.validate();
  }
};

struct SweepRecord {
  double value = 0;
  double p1 = 0, p2 = 0, p3 = 0;
  double infidelity = 0;
  double norm_loss = 0;
  double norm_drift = 0;
  std::string status = "ok";
};

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "linspace needs at least one point");
  if (n == 1) return {a};
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  v.back() = b;
  return v;
}

/// One sweep point; failures are recorded in the row rather than thrown.
inline SweepRecord run_point(const SweepSpec& spec, double value, const IntegratorConfig& cfg) {
  SweepRecord rec;
  rec.value = value;
  try {
    PulseDescriptor desc = spec.base_descriptor;
    SystemParams params = spec.base_params;
    switch (spec.swept) {
      case SweptParameter::PeakRabi: desc = with_peak(desc, value); break;
      case SweptParameter::MaskWidth: desc = with_mask_width(desc, value); break;
      case SweptParameter::SinglePhotonDetuning: params.delta = value; break;
      case SweptParameter::TwoPhotonDetuning: params.delta2 = value; break;
    }
    const auto result = propagate<3>(desc, params, basis_state<3>(params.window.start, 0), cfg);
    const auto p = result.final.populations();
    rec.p1 = p(0), rec.p2 = p(1), rec.p3 = p(2);
    rec.norm_loss = 1.0 - p.sum();
    rec.norm_drift = result.norm_drift;
    rec.infidelity = spec.target.kind == SweepTarget::Kind::FullTransfer
                         ? transfer_infidelity(result)
                         : superposition_infidelity(result, spec.target.alpha);
  } catch (const Error& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.p1 = rec.p2 = rec.p3 = rec.infidelity = rec.norm_loss = nan;
    rec.status = std::string(to_string(e.kind()));
  }
  return rec;
}

/// Runs every grid point, up to `workers` at a time; output follows grid order
/// and does not depend on the worker count.
inline std::vector<SweepRecord> run_sweep(const SweepSpec& spec, const IntegratorConfig& cfg,
                                          unsigned workers = 0) {
  spec.validate();
  cfg.validate();
  std::vector<SweepRecord> records(spec.grid.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(spec.grid.size()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < spec.grid.size(); i = next++)
      records[i] = run_point(spec, spec.grid[i], cfg);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return records;
}

/// Scientific notation with 17 significant digits (round-trips doubles).
inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

inline void write_sweep_csv(std::ostream& os, std::string_view parameter,
                            const std::vector<SweepRecord>& records) {
  os << parameter << ",p1,p2,p3,infidelity,norm_loss,status\n";
  for (const auto& r : records) {
    os << format_number(r.value) << ',' << format_number(r.p1) << ',' << format_number(r.p2) << ','
       << format_number(r.p3) << ',' << format_number(r.infidelity) << ','
       << format_number(r.norm_loss) << ',' << r.status << '\n';
  }
}

/// Width of the contiguous run of grid points around `center` whose infidelity
/// is at or below `threshold`; zero when the point nearest `center` fails.
inline double high_fidelity_width(const std::vector<SweepRecord>& records, double threshold,
                                  double center = 0.0) {
  if (records.empty()) return 0.0;
  std::size_t c = 0;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (std::abs(records[i].value - center) < std::abs(records[c].value - center)) c = i;
  auto ok = [&](std::size_t i) {
    return records[i].status == "ok" && records[i].infidelity <= threshold;
  };
  if (!ok(c)) return 0.0;
  std::size_t lo = c, hi = c;
  while (lo > 0 && ok(lo - 1)) --lo;
  while (hi + 1 < records.size() && ok(hi + 1)) ++hi;
  return records[hi].value - records[lo].value;
}

/// Grid value with the smallest infidelity among successful rows.
inline double argmin_infidelity(const std::vector<SweepRecord>& records) {
  double best = std::numeric_limits<double>::infinity(), at = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : records)
    if (r.status == "ok" && r.infidelity < best) best = r.infidelity, at = r.value;
  return at;
}

struct BreakdownReport {
  std::vector<double> area;        // rms pulse area per grid point
  std::vector<double> infidelity;  // per grid point
  double breakdown_area = 0;       // A_b
  double breakdown_peak = 0;       // omega0 at A_b
  std::size_t breakdown_index = 0;
  double area_ratio = 0;           // R = A / A_o (independent of omega0)
  bool monotone_before = true;     // log-infidelity non-increasing (10% slack) before A_b
};

inline constexpr double infidelity_floor = 1e-18;

/// Locates the area where the exponential decline of the infidelity turns into
/// oscillation: the first 3-point local minimum of log10(infidelity) vs area.
inline BreakdownReport locate_breakdown(std::vector<double> area, std::vector<double> infidelity) {
  if (area.size() != infidelity.size() || area.size() < 3)
    throw Error(ErrorKind::InvalidArgument, "breakdown scan needs at least three points");
  BreakdownReport rep;
  rep.area = std::move(area);
  rep.infidelity = std::move(infidelity);
  std::vector<double> log_inf(rep.area.size());
  for (std::size_t i = 0; i < log_inf.size(); ++i)
    log_inf[i] = std::log10(std::max(rep.infidelity[i], infidelity_floor));
  for (std::size_t i = 1; i + 1 < log_inf.size(); ++i) {
    if (log_inf[i] < log_inf[i - 1] && log_inf[i] < log_inf[i + 1]) {
      rep.breakdown_index = i;
      rep.breakdown_area = rep.area[i];
      for (std::size_t k = 0; k < i; ++k)
        if (log_inf[k + 1] - log_inf[k] > 0.1 * std::abs(log_inf[k])) rep.monotone_before = false;
      return rep;
    }
  }
  throw Error(ErrorKind::NoBreakdownDetected, "no local minimum of the infidelity in the area grid");
}

/// Sweeps the peak Rabi frequency of a three-state family, converts it to rms
/// pulse area and locates the breakdown area.
inline BreakdownReport breakdown_scan(const PulseDescriptor& base, const SystemParams& params,
                                      const std::vector<double>& peak_grid,
                                      const IntegratorConfig& cfg, unsigned workers = 0) {
  const auto unit = areas(with_peak(base, 1.0), params.window);
  SweepSpec spec;
  spec.swept = SweptParameter::PeakRabi;
  spec.grid = peak_grid;
  spec.base_descriptor = base;
  spec.base_params = params;
  const auto records = run_sweep(spec, cfg, workers);
  std::vector<double> area, infid;
  for (const auto& r : records) {
    if (r.status != "ok") continue;
    area.push_back(r.value * unit.rms);
    infid.push_back(r.infidelity);
  }
  auto rep = locate_breakdown(std::move(area), std::move(infid));
  rep.breakdown_peak = rep.breakdown_area / unit.rms;
  rep.area_ratio = unit.ratio;
  return rep;
}

struct LandauZenerRun {
  double adiabatic = 0;  // population left in the other adiabatic state
  double diabatic = 0;   // population remaining in the initial diabatic state
  double norm_drift = 0;
  long steps = 0;
};

/// Propagates the Landau-Zener model over [-half_width, half_width]. The
/// adiabatic figure starts in the upper adiabatic state and projects on the
/// lower one at the end, which removes the O(omega0 / (rate t)) ripple that the
/// diabatic populations carry at a finite window edge.
inline LandauZenerRun landau_zener_run(double omega0, double rate, double half_width,
                                       const IntegratorConfig& cfg) {
  const PulseDescriptor desc(LandauZener{omega0, rate});
  const TimeWindow w{-half_width, half_width};
  auto ham = [&desc](double t) { return build_two_state(desc, t).entries; };
  const auto first = eigensystem(build_two_state(desc, w.start));
  const auto last = eigensystem(build_two_state(desc, w.end));
  const CVector<2> upper = first.vectors.col(1);
  const auto adiabatic = propagate_hamiltonian<2>(ham, w, upper, cfg);

  SystemParams params;
  params.window = w;
  const auto diabatic = propagate<2>(desc, params, basis_state<2>(w.start, 0), cfg);

  LandauZenerRun run;
  run.adiabatic = std::norm(last.vectors.col(0).dot(adiabatic.final.c));
  run.diabatic = std::norm(diabatic.final.c(0));
  run.norm_drift = std::max(adiabatic.norm_drift, diabatic.norm_drift);
  run.steps = adiabatic.steps_taken + diabatic.steps_taken;
  return run;
}

/// Probability error from dropping counter-rotating terms: (T Omega^2 / omega)^2.
inline double rwa_error_estimate(double carrier, double rabi, double duration) {
  if (!(carrier > 0) || !(duration > 0) || !(rabi >= 0))
    throw Error(ErrorKind::InvalidArgument, "carrier and duration must be positive");
  const double shift = duration * rabi * rabi / carrier;
  return shift * shift;
}

/// gnuplot script plotting a sweep CSV on a log infidelity axis.
inline std::string gnuplot_script(std::string_view csv_path, std::string_view parameter) {
  std::string s;
  s += "set datafile separator ','\n";
  s += "set logscale y\n";
  s += "set xlabel '" + std::string(parameter) + "'\n";
  s += "set ylabel 'infidelity'\n";
  s += "plot '" + std::string(csv_path) + "' using 1:5 skip 1 with lines title 'infidelity'\n";
  return s;
}

}  // namespace stirap
