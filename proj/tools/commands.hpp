#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "stirap/stirap.hpp"

namespace stirap::cli {

enum class Verb { Shapes, Simulate, Sweep, DdpAnalyze, Validate };

inline std::string verb_name(Verb v) {
  switch (v) {
    case Verb::Shapes: return "shapes";
    case Verb::Simulate: return "simulate";
    case Verb::Sweep: return "sweep";
    case Verb::DdpAnalyze: return "ddp-analyze";
    case Verb::Validate: return "validate";
  }
  return "?";
}

inline std::optional<Verb> parse_verb(const std::string& s) {
  for (Verb v : {Verb::Shapes, Verb::Simulate, Verb::Sweep, Verb::DdpAnalyze, Verb::Validate})
    if (verb_name(v) == s) return v;
  return std::nullopt;
}

// Exit statuses.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;       // bad command line or unparsable config
inline constexpr int exit_validation = 3;  // config parsed but violates a constraint
inline constexpr int exit_io = 4;          // output could not be written
inline constexpr int exit_numeric = 5;     // domain or numerical failure during the run
inline constexpr int exit_checks = 6;      // validate verb: at least one check failed

inline int exit_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::ParseError: return exit_usage;
    case ErrorKind::ValidationError:
    case ErrorKind::InvalidArgument: return exit_validation;
    case ErrorKind::IoError: return exit_io;
    default: return exit_numeric;
  }
}

struct SweepConfig {
  std::string param = "omega0";  // omega0 | delta | delta2 | t0
  double start = 1;
  double stop = 40;
  int points = 200;
  std::string target = "transfer";  // transfer | superposition
  double target_alpha = std::numbers::pi / 4;

  bool operator==(const SweepConfig&) const = default;
};

struct DdpConfig {
  std::string model = "auto";  // auto | two-state | resonant | eliminated
  bool custom_box = false;
  SearchBox box{};
  int grid_nx = 16, grid_ny = 16;

  bool operator==(const DdpConfig& o) const {
    return model == o.model && custom_box == o.custom_box && box.re_min == o.box.re_min &&
           box.re_max == o.box.re_max && box.im_min == o.box.im_min &&
           box.im_max == o.box.im_max && grid_nx == o.grid_nx && grid_ny == o.grid_ny;
  }
};

struct RunConfig {
  Verb verb = Verb::Simulate;
  PulseConfig pulse{};
  SystemParams system{};
  IntegratorConfig integrator{};
  int samples = 201;
  std::optional<SweepConfig> sweep;
  DdpConfig ddp{};
  bool reduction_check = false;
  bool plot_script = false;
  std::string output = "stirap_out.csv";
  unsigned workers = 1;

  /// "key = value" for every default filled in by parse_config (not compared).
  std::vector<std::string> defaults_applied;

  bool operator==(const RunConfig& o) const {
    return verb == o.verb && pulse == o.pulse && system == o.system &&
           integrator == o.integrator && samples == o.samples && sweep == o.sweep &&
           ddp == o.ddp && reduction_check == o.reduction_check &&
           plot_script == o.plot_script && output == o.output && workers == o.workers;
  }
};

namespace detail {

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "verb",       "family",      "omega0",       "tau",          "T",
      "n",          "lambda",      "t0",           "alpha",        "eps0",
      "rate",       "mask",        "delta",        "delta2",       "gamma",
      "t_start",    "t_end",       "rel_tol",      "abs_tol",      "max_step",
      "initial_step", "samples",   "sweep_param",  "sweep_start",  "sweep_stop",
      "sweep_points", "target",    "target_alpha", "model",        "box_re_min",
      "box_re_max", "box_im_min",  "box_im_max",   "grid_nx",      "grid_ny",
      "reduction_check", "plot_script", "output",  "workers"};
  return keys;
}

inline int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

[[noreturn]] inline void bad_value(const std::string& key, const YAML::Node& n,
                                   const std::string& expected) {
  throw Error(ErrorKind::ParseError, "line " + std::to_string(line_of(n)) + ", key '" + key +
                                         "': expected " + expected);
}

// Accepts plain numbers and multiples of pi ("pi", "pi/4", "0.5*pi", "3*pi/8").
inline std::optional<double> parse_real(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != ' ') s += c;
  if (s.empty()) return std::nullopt;
  auto number = [](const std::string& t) -> std::optional<double> {
    if (t.empty()) return std::nullopt;
    std::size_t used = 0;
    try {
      const double v = std::stod(t, &used);
      if (used != t.size()) return std::nullopt;
      return v;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  };
  const auto at = s.find("pi");
  if (at == std::string::npos) return number(s);
  double value = std::numbers::pi;
  const std::string head = s.substr(0, at), tail = s.substr(at + 2);
  if (head == "-") {
    value = -value;
  } else if (!head.empty()) {
    if (head.back() != '*') return std::nullopt;
    const auto f = number(head.substr(0, head.size() - 1));
    if (!f) return std::nullopt;
    value *= *f;
  }
  if (!tail.empty()) {
    if (tail.front() != '/') return std::nullopt;
    const auto d = number(tail.substr(1));
    if (!d || *d == 0) return std::nullopt;
    value /= *d;
  }
  return value;
}

}  // namespace detail

/// Parses a flat YAML mapping into a validated RunConfig. `verb_override`
/// replaces (or supplies) the verb key.
inline RunConfig parse_config(const std::string& text, std::optional<Verb> verb_override = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw Error(ErrorKind::ParseError, "config must be a key: value mapping");

  std::map<std::string, YAML::Node> given;
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!detail::known_keys().count(key))
      throw Error(ErrorKind::ValidationError, "unknown key '" + key + "' (line " +
                                                  std::to_string(detail::line_of(kv.first)) + ")");
    if (!kv.second.IsScalar()) detail::bad_value(key, kv.second, "a scalar value");
    given[key] = kv.second;
  }

  RunConfig c;
  auto has = [&](const std::string& k) { return given.count(k) > 0; };
  auto note = [&](const std::string& k, const std::string& v) {
    c.defaults_applied.push_back(k + " = " + v);
  };
  auto real = [&](const std::string& k, double& out) {
    if (!has(k)) {
      note(k, detail::fmt(out));
      return;
    }
    const auto v = detail::parse_real(given[k].Scalar());
    if (!v || !std::isfinite(*v)) detail::bad_value(k, given[k], "a finite number");
    out = *v;
  };
  auto integer = [&](const std::string& k, auto& out) {
    if (!has(k)) {
      note(k, std::to_string(out));
      return;
    }
    long v = 0;
    try {
      v = given[k].as<long>();
    } catch (const YAML::Exception&) {
      detail::bad_value(k, given[k], "an integer");
    }
    out = static_cast<std::remove_reference_t<decltype(out)>>(v);
    if (static_cast<long>(out) != v) detail::bad_value(k, given[k], "an integer in range");
  };
  auto text_key = [&](const std::string& k, std::string& out) {
    if (!has(k)) {
      note(k, out);
      return;
    }
    out = given[k].Scalar();
  };
  auto flag = [&](const std::string& k, bool& out) {
    if (!has(k)) {
      note(k, out ? "true" : "false");
      return;
    }
    try {
      out = given[k].as<bool>();
    } catch (const YAML::Exception&) {
      detail::bad_value(k, given[k], "true or false");
    }
  };

  if (verb_override) {
    c.verb = *verb_override;
  } else if (has("verb")) {
    const auto v = parse_verb(given["verb"].Scalar());
    if (!v)
      throw Error(ErrorKind::ValidationError, "unknown verb '" + given["verb"].Scalar() + "'");
    c.verb = *v;
  } else {
    note("verb", verb_name(c.verb));
  }

  auto& p = c.pulse;
  text_key("family", p.family);
  real("omega0", p.omega0);
  real("tau", p.tau);
  real("T", p.T);
  integer("n", p.n);
  real("lambda", p.lambda);
  real("t0", p.t0);
  real("alpha", p.alpha);
  real("eps0", p.eps0);
  real("rate", p.rate);
  text_key("mask", p.mask);

  auto& s = c.system;
  real("delta", s.delta);
  real("delta2", s.delta2);
  real("gamma", s.gamma);
  s.T = p.T;
  const bool two_state = p.family == "landau-zener" || p.family == "constant-eps";
  s.window = {-10.0 * p.T, 10.0 * p.T};
  if (two_state && c.verb != Verb::Validate && (!has("t_start") || !has("t_end")))
    throw Error(ErrorKind::ValidationError,
                "family '" + p.family + "' does not vanish at large |t|; set t_start and t_end");
  real("t_start", s.window.start);
  real("t_end", s.window.end);

  auto& g = c.integrator;
  real("rel_tol", g.rel_tol);
  real("abs_tol", g.abs_tol);
  real("max_step", g.max_step);
  real("initial_step", g.initial_step);
  integer("samples", c.samples);

  const bool sweep_keys = has("sweep_param") || has("sweep_start") || has("sweep_stop") ||
                          has("sweep_points") || has("target") || has("target_alpha");
  if (c.verb == Verb::Sweep) {
    for (const char* k : {"sweep_param", "sweep_start", "sweep_stop"})
      if (!has(k)) throw Error(ErrorKind::ValidationError, std::string("sweep needs '") + k + "'");
  }
  if (c.verb == Verb::Sweep || sweep_keys) {
    SweepConfig sw;
    sw.target_alpha = p.alpha;
    text_key("sweep_param", sw.param);
    real("sweep_start", sw.start);
    real("sweep_stop", sw.stop);
    integer("sweep_points", sw.points);
    text_key("target", sw.target);
    real("target_alpha", sw.target_alpha);
    c.sweep = sw;
  }

  text_key("model", c.ddp.model);
  c.ddp.custom_box = has("box_re_min") || has("box_re_max") || has("box_im_min") || has("box_im_max");
  if (c.ddp.custom_box) {
    real("box_re_min", c.ddp.box.re_min);
    real("box_re_max", c.ddp.box.re_max);
    real("box_im_min", c.ddp.box.im_min);
    real("box_im_max", c.ddp.box.im_max);
  }
  integer("grid_nx", c.ddp.grid_nx);
  integer("grid_ny", c.ddp.grid_ny);

  flag("reduction_check", c.reduction_check);
  flag("plot_script", c.plot_script);
  text_key("output", c.output);
  if (has("workers")) {
    integer("workers", c.workers);
  } else {
    c.workers = std::max(1u, std::thread::hardware_concurrency());
    note("workers", std::to_string(c.workers));
  }

  // Constraint checks, each naming what it rejects.
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::ValidationError, what);
  };
  const auto& names = pulse_family_names();
  require(std::find(names.begin(), names.end(), p.family) != names.end(),
          "unknown family '" + p.family + "'");
  require(p.mask == "hypergaussian" || p.mask == "constant", "mask must be hypergaussian or constant");
  require(p.T > 0, "T must be positive");
  require(p.n >= 1, "n must be a positive integer");
  require(p.t0 > 0, "t0 must be positive");
  require(s.gamma >= 0, "gamma must be nonnegative");
  require(s.window.start < s.window.end, "t_start must be below t_end");
  require(g.rel_tol > 0 && g.abs_tol > 0, "rel_tol and abs_tol must be positive");
  require(g.max_step >= 0 && g.initial_step >= 0, "step sizes must be nonnegative");
  require(c.samples >= 2, "samples must be at least 2");
  require(c.workers >= 1, "workers must be at least 1");
  require(c.ddp.grid_nx >= 1 && c.ddp.grid_ny >= 1, "grid_nx and grid_ny must be positive");
  require(c.ddp.model == "auto" || c.ddp.model == "two-state" || c.ddp.model == "resonant" ||
              c.ddp.model == "eliminated",
          "model must be auto, two-state, resonant or eliminated");
  if (c.ddp.custom_box)
    require(c.ddp.box.re_min < c.ddp.box.re_max && 0 <= c.ddp.box.im_min &&
                c.ddp.box.im_min < c.ddp.box.im_max,
            "search box must satisfy re_min < re_max and 0 <= im_min < im_max");
  if (c.sweep) {
    const auto& sw = *c.sweep;
    require(sw.param == "omega0" || sw.param == "delta" || sw.param == "delta2" || sw.param == "t0",
            "sweep_param must be omega0, delta, delta2 or t0");
    require(sw.points >= 1, "sweep_points must be positive");
    require(sw.points == 1 ? sw.start == sw.stop : sw.start < sw.stop,
            "sweep_start must be below sweep_stop");
    require(sw.target == "transfer" || sw.target == "superposition",
            "target must be transfer or superposition");
    if (sw.param == "omega0" || sw.param == "t0") require(sw.start > 0, "sweep values must be positive");
  }
  if (c.verb == Verb::Sweep) require(!two_state, "sweeps run three-state families");
  if (c.reduction_check) require(!two_state, "reduction_check needs a three-state family");
  return c;
}

/// Writes every field explicitly; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  using detail::fmt;
  std::ostringstream os;
  os << "verb: " << verb_name(c.verb) << '\n';
  const auto& p = c.pulse;
  os << "family: " << p.family << '\n'
     << "omega0: " << fmt(p.omega0) << '\n'
     << "tau: " << fmt(p.tau) << '\n'
     << "T: " << fmt(p.T) << '\n'
     << "n: " << p.n << '\n'
     << "lambda: " << fmt(p.lambda) << '\n'
     << "t0: " << fmt(p.t0) << '\n'
     << "alpha: " << fmt(p.alpha) << '\n'
     << "eps0: " << fmt(p.eps0) << '\n'
     << "rate: " << fmt(p.rate) << '\n'
     << "mask: " << p.mask << '\n';
  const auto& s = c.system;
  os << "delta: " << fmt(s.delta) << '\n'
     << "delta2: " << fmt(s.delta2) << '\n'
     << "gamma: " << fmt(s.gamma) << '\n'
     << "t_start: " << fmt(s.window.start) << '\n'
     << "t_end: " << fmt(s.window.end) << '\n';
  const auto& g = c.integrator;
  os << "rel_tol: " << fmt(g.rel_tol) << '\n'
     << "abs_tol: " << fmt(g.abs_tol) << '\n'
     << "max_step: " << fmt(g.max_step) << '\n'
     << "initial_step: " << fmt(g.initial_step) << '\n'
     << "samples: " << c.samples << '\n';
  if (c.sweep) {
    const auto& sw = *c.sweep;
    os << "sweep_param: " << sw.param << '\n'
       << "sweep_start: " << fmt(sw.start) << '\n'
       << "sweep_stop: " << fmt(sw.stop) << '\n'
       << "sweep_points: " << sw.points << '\n'
       << "target: " << sw.target << '\n'
       << "target_alpha: " << fmt(sw.target_alpha) << '\n';
  }
  os << "model: " << c.ddp.model << '\n';
  if (c.ddp.custom_box) {
    os << "box_re_min: " << fmt(c.ddp.box.re_min) << '\n'
       << "box_re_max: " << fmt(c.ddp.box.re_max) << '\n'
       << "box_im_min: " << fmt(c.ddp.box.im_min) << '\n'
       << "box_im_max: " << fmt(c.ddp.box.im_max) << '\n';
  }
  os << "grid_nx: " << c.ddp.grid_nx << '\n'
     << "grid_ny: " << c.ddp.grid_ny << '\n'
     << "reduction_check: " << (c.reduction_check ? "true" : "false") << '\n'
     << "plot_script: " << (c.plot_script ? "true" : "false") << '\n'
     << "output: \"" << c.output << "\"\n"
     << "workers: " << c.workers << '\n';
  return os.str();
}

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never see a truncated file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::IoError, "write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot move output into place at " + path.string());
  }
}

/// Plain-text run log, flushed to `<output>.log` at the end of dispatch.
class RunLog {
 public:
  explicit RunLog(bool echo = false) : echo_(echo) {}

  void line(const std::string& s) {
    text_ += s + '\n';
    if (echo_) std::cerr << s << '\n';
  }

  template <class F>
  auto phase(const std::string& name, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3f s", secs);
      line("phase " + name + ": " + buf);
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto r = f();
      finish();
      return r;
    }
  }

  const std::string& text() const { return text_; }

 private:
  bool echo_;
  std::string text_;
};

struct CheckResult {
  std::string name;
  bool pass;
  double value;
  double threshold;
};

/// Built-in oracle checks run by the validate verb.
inline std::vector<CheckResult> run_checks(const IntegratorConfig& base) {
  std::vector<CheckResult> out;
  double worst = 0;
  for (double k : {0.5, 1.0, 2.0, 3.0}) {
    const auto model = landau_zener_model(std::sqrt(k), 1.0);
    const auto est = estimate(model, SearchBox{-5, 5, 0.05, 5});
    worst = std::max(worst, std::abs(std::log(est.probability) + std::numbers::pi * k / 2));
  }
  out.push_back({"landau-zener ddp |ln P - ln P_exact|", worst <= 1e-6, worst, 1e-6});

  const auto lz = landau_zener_run(1.0, 1.0, 200.0, base);
  const double lz_err = std::abs(lz.adiabatic - std::exp(-std::numbers::pi / 2));
  out.push_back({"landau-zener propagation |P - exp(-pi/2)|", lz_err <= 1e-3, lz_err, 1e-3});

  const PulseDescriptor flagship(DdpOptimized{20, Hypergaussian{3, 2}, Sigmoid{4, 1}});
  SystemParams params;
  const auto report = consistency_check(flagship, params, base);
  out.push_back({"resonant reduction max deviation", report.max_deviation <= 1e-8,
                 report.max_deviation, 1e-8});

  const auto run = propagate<3>(flagship, params, basis_state<3>(params.window.start, 0), base);
  out.push_back({"norm drift", run.norm_drift <= 1e-9, run.norm_drift, 1e-9});
  const double infid = transfer_infidelity(run);
  out.push_back({"flagship transfer infidelity", infid < 1e-4, infid, 1e-4});
  return out;
}

namespace detail {

inline std::string amplitude_csv(const std::vector<AmplitudeState<3>>& traj) {
  std::string s = "t,re_c1,im_c1,re_c2,im_c2,re_c3,im_c3,p1,p2,p3\n";
  for (const auto& a : traj) {
    s += format_number(a.t);
    for (int k = 0; k < 3; ++k)
      s += ',' + format_number(a.c(k).real()) + ',' + format_number(a.c(k).imag());
    for (int k = 0; k < 3; ++k) s += ',' + format_number(std::norm(a.c(k)));
    s += '\n';
  }
  return s;
}

inline std::string amplitude_csv(const std::vector<AmplitudeState<2>>& traj) {
  std::string s = "t,re_c1,im_c1,re_c2,im_c2,p1,p2\n";
  for (const auto& a : traj) {
    s += format_number(a.t);
    for (int k = 0; k < 2; ++k)
      s += ',' + format_number(a.c(k).real()) + ',' + format_number(a.c(k).imag());
    for (int k = 0; k < 2; ++k) s += ',' + format_number(std::norm(a.c(k)));
    s += '\n';
  }
  return s;
}

inline SweptParameter swept_from(const std::string& name) {
  if (name == "delta") return SweptParameter::SinglePhotonDetuning;
  if (name == "delta2") return SweptParameter::TwoPhotonDetuning;
  if (name == "t0") return SweptParameter::MaskWidth;
  return SweptParameter::PeakRabi;
}

}  // namespace detail

/// Executes the verb, writes outputs next to `cfg.output` and returns the exit
/// status. Human-readable results go to `out`.
inline int dispatch(const RunConfig& cfg, RunLog& log, std::ostream& out) {
  log.line("stirap " + std::string(version));
  log.line("verb: " + verb_name(cfg.verb));
  log.line("--- resolved config ---");
  std::istringstream resolved(serialize_config(cfg));
  for (std::string l; std::getline(resolved, l);) log.line(l);
  log.line("--- defaults applied ---");
  for (const auto& d : cfg.defaults_applied) log.line(d);
  log.line("---");

  const std::filesystem::path path = cfg.output;
  const bool two_state = cfg.pulse.family == "landau-zener" || cfg.pulse.family == "constant-eps";
  auto descriptor = [&] { return make_pulse(cfg.pulse); };

  switch (cfg.verb) {
    case Verb::Shapes: {
      const auto desc = descriptor();
      const auto times = linspace(cfg.system.window.start, cfg.system.window.end, cfg.samples);
      std::string csv = two_state ? "t,omega,delta\n" : "t,omega_p,omega_s\n";
      log.phase("evaluate", [&] {
        for (double t : times) {
          const auto s = evaluate(desc, t);
          csv += format_number(t) + ',' + format_number(s.omega_p) + ',' +
                 format_number(s.omega_s) + '\n';
        }
      });
      log.phase("write", [&] { write_atomic(path, csv); });
      out << "wrote " << times.size() << " samples to " << path.string() << '\n';
      return exit_ok;
    }

    case Verb::Simulate: {
      const auto desc = descriptor();
      IntegratorConfig ic = cfg.integrator;
      ic.dense_output_samples = cfg.samples;
      if (cfg.reduction_check) {
        const auto rep = log.phase("consistency", [&] { return consistency_check(desc, cfg.system, ic); });
        std::string csv = "t,P1_full,P2_full,P3_full,P1_mapped,P2_mapped,P3_mapped,deviation\n";
        for (const auto& s : rep.samples) {
          csv += format_number(s.t);
          for (int k = 0; k < 3; ++k) csv += ',' + format_number(s.full(k));
          for (int k = 0; k < 3; ++k) csv += ',' + format_number(s.mapped(k));
          csv += ',' + format_number(s.deviation) + '\n';
        }
        log.phase("write", [&] { write_atomic(path, csv); });
        out << "regime: " << (rep.regime == ReductionRegime::Resonant ? "resonant" : "eliminated")
            << "\nmax deviation: " << format_number(rep.max_deviation)
            << "\nfinal deviation: " << format_number(rep.final_deviation) << '\n';
        log.line("max deviation " + format_number(rep.max_deviation));
        return exit_ok;
      }
      if (two_state) {
        const auto r = log.phase("propagate", [&] {
          return propagate<2>(desc, cfg.system, basis_state<2>(cfg.system.window.start, 0), ic);
        });
        log.phase("write", [&] { write_atomic(path, detail::amplitude_csv(r.trajectory)); });
        const auto p = r.final.populations();
        out << "P1 = " << format_number(p(0)) << "\nP2 = " << format_number(p(1))
            << "\nnorm drift = " << format_number(r.norm_drift) << '\n';
        log.line("steps " + std::to_string(r.steps_taken) + ", rejected " +
                 std::to_string(r.rejected_steps));
        return exit_ok;
      }
      const auto r = log.phase("propagate", [&] {
        return propagate<3>(desc, cfg.system, basis_state<3>(cfg.system.window.start, 0), ic);
      });
      log.phase("write", [&] { write_atomic(path, detail::amplitude_csv(r.trajectory)); });
      const auto p = r.final.populations();
      out << "P1 = " << format_number(p(0)) << "\nP2 = " << format_number(p(1))
          << "\nP3 = " << format_number(p(2)) << '\n';
      if (cfg.pulse.family.rfind("fractional", 0) == 0)
        out << "superposition infidelity = "
            << format_number(superposition_infidelity(r, cfg.pulse.alpha)) << '\n';
      else
        out << "transfer infidelity = " << format_number(transfer_infidelity(r)) << '\n';
      out << "norm drift = " << format_number(r.norm_drift) << '\n';
      log.line("steps " + std::to_string(r.steps_taken) + ", rejected " +
               std::to_string(r.rejected_steps) + ", error estimate " +
               format_number(r.error_estimate));
      return exit_ok;
    }

    case Verb::Sweep: {
      const auto& sw = *cfg.sweep;
      SweepSpec spec;
      spec.swept = detail::swept_from(sw.param);
      spec.grid = linspace(sw.start, sw.stop, sw.points);
      spec.base_descriptor = descriptor();
      spec.base_params = cfg.system;
      spec.target = sw.target == "superposition" ? SweepTarget::superposition(sw.target_alpha)
                                                 : SweepTarget::full_transfer();
      const auto records =
          log.phase("sweep", [&] { return run_sweep(spec, cfg.integrator, cfg.workers); });
      std::ostringstream csv;
      write_sweep_csv(csv, column_name(spec.swept), records);
      log.phase("write", [&] {
        write_atomic(path, csv.str());
        if (cfg.plot_script) {
          auto gp = path;
          gp += ".gp";
          write_atomic(gp, gnuplot_script(path.filename().string(), column_name(spec.swept)));
        }
      });
      const auto failed = std::count_if(records.begin(), records.end(),
                                        [](const auto& r) { return r.status != "ok"; });
      out << "wrote " << records.size() << " rows to " << path.string() << " (" << failed
          << " failed points)\n";
      out << "minimum infidelity at " << column_name(spec.swept) << " = "
          << format_number(argmin_infidelity(records)) << '\n';
      return exit_ok;
    }

    case Verb::DdpAnalyze: {
      const auto desc = descriptor();
      std::string model_kind = cfg.ddp.model;
      if (model_kind == "auto")
        model_kind = two_state ? "two-state" : (cfg.system.delta == 0 ? "resonant" : "eliminated");
      TwoStateModel model;
      std::string warning;
      if (model_kind == "two-state") {
        model = two_state_model(desc);
      } else if (model_kind == "resonant") {
        model = reduced_model(resonant_reduce(desc));
      } else {
        const auto eff = eliminate(desc, cfg.system.delta);
        warning = eff.warning();
        model = reduced_model(eff);
      }
      const SearchBox box =
          cfg.ddp.custom_box ? cfg.ddp.box : default_search_box(model, cfg.system.window);
      const auto est = log.phase("estimate", [&] {
        return estimate(model, box, SearchGrid{cfg.ddp.grid_nx, cfg.ddp.grid_ny});
      });
      std::string csv = "re_t0,im_t0,re_d,im_d,re_gamma,im_gamma,residual,multiplicity\n";
      for (const auto& pt : est.points)
        csv += format_number(pt.t0.real()) + ',' + format_number(pt.t0.imag()) + ',' +
               format_number(pt.d_value.real()) + ',' + format_number(pt.d_value.imag()) + ',' +
               format_number(pt.gamma_k.real()) + ',' + format_number(pt.gamma_k.imag()) + ',' +
               format_number(pt.newton_residual) + ',' + std::to_string(pt.multiplicity) + '\n';
      log.phase("write", [&] { write_atomic(path, csv); });

      std::ostringstream sum;
      sum << "model: " << model_kind << '\n'
          << "search box: Re [" << format_number(box.re_min) << ", " << format_number(box.re_max)
          << "], Im [" << format_number(box.im_min) << ", " << format_number(box.im_max) << "]\n"
          << "grid: " << cfg.ddp.grid_nx << " x " << cfg.ddp.grid_ny << " (" << est.failed_seeds
          << " seeds did not converge)\n"
          << "transition points: " << est.points.size() << '\n'
          << "mode: " << to_string(est.mode) << '\n'
          << "probability: " << format_number(est.probability) << '\n'
          << "single dominant: " << format_number(est.single_dominant) << '\n'
          << "multi point: " << format_number(est.multi_point)
          << (est.clamped ? " (clamped)" : "") << '\n';
      for (const auto& n : est.notes) sum << "note: " << n << '\n';
      if (!warning.empty()) sum << "warning: " << warning << '\n';
      out << sum.str();
      std::istringstream lines(sum.str());
      for (std::string l; std::getline(lines, l);) log.line(l);
      return exit_ok;
    }

    case Verb::Validate: {
      const auto checks = log.phase("checks", [&] { return run_checks(cfg.integrator); });
      bool all = true;
      std::string csv = "check,status,value,threshold\n";
      for (const auto& c : checks) {
        const std::string status = c.pass ? "PASS" : "FAIL";
        out << status << "  " << c.name << "  (" << format_number(c.value) << ", limit "
            << format_number(c.threshold) << ")\n";
        log.line(status + " " + c.name + " " + format_number(c.value));
        csv += c.name + ',' + status + ',' + format_number(c.value) + ',' +
               format_number(c.threshold) + '\n';
        all = all && c.pass;
      }
      log.phase("write", [&] { write_atomic(path, csv); });
      return all ? exit_ok : exit_checks;
    }
  }
  return exit_usage;
}

}  // namespace stirap::cli
