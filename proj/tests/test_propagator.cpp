#include <gtest/gtest.h>

#include "support.hpp"

using namespace stirap;
using testing_support::Gen;

namespace {

SystemParams window(double a, double b) {
  SystemParams p;
  p.window = {a, b};
  return p;
}

}  // namespace

TEST(Propagator, FlagshipTransfersPopulation) {
  const auto p = window(-10, 10);
  const auto r = propagate<3>(testing_support::flagship(), p, basis_state<3>(-10, 0), {});
  EXPECT_GE(std::norm(r.final.c(2)), 1 - 1e-4);
  EXPECT_LE(r.norm_drift, 1e-9);
  EXPECT_GT(r.steps_taken, 0);
}

TEST(Propagator, UncoupledStateOnlyPicksUpPhase) {
  SystemParams p;
  p.delta = 2.0;
  p.delta2 = 0.7;
  auto ham = [&](double) { return build_three_state(0.0, 0.0, p).entries; };
  CVector<3> c0(0, 0, 1);
  const auto r = propagate_hamiltonian<3>(ham, {0, 5}, c0, {});
  EXPECT_NEAR(std::abs(r.final.c(2) - std::exp(Complex(0, -0.7 * 5))), 0.0, 1e-9);
  EXPECT_EQ(r.final.c(0), Complex(0.0));
}

TEST(Propagator, LandauZenerDiabaticSurvival) {
  // alpha = omega0^2 / rate = 10: diabatic survival exp(-pi alpha / 2).
  const PulseDescriptor lz(LandauZener{std::sqrt(10.0), 1.0});
  const auto r = propagate<2>(lz, window(-200, 200), basis_state<2>(-200, 0), {});
  EXPECT_NEAR(std::norm(r.final.c(0)), std::exp(-std::numbers::pi * 10 / 2), 1e-3);
}

TEST(Propagator, LandauZenerAdiabaticProjection) {
  for (double omega0 : {0.5, 1.0, 1.5}) {
    const auto run = landau_zener_run(omega0, 1.0, 200, {});
    EXPECT_NEAR(run.adiabatic, std::exp(-std::numbers::pi * omega0 * omega0 / 2), 1e-5);
  }
}

TEST(Propagator, NormConservedForRandomPulses) {
  Gen g(31);
  for (int i = 0; i < 10; ++i) {
    const auto d = g.three_state();
    SystemParams p = window(-10, 10);
    p.delta = g.uniform(-5, 5);
    p.delta2 = g.uniform(-0.5, 0.5);
    const auto r = propagate<3>(d, p, basis_state<3>(-10, 0), {});
    EXPECT_LE(r.norm_drift, 1e-9);
  }
}

TEST(Propagator, LossyRunDecaysMonotonically) {
  SystemParams p = window(-10, 10);
  p.gamma = 1.0;
  IntegratorConfig cfg;
  cfg.dense_output_samples = 401;
  const auto r = propagate<3>(testing_support::gaussian_pair(5.0), p, basis_state<3>(-10, 0), cfg);
  double prev = 1.0;
  for (const auto& s : r.trajectory) {
    const double n = s.c.squaredNorm();
    EXPECT_LE(n, prev + 1e-10);
    prev = n;
  }
  EXPECT_LT(r.final.populations().sum(), 1.0);
  EXPECT_EQ(r.norm_drift, 0.0);
}

TEST(Propagator, TimeReversalReturnsInitialState) {
  const auto d = testing_support::flagship();
  SystemParams p = window(-10, 10);
  p.delta = 3.0;
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  const auto fwd = propagate<3>(d, p, basis_state<3>(-10, 0), cfg);
  // Backward evolution: i dc/ds = -H(-s) c on s from -10 to 10.
  auto back = [&](double s) -> CMatrix<3> { return -build_three_state(d, p, -s).entries; };
  const auto rev = propagate_hamiltonian<3>(back, {-10, 10}, fwd.final.c, cfg);
  EXPECT_LE((rev.final.c - basis_state<3>(0, 0).c).norm(), 1e-8);
}

TEST(Propagator, TighterToleranceConverges) {
  const auto d = testing_support::gaussian_pair(10.0);
  const auto p = window(-10, 10);
  IntegratorConfig fine;
  fine.rel_tol = 1e-13;
  fine.abs_tol = 1e-15;
  const auto ref = propagate<3>(d, p, basis_state<3>(-10, 0), fine);
  double prev_err = 1;
  for (double tol : {1e-6, 1e-8, 1e-10}) {
    IntegratorConfig cfg;
    cfg.rel_tol = tol;
    cfg.abs_tol = tol * 1e-2;
    const auto r = propagate<3>(d, p, basis_state<3>(-10, 0), cfg);
    const double err = (r.final.c - ref.final.c).cwiseAbs().maxCoeff();
    EXPECT_LE(err, std::max(10 * r.error_estimate, 1e-12)) << tol;
    EXPECT_LT(err, prev_err);
    prev_err = err;
  }
}

TEST(Propagator, DenseOutputCoversWindow) {
  IntegratorConfig cfg;
  cfg.dense_output_samples = 11;
  const auto r = propagate<3>(testing_support::flagship(), window(-10, 10), basis_state<3>(-10, 0), cfg);
  ASSERT_EQ(r.trajectory.size(), 11u);
  EXPECT_EQ(r.trajectory.front().t, -10.0);
  EXPECT_EQ(r.trajectory.back().t, 10.0);
  EXPECT_EQ(r.trajectory.back().c, r.final.c);
  EXPECT_NEAR(r.trajectory[5].t, 0.0, 1e-15);
}

TEST(Propagator, FollowsDarkStateAdiabatically) {
  const auto d = testing_support::flagship();
  IntegratorConfig cfg;
  cfg.dense_output_samples = 41;
  const auto r = propagate<3>(d, window(-10, 10), basis_state<3>(-10, 0), cfg);
  for (const auto& s : r.trajectory) {
    const CVector<3> dark = dark_state(d, s.t).amplitudes.cast<Complex>();
    // transient leakage near the crossing recombines by the end of the pulse
    EXPECT_GE(std::norm(dark.dot(s.c)), 0.95) << s.t;
  }
  const CVector<3> last = dark_state(d, 10.0).amplitudes.cast<Complex>();
  EXPECT_GE(std::norm(last.dot(r.final.c)), 1 - 1e-4);
}

TEST(Propagator, RejectsUnnormalizedInitialState) {
  AmplitudeState<3> s = basis_state<3>(-10, 0);
  s.c(0) = 0.9;
  try {
    propagate<3>(testing_support::flagship(), window(-10, 10), s, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotNormalized);
  }
}

TEST(Propagator, RejectsNarrowWindow) {
  try {
    propagate<3>(testing_support::gaussian_pair(), window(-2, 2), basis_state<3>(-2, 0), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WindowTooNarrow);
  }
}

TEST(Propagator, StepBudgetRaisesStepUnderflow) {
  IntegratorConfig cfg;
  cfg.max_steps = 5;
  try {
    propagate<3>(testing_support::flagship(), window(-10, 10), basis_state<3>(-10, 0), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StepUnderflow);
  }
}

TEST(Propagator, RejectsMismatchedFamiliesAndStartTimes) {
  const auto p = window(-10, 10);
  EXPECT_THROW(propagate<2>(testing_support::flagship(), p, basis_state<2>(-10, 0), {}), Error);
  EXPECT_THROW(propagate<3>(PulseDescriptor(LandauZener{}), p, basis_state<3>(-10, 0), {}), Error);
  EXPECT_THROW(propagate<3>(testing_support::flagship(), p, basis_state<3>(-9, 0), {}), Error);
  IntegratorConfig bad;
  bad.rel_tol = 0;
  EXPECT_THROW(propagate<3>(testing_support::flagship(), p, basis_state<3>(-10, 0), bad), Error);
}
