#include <gtest/gtest.h>

#include "support.hpp"

using namespace stirap;
using testing_support::Gen;

TEST(Hamiltonian, ThreeStateEntries) {
  SystemParams p;
  p.delta = 1.5;
  p.delta2 = -0.25;
  const auto h = build_three_state(2.0, 3.0, p);
  CMatrix<3> want;
  want << 0, 1.0, 0, 1.0, 1.5, 1.5, 0, 1.5, -0.25;
  EXPECT_LE((h.entries - want).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Hamiltonian, LossEntersAsNegativeImaginaryDiagonal) {
  SystemParams p;
  p.gamma = 0.4;
  const auto h = build_three_state(1.0, 1.0, p);
  EXPECT_EQ(h.entries(1, 1), Complex(0.0, -0.2));
  EXPECT_GT(hermiticity_defect<3>(h.entries), 0.0);
  try {
    eigensystem(h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonHermitianInput);
  }
}

TEST(Hamiltonian, DescriptorOverloadEvaluatesPulses) {
  const auto d = testing_support::flagship();
  SystemParams p;
  const auto h = build_three_state(d, p, 0.3);
  const auto s = evaluate(d, 0.3);
  EXPECT_EQ(h.entries(0, 1).real(), 0.5 * s.omega_p);
  EXPECT_EQ(h.entries(2, 1).real(), 0.5 * s.omega_s);
  EXPECT_THROW(build_three_state(PulseDescriptor(LandauZener{}), p, 0.0), Error);
  EXPECT_THROW(build_two_state(d, 0.0), Error);
}

TEST(Hamiltonian, TwoStateEigenvalues) {
  const auto e = eigensystem(build_two_state(2.0, 4.0));
  EXPECT_NEAR(e.values(0), 0.5 * (4 - std::sqrt(20.0)), 1e-14);
  EXPECT_NEAR(e.values(1), 0.5 * (4 + std::sqrt(20.0)), 1e-14);
  const auto z = eigensystem(build_two_state(0.0, 0.0));
  EXPECT_EQ(z.values(0), 0.0);
}

TEST(Hamiltonian, TwoStateSplittingIsQuasienergy) {
  Gen g(21);
  for (int i = 0; i < 200; ++i) {
    const double w = g.uniform(-10, 10), d = g.uniform(-10, 10);
    const auto e = eigensystem(build_two_state(w, d));
    EXPECT_NEAR(e.values(1) - e.values(0), std::hypot(w, d), 1e-12 * (1 + std::hypot(w, d)));
  }
}

TEST(Hamiltonian, ResonantThreeStateSpectrum) {
  Gen g(22);
  for (int i = 0; i < 100; ++i) {
    const double op = g.uniform(0, 30), os = g.uniform(0, 30);
    const auto e = eigensystem(build_three_state(op, os, SystemParams{}));
    const double half = 0.5 * std::hypot(op, os);
    EXPECT_NEAR(e.values(0), -half, 1e-12 * (1 + half));
    EXPECT_NEAR(e.values(1), 0.0, 1e-12 * (1 + half));
    EXPECT_NEAR(e.values(2), half, 1e-12 * (1 + half));
    const CMatrix<3> v = e.vectors;
    EXPECT_LE((v.adjoint() * v - CMatrix<3>::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Hamiltonian, DarkStateIsNullVector) {
  Gen g(23);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto d = g.three_state();
    const double t = g.uniform(-3, 3);
    SystemParams p;
    p.delta = g.uniform(-20, 20);
    p.gamma = g.uniform(0, 2);
    const auto h = build_three_state(d, p, t);
    const auto ds = dark_state(d, t);
    const CVector<3> v = ds.amplitudes.cast<Complex>();
    const double r = (h.entries * v).norm() / h.entries.norm();
    worst = std::max(worst, r);
    EXPECT_NEAR(ds.amplitudes.norm(), 1.0, 1e-15);
  }
  EXPECT_LE(worst, 1e-13);
}

TEST(Hamiltonian, DarkStateLimits) {
  const auto a = dark_state_for_angle(0.0);
  EXPECT_EQ(a.amplitudes, Eigen::Vector3d(1, 0, 0));
  const auto b = dark_state_for_angle(std::numbers::pi / 2);
  EXPECT_NEAR(b.amplitudes(0), 0.0, 1e-16);
  EXPECT_EQ(b.amplitudes(2), -1.0);
}

TEST(Hamiltonian, ParamsValidation) {
  SystemParams p;
  p.gamma = -1;
  EXPECT_THROW(p.validate(), Error);
  p = SystemParams{};
  p.window = {1, -1};
  EXPECT_THROW(p.validate(), Error);
  p = SystemParams{};
  p.T = 0;
  EXPECT_THROW(p.validate(), Error);
}
