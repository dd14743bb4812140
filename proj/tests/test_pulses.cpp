#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace stirap;
using testing_support::Gen;

namespace {

constexpr double pi = std::numbers::pi;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(Pulses, ConstantMaskMidpointIsSymmetric) {
  PulseDescriptor d(DdpOptimized{1.0, ConstantMask{}, Sigmoid{2.0, 1.0}});
  const auto s = evaluate(d, 0.0);
  EXPECT_NEAR(s.omega_p, std::sqrt(2.0) / 2, 1e-15);
  EXPECT_NEAR(s.omega_s, std::sqrt(2.0) / 2, 1e-15);
}

TEST(Pulses, GaussianPumpPeaksAtHalfDelay) {
  PulseDescriptor d(Gaussian{1.0, 1.2, 1.0});
  const auto s = evaluate(d, 0.6);
  EXPECT_DOUBLE_EQ(s.omega_p, 1.0);
  EXPECT_NEAR(s.omega_s, std::exp(-1.44), 1e-15);
}

TEST(Pulses, HypergaussianCurveMatchesClosedForm) {
  const auto d = testing_support::flagship();
  for (double t : linspace(-4, 4, 161)) {
    const double F = std::exp(-std::pow(t / 2.0, 6));
    const double f = sigmoid(4.0 * t);
    const auto s = evaluate(d, t);
    EXPECT_NEAR(s.omega_p, 20 * F * std::sin(pi / 2 * f), 1e-13) << t;
    EXPECT_NEAR(s.omega_s, 20 * F * std::cos(pi / 2 * f), 1e-13) << t;
  }
}

TEST(Pulses, RealAxisEvaluationHasNoImaginaryPart) {
  Gen g(11);
  for (int i = 0; i < 50; ++i) {
    const auto d = g.three_state();
    const double t = g.uniform(-8, 8);
    const auto [p, s] = evaluate(d, Complex(t, 0.0));
    EXPECT_EQ(p.imag(), 0.0);
    EXPECT_EQ(s.imag(), 0.0);
    const auto r = evaluate(d, t);
    EXPECT_EQ(p.real(), r.omega_p);
    EXPECT_EQ(s.real(), r.omega_s);
  }
}

TEST(Pulses, SigmoidPoleRaisesPoleProximity) {
  const auto d = testing_support::flagship();
  const Complex pole(0.0, pi / 4);
  EXPECT_THROW(evaluate(d, pole), Error);
  try {
    evaluate(d, pole + Complex(1e-4, 0));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleProximity);
  }
  EXPECT_NO_THROW(evaluate(d, pole + Complex(0.01, 0)));
  EXPECT_THROW(evaluate(d, std::conj(pole)), Error);
}

TEST(Pulses, PoleListFollowsSteepness) {
  const auto poles = shape_poles(Sigmoid{4.0, 1.0}, 5.0);
  ASSERT_EQ(poles.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(poles[k].imag(), pi * (2 * k + 1) / 4, 1e-15);
}

TEST(Pulses, SigmoidIsMonotoneBoundedWithLimits) {
  Gen g(12);
  for (int i = 0; i < 20; ++i) {
    const ShapeFunction s = Sigmoid{g.uniform(0.5, 8), 1.0};
    double prev = -1;
    for (double t : linspace(-12, 12, 2001)) {
      const double f = shape_jet<double>(s, t).value;
      EXPECT_GE(f, prev);
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
      prev = f;
    }
    if (std::get<Sigmoid>(s).steepness >= 4) {
      EXPECT_LT(shape_jet<double>(s, -10.0).value, 1e-15);
      EXPECT_GT(shape_jet<double>(s, 10.0).value, 1 - 1e-15);
    }
  }
}

TEST(Pulses, MaskIsEvenPositiveAndUnitAtOrigin) {
  Gen g(13);
  for (int i = 0; i < 20; ++i) {
    const MaskFunction m = g.mask();
    EXPECT_EQ(mask_jet<double>(m, 0.0).value, 1.0);
    for (int k = 0; k < 50; ++k) {
      const double t = g.uniform(-3, 3);
      const double F = mask_jet<double>(m, t).value;
      EXPECT_GT(F, 0.0);
      EXPECT_LE(F, 1.0);
      EXPECT_EQ(F, mask_jet<double>(m, -t).value);
    }
  }
  EXPECT_EQ(mask_jet<double>(MaskFunction{ConstantMask{}}, 7.0).value, 1.0);
}

TEST(Pulses, RmsEnvelopeEqualsMaskedPeak) {
  Gen g(14);
  for (int i = 0; i < 5; ++i) {
    const double omega0 = g.uniform(1, 50);
    const Hypergaussian mask = g.mask();
    PulseDescriptor d(DdpOptimized{omega0, mask, g.shape()});
    double worst = 0;
    for (double t : linspace(-10, 10, 10000)) {
      const auto s = evaluate(d, t);
      const double F = mask_jet<double>(MaskFunction{mask}, t).value;
      worst = std::max(worst, std::abs(s.omega_p * s.omega_p + s.omega_s * s.omega_s -
                                       omega0 * omega0 * F * F));
    }
    EXPECT_LE(worst, 1e-12 * omega0 * omega0);
  }
}

TEST(Pulses, ConjugateSymmetry) {
  Gen g(15);
  for (int i = 0; i < 40; ++i) {
    const auto d = g.three_state();
    const Complex t(g.uniform(-3, 3), g.uniform(0.01, 0.2));
    const auto [p, s] = evaluate(d, t);
    const auto [pc, sc] = evaluate(d, std::conj(t));
    EXPECT_NEAR(std::abs(pc - std::conj(p)), 0.0, 1e-12 * (1 + std::abs(p)));
    EXPECT_NEAR(std::abs(sc - std::conj(s)), 0.0, 1e-12 * (1 + std::abs(s)));
  }
}

TEST(Pulses, CounterintuitiveOrdering) {
  for (const auto& d : {testing_support::flagship(), testing_support::gaussian_pair()}) {
    const auto early = evaluate(d, -6.0), late = evaluate(d, 6.0);
    EXPECT_LT(early.omega_p / early.omega_s, 1e-6);
    EXPECT_LT(late.omega_s / late.omega_p, 1e-6);
    EXPECT_LT(mixing_angle(d, -6.0), 1e-6);
    EXPECT_GT(mixing_angle(d, 6.0), pi / 2 - 1e-6);
  }
}

TEST(Pulses, FractionalRatioApproachesTanAlpha) {
  for (double alpha : {pi / 8, pi / 4, pi / 3}) {
    PulseDescriptor a(FractionalDdp{20, Hypergaussian{1, 4.0}, Sigmoid{4, 1}, alpha});
    PulseDescriptor b(FractionalGaussian{20, 1.4, 1.0, alpha});
    for (const auto& d : {a, b}) EXPECT_NEAR(std::tan(mixing_angle(d, 10.0)), std::tan(alpha), 1e-6);
    const auto s = evaluate(a, 10.0);
    EXPECT_NEAR(s.omega_p / s.omega_s, std::tan(alpha), 1e-6);
    const auto q = evaluate(b, 8.0);
    EXPECT_NEAR(q.omega_p / q.omega_s, std::tan(alpha), 1e-6);
  }
}

TEST(Pulses, MixingAngleLimits) {
  const auto d = testing_support::flagship();
  EXPECT_NEAR(mixing_angle(d, -30.0), 0.0, 1e-15);
  EXPECT_NEAR(mixing_angle(d, 30.0), pi / 2, 1e-15);
  PulseDescriptor f(FractionalDdp{20, Hypergaussian{3, 2}, Sigmoid{4, 1}, pi / 4});
  EXPECT_NEAR(mixing_angle(f, 30.0), pi / 4, 1e-15);
  EXPECT_NEAR(mixing_angle(testing_support::gaussian_pair(), 0.0), pi / 4, 1e-15);
  EXPECT_NEAR(mixing_angle(d, 0.0), pi / 4, 1e-15);
}

TEST(Pulses, MixingAngleMatchesAtan2) {
  Gen g(16);
  for (int i = 0; i < 100; ++i) {
    const auto d = g.three_state();
    const double t = g.uniform(-3, 3);
    const auto s = evaluate(d, t);
    EXPECT_NEAR(mixing_angle(d, t), std::atan2(s.omega_p, s.omega_s), 1e-12);
  }
}

TEST(Pulses, DdpRateAtOriginIsQuarterLambdaPi) {
  EXPECT_NEAR(mixing_angle_rate(testing_support::flagship(), 0.0), pi / 2, 1e-15);
}

TEST(Pulses, AngleRateMatchesFiniteDifference) {
  Gen g(17);
  for (int i = 0; i < 100; ++i) {
    const auto d = g.three_state();
    const double t = g.uniform(-3, 3);
    EXPECT_NEAR(mixing_angle_rate(d, t), testing_support::angle_rate_fd(d, t), 1e-6);
  }
  const auto gp = testing_support::gaussian_pair(1.0);
  EXPECT_NEAR(mixing_angle_rate(gp, 0.0), testing_support::angle_rate_fd(gp, 0.0), 1e-6);
}

TEST(Pulses, AngleIndependentOfMask) {
  Gen g(18);
  const Sigmoid s{4, 1};
  PulseDescriptor a(DdpOptimized{20, Hypergaussian{3, 2}, s});
  PulseDescriptor b(DdpOptimized{20, ConstantMask{}, s});
  PulseDescriptor c(DdpOptimized{20, Hypergaussian{1, 5}, s});
  for (int i = 0; i < 100; ++i) {
    const double t = g.uniform(-6, 6);
    EXPECT_NEAR(mixing_angle(a, t), mixing_angle(b, t), 1e-14);
    EXPECT_NEAR(mixing_angle(a, t), mixing_angle(c, t), 1e-14);
    EXPECT_NEAR(mixing_angle_rate(a, t), mixing_angle_rate(c, t), 1e-14);
  }
}

TEST(Pulses, ConstantEnvelopesHaveNoRate) {
  EnvelopeJet<double> j{3.0, 4.0, 0.0, 0.0};
  EXPECT_EQ(mixing_angle_rate_from(j, 1e-15), 0.0);
}

TEST(Pulses, DegenerateAngleWhenBothVanish) {
  try {
    mixing_angle_from(0.0, 0.0, 1e-15);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateAngle);
  }
  EXPECT_THROW(mixing_angle_rate_from(EnvelopeJet<double>{0, 0, 1, 1}, 1e-15), Error);
}

TEST(Pulses, GaussianAreas) {
  for (double omega0 : {1.0, 7.5}) {
    const auto a = areas(testing_support::gaussian_pair(omega0), {-10, 10});
    EXPECT_NEAR(a.pump, omega0 * std::sqrt(pi), 1e-10 * omega0);
    EXPECT_NEAR(a.stokes, omega0 * std::sqrt(pi), 1e-10 * omega0);
    EXPECT_NEAR(a.rms, std::hypot(a.pump, a.stokes), 1e-14 * a.rms);
    // min envelope: the two tails beyond the crossing at t = 0
    EXPECT_NEAR(a.overlap, omega0 * std::sqrt(pi) * std::erfc(0.6), 1e-9 * omega0);
    EXPECT_NEAR(a.ratio, a.rms / a.overlap, 1e-14);
  }
}

TEST(Pulses, ConstantMaskEnvelopeArea) {
  PulseDescriptor d(DdpOptimized{3.0, ConstantMask{}, Sigmoid{4, 1}});
  const double L = 6;
  const auto a = areas(d, {-L, L});
  EXPECT_NEAR(a.envelope, 3.0 * 2 * L, 1e-10);
  // The rms of the two separate areas is smaller than the envelope area.
  EXPECT_LT(a.rms, a.envelope);
}

TEST(Pulses, WiderMaskRaisesAreaRatio) {
  const auto narrow = areas(testing_support::flagship(), {-10, 10});
  const auto wide = areas(with_mask_width(testing_support::flagship(), 4.0), {-10, 10});
  EXPECT_GT(wide.ratio, narrow.ratio);
}

TEST(Pulses, AreasRejectNarrowWindow) {
  try {
    areas(testing_support::gaussian_pair(), {-2, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::WindowTooNarrow);
  }
}

TEST(Pulses, AdiabaticityMargin) {
  const auto strong = adiabaticity_margin(testing_support::flagship(), {-3, 3}, 601);
  EXPECT_GT(strong.margin, 0.0);
  const auto weak = adiabaticity_margin(testing_support::flagship(0.1), {-3, 3}, 601);
  EXPECT_LT(weak.margin, 0.0);
  double prev = -1e300;
  for (double omega0 : {1.0, 10.0, 100.0, 1000.0}) {
    PulseDescriptor d(DdpOptimized{omega0, ConstantMask{}, Sigmoid{4, 1}});
    const double m = adiabaticity_margin(d, {-3, 3}, 101).margin;
    EXPECT_GT(m, prev);
    prev = m;
  }
  EXPECT_GT(prev, 990.0);
  EXPECT_THROW(adiabaticity_margin(testing_support::gaussian_pair(), {-3, 3}, 10), Error);
}

TEST(Pulses, InvalidDescriptorsAreRejected) {
  EXPECT_THROW(PulseDescriptor(Gaussian{-1.0, 1.2, 1.0}), Error);
  EXPECT_THROW(PulseDescriptor(Gaussian{1.0, 1.2, 0.0}), Error);
  EXPECT_THROW(PulseDescriptor(DdpOptimized{1.0, Hypergaussian{0, 2}, Sigmoid{}}), Error);
  EXPECT_THROW(PulseDescriptor(DdpOptimized{1.0, Hypergaussian{3, -2}, Sigmoid{}}), Error);
  EXPECT_THROW(PulseDescriptor(FractionalDdp{1.0, Hypergaussian{}, Sigmoid{}, 2.0}), Error);
  EXPECT_THROW(PulseDescriptor(TwoStateConstantEps{0.0, Sigmoid{}}), Error);
  EXPECT_THROW(PulseDescriptor(LandauZener{1.0, 0.0}), Error);
}

TEST(Pulses, MakePulseFromConfig) {
  PulseConfig c;
  const auto d = make_pulse(c);
  EXPECT_NEAR(evaluate(d, 0.3).omega_p, evaluate(testing_support::flagship(), 0.3).omega_p, 1e-15);
  for (const auto& name : pulse_family_names()) {
    c.family = name;
    EXPECT_NO_THROW(make_pulse(c)) << name;
  }
  c.family = "square";
  try {
    make_pulse(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ValidationError);
  }
}

TEST(Pulses, WithPeakScalesEnvelopes) {
  const auto d = with_peak(testing_support::flagship(), 10.0);
  EXPECT_NEAR(evaluate(d, 0.2).omega_p, 0.5 * evaluate(testing_support::flagship(), 0.2).omega_p,
              1e-14);
}
