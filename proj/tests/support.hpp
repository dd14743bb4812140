#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "stirap/stirap.hpp"

namespace testing_support {

using namespace stirap;

/// Fixed-seed generator shared by the property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }

  Hypergaussian mask() { return Hypergaussian{integer(1, 4), uniform(1.5, 2.5)}; }
  Sigmoid shape() { return Sigmoid{uniform(1.0, 5.0), 1.0}; }

  /// Random pump/Stokes family that vanishes inside a +-10 window.
  PulseDescriptor three_state() {
    const double omega0 = uniform(5.0, 30.0);
    switch (integer(0, 3)) {
      case 0: return PulseDescriptor(DdpOptimized{omega0, mask(), shape()});
      case 1: return PulseDescriptor(Gaussian{omega0, uniform(0.5, 2.0), 1.0});
      case 2: return PulseDescriptor(FractionalDdp{omega0, mask(), shape(), uniform(0.2, 1.4)});
      default:
        return PulseDescriptor(FractionalGaussian{omega0, uniform(0.5, 2.0), 1.0, uniform(0.2, 1.4)});
    }
  }

 private:
  std::mt19937_64 rng_;
};

/// Flagship pulse pair: n = 3, lambda = 4, T0 = 2, omega0 = 20.
inline PulseDescriptor flagship(double omega0 = 20.0) {
  return PulseDescriptor(DdpOptimized{omega0, Hypergaussian{3, 2.0}, Sigmoid{4.0, 1.0}});
}

inline PulseDescriptor gaussian_pair(double omega0 = 20.0, double delay = 1.2) {
  return PulseDescriptor(Gaussian{omega0, delay, 1.0});
}

/// Central difference of the mixing angle.
inline double angle_rate_fd(const PulseDescriptor& d, double t, double h = 1e-5) {
  return (mixing_angle(d, t + h) - mixing_angle(d, t - h)) / (2 * h);
}

}  // namespace testing_support
