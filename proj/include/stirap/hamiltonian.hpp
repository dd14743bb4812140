#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "stirap/error.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

template <int N>
using CVector = Eigen::Matrix<Complex, N, 1>;
template <int N>
using CMatrix = Eigen::Matrix<Complex, N, N>;

struct SystemParams {
  double delta = 0.0;   // single-photon detuning
  double delta2 = 0.0;  // two-photon (Raman) detuning, enters as H33
  double gamma = 0.0;   // loss rate of the intermediate state
  TimeWindow window{};
  double T = 1.0;

  void validate() const {
    if (!(gamma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma must be >= 0");
    if (!(window.start < window.end))
      throw Error(ErrorKind::InvalidArgument, "window start must precede window end");
    if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "time unit must be positive");
    if (!std::isfinite(delta) || !std::isfinite(delta2))
      throw Error(ErrorKind::InvalidArgument, "detunings must be finite");
  }

  bool operator==(const SystemParams& o) const {
    return delta == o.delta && delta2 == o.delta2 && gamma == o.gamma &&
           window.start == o.window.start && window.end == o.window.end && T == o.T;
  }
};

template <int N>
struct HamiltonianMatrix {
  CMatrix<N> entries;
  double t = 0.0;

  static constexpr int dimension = N;
};

/// H = 1/2 [[0, Op, 0], [Op, 2 delta - i gamma, Os], [0, Os, 2 delta2]]
inline HamiltonianMatrix<3> build_three_state(double omega_p, double omega_s,
                                              const SystemParams& params, double t = 0.0) {
  HamiltonianMatrix<3> h;
  h.t = t;
  h.entries.setZero();
  h.entries(0, 1) = h.entries(1, 0) = 0.5 * omega_p;
  h.entries(1, 2) = h.entries(2, 1) = 0.5 * omega_s;
  h.entries(1, 1) = Complex(params.delta, -0.5 * params.gamma);
  h.entries(2, 2) = params.delta2;
  return h;
}

inline HamiltonianMatrix<3> build_three_state(const PulseDescriptor& desc,
                                              const SystemParams& params, double t) {
  if (desc.is_two_state())
    throw Error(ErrorKind::InvalidArgument, "three-state Hamiltonian needs a pump/Stokes family");
  const auto s = evaluate(desc, t);
  return build_three_state(s.omega_p, s.omega_s, params, t);
}

/// H = 1/2 [[0, omega], [omega, 2 delta]]
inline HamiltonianMatrix<2> build_two_state(double omega, double delta, double t = 0.0) {
  HamiltonianMatrix<2> h;
  h.t = t;
  h.entries << 0.0, 0.5 * omega, 0.5 * omega, delta;
  return h;
}

inline HamiltonianMatrix<2> build_two_state(const PulseDescriptor& desc, double t) {
  if (!desc.is_two_state())
    throw Error(ErrorKind::InvalidArgument, "two-state Hamiltonian needs a two-state family");
  const auto s = evaluate(desc, t);
  return build_two_state(s.omega_p, s.omega_s, t);
}

struct DarkState {
  Eigen::Vector3d amplitudes;
  double theta;
};

/// cos(theta) psi1 - sin(theta) psi3
inline DarkState dark_state_for_angle(double theta) {
  return {Eigen::Vector3d(std::cos(theta), 0.0, -std::sin(theta)), theta};
}

inline DarkState dark_state(const PulseDescriptor& desc, double t) {
  return dark_state_for_angle(mixing_angle(desc, t));
}

template <int N>
struct Eigensystem {
  Eigen::Matrix<double, N, 1> values;  // ascending
  CMatrix<N> vectors;                  // columns, orthonormal
};

template <int N>
double hermiticity_defect(const CMatrix<N>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

template <int N>
Eigensystem<N> eigensystem(const HamiltonianMatrix<N>& h) {
  const double scale = h.entries.norm();
  if (hermiticity_defect<N>(h.entries) > 1e-14 * scale)
    throw Error(ErrorKind::NonHermitianInput, "eigensystem requires a Hermitian matrix");
  Eigen::SelfAdjointEigenSolver<CMatrix<N>> solver(h.entries);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace stirap
