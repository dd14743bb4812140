#pragma once

#include "stirap/error.hpp"
#include "stirap/pulses.hpp"
#include "stirap/hamiltonian.hpp"
#include "stirap/propagator.hpp"
#include "stirap/reduction.hpp"
#include "stirap/ddp.hpp"
#include "stirap/experiments.hpp"

namespace stirap {

inline constexpr const char* version = "0.1.0";

}  // namespace stirap
