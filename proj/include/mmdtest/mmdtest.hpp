#pragma once

// Kernel (MMD) two-sample testing with distribution-free and resampled
// thresholds, the off-line change-point scan, exact optimal type-II error
// exponents, and a finite-alphabet method-of-types oracle for checking the
// large-deviation machinery at desk scale.

#include "mmdtest/accumulate.hpp"
#include "mmdtest/changepoint.hpp"
#include "mmdtest/distributions.hpp"
#include "mmdtest/exponents.hpp"
#include "mmdtest/kernels.hpp"
#include "mmdtest/mmd.hpp"
#include "mmdtest/parallel.hpp"
#include "mmdtest/rng.hpp"
#include "mmdtest/sanov.hpp"
#include "mmdtest/simulation.hpp"
#include "mmdtest/thresholds.hpp"
#include "mmdtest/two_sample.hpp"
