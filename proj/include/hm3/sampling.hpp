#pragma once

#include <cstdint>
#include <random>

namespace hm3 {

// Uniform in [0,1) from the engine's raw 64-bit output; distributions from
// <random> are implementation-defined and would not reproduce across builds.
double uniform01(std::mt19937_64& eng);

// Uniform in (0,1).
double uniform01_open(std::mt19937_64& eng);

// Standard normal via the Marsaglia polar method.
double normal_variate(std::mt19937_64& eng);

// Gamma(shape, 1) by Marsaglia-Tsang squeeze; shapes below 1 use the
// boost G(shape) = G(shape + 1) * U^(1/shape).
double gamma_variate(std::mt19937_64& eng, double shape);

// Beta(alpha, beta) from two gamma variates; exact 0 or 1 outputs are
// rejected and resampled.
double beta_variate(std::mt19937_64& eng, double alpha, double beta);

// Closed-form CDF of Beta(1.2, 2): 2.2*x^1.2 - 1.2*x^2.2 on [0,1].
double beta_1p2_2_cdf(double x);

} // namespace hm3
