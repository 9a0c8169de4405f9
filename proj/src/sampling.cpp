#include "hm3/sampling.hpp"

#include <cmath>

#include "hm3/errors.hpp"

namespace hm3 {

double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

double uniform01_open(std::mt19937_64& eng) {
  double u;
  do {
    u = uniform01(eng);
  } while (u <= 0.0);
  return u;
}

double normal_variate(std::mt19937_64& eng) {
  // Marsaglia polar method, uncached to keep the draw count predictable.
  for (;;) {
    const double u = 2.0 * uniform01(eng) - 1.0;
    const double v = 2.0 * uniform01(eng) - 1.0;
    const double s = u * u + v * v;
    if (s >= 1.0 || s == 0.0) continue;
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double gamma_variate(std::mt19937_64& eng, double shape) {
  if (!(shape > 0.0))
    throw ValidationError("gamma shape must be positive");
  if (shape < 1.0) {
    const double u = uniform01_open(eng);
    return gamma_variate(eng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia & Tsang, "A Simple Method for Generating Gamma Variables",
  // ACM TOMS 26(3), 2000.
  const double d = shape - 1.0 / 3.0;
  const double c = (1.0 / 3.0) / std::sqrt(d);
  for (;;) {
    double x, v;
    do {
      x = normal_variate(eng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01_open(eng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_variate(std::mt19937_64& eng, double alpha, double beta) {
  for (;;) {
    const double ga = gamma_variate(eng, alpha);
    const double gb = gamma_variate(eng, beta);
    if (ga + gb == 0.0) continue;
    const double x = ga / (ga + gb);
    if (x > 0.0 && x < 1.0) return x;
  }
}

double beta_1p2_2_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 2.2 * std::pow(x, 1.2) - 1.2 * std::pow(x, 2.2);
}

} // namespace hm3
