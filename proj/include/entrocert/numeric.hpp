#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace entrocert::numeric {

/// Neumaier-compensated sum.
double stable_sum(std::span<const double> xs);

/// Composite Simpson rule over [a, b] with `intervals` sub-intervals
/// (rounded up to even).
double simpson(const std::function<double(double)>& f, double a, double b, std::size_t intervals);

/// Composite Simpson quadrature weights for `n` equally spaced nodes of
/// spacing h. Odd n uses the 1-4-2-4-1 pattern; even n closes with the 3/8 rule.
std::vector<double> simpson_weights(std::size_t n, double h);

struct Minimum {
  double x = 0.0;
  double value = 0.0;
};

/// Golden-section search for a minimum of a unimodal f on [a, b].
Minimum golden_section_min(const std::function<double(double)>& f, double a, double b,
                           double x_tolerance);

/// Root of f on [a, b] by bisection; requires a sign change.
double bisect(const std::function<double(double)>& f, double a, double b, double x_tolerance);

}  // namespace entrocert::numeric
