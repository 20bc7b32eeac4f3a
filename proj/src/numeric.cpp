#include "entrocert/numeric.hpp"

#include <cmath>
#include <stdexcept>

namespace entrocert::numeric {

double stable_sum(std::span<const double> xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double simpson(const std::function<double(double)>& f, double a, double b, std::size_t intervals) {
  if (intervals < 2) intervals = 2;
  if (intervals % 2) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i < intervals; ++i) {
    const double v = f(a + static_cast<double>(i) * h);
    if (i % 2)
      odd += v;
    else
      even += v;
  }
  return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

std::vector<double> simpson_weights(std::size_t n, double h) {
  if (n == 0) return {};
  if (n == 1) return {h};
  if (n == 2) return {0.5 * h, 0.5 * h};
  std::vector<double> w(n, 0.0);
  std::size_t simpson_nodes = n;
  if (n % 2 == 0) {
    // 3/8 rule on the last three intervals.
    simpson_nodes = n - 3;
    const double c = 3.0 * h / 8.0;
    w[n - 4] += c;
    w[n - 3] += 3.0 * c;
    w[n - 2] += 3.0 * c;
    w[n - 1] += c;
  }
  if (simpson_nodes >= 3) {
    const double c = h / 3.0;
    w[0] += c;
    w[simpson_nodes - 1] += c;
    for (std::size_t i = 1; i + 1 < simpson_nodes; ++i) w[i] += (i % 2 ? 4.0 : 2.0) * c;
  }
  return w;
}

Minimum golden_section_min(const std::function<double(double)>& f, double a, double b,
                           double x_tolerance) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int iter = 0; iter < 200 && std::abs(b - a) > x_tolerance; ++iter) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

double bisect(const std::function<double(double)>& f, double a, double b, double x_tolerance) {
  double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) throw std::invalid_argument("bisect: no sign change on bracket");
  for (int iter = 0; iter < 400 && std::abs(b - a) > x_tolerance; ++iter) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace entrocert::numeric
