#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "entrocert/numeric.hpp"
#include "entrocert/parallel.hpp"

using namespace entrocert;

TEST_CASE("simpson integrates cubics exactly") {
  const auto f = [](double x) { return 3.0 * x * x * x - x + 2.0; };
  CHECK(numeric::simpson(f, -1.0, 2.0, 2) == doctest::Approx(3.0 * 15.0 / 4.0 - 1.5 + 6.0).epsilon(1e-14));
  const auto w = numeric::simpson_weights(6, 0.5);
  double s = 0.0;
  for (std::size_t i = 0; i < 6; ++i) s += w[i] * f(i * 0.5);
  CHECK(s == doctest::Approx(3.0 * std::pow(2.5, 4) / 4.0 - 2.5 * 2.5 / 2.0 + 5.0).epsilon(1e-13));
}

TEST_CASE("stable sum") {
  std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
  CHECK(numeric::stable_sum(xs) == 2.0);
}

TEST_CASE("golden section and bisection") {
  const auto m = numeric::golden_section_min([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 2.0, 1e-10);
  CHECK(m.x == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(numeric::bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-13) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK(worker_count() >= 1);
}
