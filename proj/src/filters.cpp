#include "entrocert/filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>

#include "entrocert/errors.hpp"
#include "entrocert/numeric.hpp"
#include "entrocert/parallel.hpp"

namespace entrocert {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));
const double kSqrt2Pi = std::sqrt(2.0 * kPi);

double lorentz(double z, double gamma) { return gamma / (kPi * (z * z + gamma * gamma)); }

double gauss(double y, double sigma) {
  return std::exp(-0.5 * (y / sigma) * (y / sigma)) / (sigma * kSqrt2Pi);
}

double lorentz_mass(double lo, double hi, double gamma) {
  const double u = hi / gamma;
  const double v = lo / gamma;
  if (std::isfinite(u) && std::isfinite(v) && u * v > -1.0)
    return std::atan((u - v) / (1.0 + u * v)) / kPi;
  return (std::atan(u) - std::atan(v)) / kPi;
}

double gauss_mass(double lo, double hi, double sigma) {
  const double z1 = lo / (sigma * std::numbers::sqrt2);
  const double z2 = hi / (sigma * std::numbers::sqrt2);
  if (z1 >= 0.0) return 0.5 * (std::erfc(z1) - std::erfc(z2));
  if (z2 <= 0.0) return 0.5 * (std::erfc(-z2) - std::erfc(-z1));
  return 0.5 * (std::erf(z2) - std::erf(z1));
}

// Simpson integral of f over [lo, hi] with sub-intervals no longer than h.
template <class F>
double panel(F&& f, double lo, double hi, double h) {
  if (!(hi > lo)) return 0.0;
  auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h));
  if (n < 2) n = 2;
  if (n % 2) ++n;
  const double step = (hi - lo) / static_cast<double>(n);
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double v = f(lo + static_cast<double>(i) * step);
    (i % 2 ? odd : even) += v;
  }
  return step / 3.0 * (f(lo) + f(hi) + 4.0 * odd + 2.0 * even);
}

// Voigt value at offset u by direct convolution: integral of G(y) L(u - y).
// Panels are refined around the Lorentzian spike at y = u.
double voigt_direct(double u, double gamma, double sigma) {
  const double ylo = -8.5 * sigma, yhi = 8.5 * sigma;
  const double h_in = std::min(sigma, gamma) / 32.0;
  const double h_out = sigma / 32.0;
  const double slo = std::clamp(u - 12.0 * gamma, ylo, yhi);
  const double shi = std::clamp(u + 12.0 * gamma, ylo, yhi);
  auto integrand = [&](double y) { return gauss(y, sigma) * lorentz(u - y, gamma); };
  return panel(integrand, ylo, slo, h_out) + panel(integrand, slo, shi, h_in) +
         panel(integrand, shi, yhi, h_out);
}

}  // namespace

namespace detail {

// Symmetric Voigt table on [0, U] with cubic interpolation, plus an
// asymptotic expansion in sigma^2 beyond U.
struct VoigtTable {
  VoigtTable(double gamma_, double sigma_) : gamma(gamma_), sigma(sigma_) {}

  double gamma;
  double sigma;
  std::once_flag once;
  double h = 0.0;
  double upper = 0.0;
  std::vector<double> v;  // nodes 0 .. N+2
  std::vector<double> c;  // cdf at nodes, c[0] = 0.5

  void ensure() {
    std::call_once(once, [this] { build(); });
  }

  void build() {
    upper = 40.0 * std::max(gamma, sigma);
    h = std::min(gamma, sigma) / 40.0;
    const double nodes = std::ceil(upper / h);
    if (nodes > 4.0e5)
      throw Unsupported("Voigt profile with Lorentz/Gauss width ratio beyond 1e4; use the dominant pure profile");
    const auto n = static_cast<std::size_t>(nodes);
    upper = static_cast<double>(n) * h;
    v.resize(n + 3);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = voigt_direct(static_cast<double>(i) * h, gamma, sigma);
    c.assign(n + 1, 0.5);
    for (std::size_t i = 0; i < n; ++i) {
      const double vm = i == 0 ? v[1] : v[i - 1];
      c[i + 1] = c[i] + h * (-vm + 13.0 * v[i] + 13.0 * v[i + 1] - v[i + 2]) / 24.0;
    }
  }

  double asymptotic(double z) const {
    const double g2 = gamma * gamma;
    const double z2 = z * z;
    const double d = z2 + g2;
    const double k = gamma / kPi;
    const double l0 = k / d;
    const double l2 = k * (6.0 * z2 - 2.0 * g2) / (d * d * d);
    const double l4 = k * 24.0 * (5.0 * z2 * z2 - 10.0 * z2 * g2 + g2 * g2) / (d * d * d * d * d);
    const double s2 = sigma * sigma;
    return l0 + 0.5 * s2 * l2 + s2 * s2 / 8.0 * l4;
  }

  // Mass above z > 0 from the same expansion.
  double upper_tail(double z) const {
    const double g2 = gamma * gamma;
    const double z2 = z * z;
    const double d = z2 + g2;
    const double k = gamma / kPi;
    const double l1 = -k * 2.0 * z / (d * d);
    const double l3 = k * 24.0 * z * (g2 - z2) / (d * d * d * d);
    const double s2 = sigma * sigma;
    return std::atan(gamma / z) / kPi - 0.5 * s2 * l1 - s2 * s2 / 8.0 * l3;
  }

  double value(double u) {
    ensure();
    const double a = std::abs(u);
    if (a >= upper) return asymptotic(a);
    const double t = a / h;
    const auto i = static_cast<std::size_t>(t);
    const double x = t - static_cast<double>(i);
    const double vm = i == 0 ? v[1] : v[i - 1];
    const double w_m = -x * (x - 1.0) * (x - 2.0) / 6.0;
    const double w_0 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
    const double w_1 = -(x + 1.0) * x * (x - 2.0) / 2.0;
    const double w_2 = (x + 1.0) * x * (x - 1.0) / 6.0;
    return std::max(0.0, w_m * vm + w_0 * v[i] + w_1 * v[i + 1] + w_2 * v[i + 2]);
  }

  double cdf(double u) {
    if (u < 0.0) return 1.0 - cdf(-u);
    ensure();
    if (u >= upper) return 1.0 - upper_tail(u);
    const double t = u / h;
    const auto i = static_cast<std::size_t>(t);
    const double x = t - static_cast<double>(i);
    const double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
    const double vm = i == 0 ? v[1] : v[i - 1];
    const double i_m = -(x4 / 4.0 - x3 + x2) / 6.0;
    const double i_0 = (x4 / 4.0 - 2.0 * x3 / 3.0 - x2 / 2.0 + 2.0 * x) / 2.0;
    const double i_1 = -(x4 / 4.0 - x3 / 3.0 - x2) / 2.0;
    const double i_2 = (x4 / 4.0 - x2 / 2.0) / 6.0;
    return c[i] + h * (i_m * vm + i_0 * v[i] + i_1 * v[i + 1] + i_2 * v[i + 2]);
  }
};

}  // namespace detail

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double voigt_gamma(const Voigt& v) { return 0.5 * v.fwhm_lorentz; }

double tabulated_value(const Tabulated& t, double u) {
  const Grid1D& g = t.table;
  const double pos = (u - g.start()) / g.step();
  if (!(pos > 0.0) || pos >= static_cast<double>(g.size() - 1)) return 0.0;
  const auto i = static_cast<std::size_t>(pos);
  const double x = pos - static_cast<double>(i);
  return g[i] + x * (g[i + 1] - g[i]);
}

double tabulated_cdf(const Tabulated& t, double u) {
  const Grid1D& g = t.table;
  const double pos = (u - g.start()) / g.step();
  if (!(pos > 0.0)) return 0.0;
  if (pos >= static_cast<double>(g.size() - 1)) return 1.0;
  const auto i = static_cast<std::size_t>(pos);
  const double x = pos - static_cast<double>(i);
  const double a = g[i], b = g[i + 1];
  return std::min(1.0, t.cumulative[i] + g.step() * (a * x + 0.5 * (b - a) * x * x));
}

double tabulated_fwhm(const Tabulated& t) {
  const Grid1D& g = t.table;
  const auto vals = g.values();
  const double peak = *std::max_element(vals.begin(), vals.end());
  const double half = 0.5 * peak;
  std::size_t first = 0, last = vals.size() - 1;
  while (first < vals.size() && vals[first] < half) ++first;
  while (last > 0 && vals[last] < half) --last;
  auto crossing = [&](std::size_t below, std::size_t above) {
    const double x0 = g.node(below), x1 = g.node(above);
    const double y0 = vals[below], y1 = vals[above];
    return x0 + (half - y0) / (y1 - y0) * (x1 - x0);
  };
  const double lo = first == 0 ? g.node(0) : crossing(first - 1, first);
  const double hi = last + 1 >= vals.size() ? g.node(vals.size() - 1) : crossing(last + 1, last);
  return std::max(hi - lo, g.step());
}

bool nearly(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

TailModel scaled(TailModel t, double factor) {
  t.amplitude *= factor;
  t.coefficient *= factor;
  return t;
}

// Limit of fn / tg as omega runs off to `side`.
double tail_ratio(const TailModel& fn, const TailModel& tg, Side side) {
  using K = TailModel::Kind;
  switch (tg.kind) {
    case K::Compact:
      return kInf;
    case K::Power:
      return fn.kind == K::Power ? fn.coefficient / tg.coefficient : 0.0;
    case K::Gaussian:
      break;
  }
  if (fn.kind == K::Power) return kInf;
  if (fn.kind == K::Compact) return 0.0;
  if (!nearly(fn.sigma, tg.sigma)) return fn.sigma > tg.sigma ? kInf : 0.0;
  const double dc = fn.center - tg.center;
  if (std::abs(dc) > 1e-12 * tg.sigma) {
    const bool outward = side == Side::Right ? dc > 0.0 : dc < 0.0;
    return outward ? kInf : 0.0;
  }
  return fn.amplitude / tg.amplitude;
}

}  // namespace

// ---------------------------------------------------------------------------

FilterProfile FilterProfile::top_hat(double width, double center) {
  if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("top-hat width must be positive");
  return FilterProfile(TopHat{width}, center);
}

FilterProfile FilterProfile::lorentzian(double fwhm, double center) {
  if (!(fwhm > 0.0) || !std::isfinite(fwhm)) throw ConfigError("Lorentzian FWHM must be positive");
  return FilterProfile(Lorentzian{fwhm}, center);
}

FilterProfile FilterProfile::gaussian(double sigma, double center) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("Gaussian sigma must be positive");
  return FilterProfile(Gaussian{sigma}, center);
}

FilterProfile FilterProfile::voigt(double fwhm_lorentz, double sigma_gauss, double center) {
  if (!(fwhm_lorentz >= 0.0) || !(sigma_gauss >= 0.0) || !(fwhm_lorentz + sigma_gauss > 0.0))
    throw ConfigError("Voigt widths must be non-negative and not both zero");
  if (sigma_gauss == 0.0) return lorentzian(fwhm_lorentz, center);
  if (fwhm_lorentz == 0.0) return gaussian(sigma_gauss, center);
  Voigt v{fwhm_lorentz, sigma_gauss,
          std::make_shared<detail::VoigtTable>(0.5 * fwhm_lorentz, sigma_gauss)};
  return FilterProfile(std::move(v), center);
}

FilterProfile FilterProfile::tabulated(std::span<const double> omega,
                                       std::span<const double> transmission, double center,
                                       double noise_floor_fraction) {
  if (omega.size() != transmission.size() || omega.size() < 3)
    throw InvalidDensity("tabulated profile needs at least 3 (omega, transmission) pairs");
  const double step = (omega.back() - omega.front()) / static_cast<double>(omega.size() - 1);
  if (!(step > 0.0)) throw InvalidDensity("tabulated profile: omega must increase");
  for (std::size_t i = 1; i < omega.size(); ++i) {
    if (std::abs(omega[i] - omega[i - 1] - step) > 1e-6 * step)
      throw InvalidDensity("tabulated profile: omega must be uniformly spaced (resample upstream)");
  }
  const double peak = *std::max_element(transmission.begin(), transmission.end());
  if (!(peak > 0.0)) throw InvalidDensity("tabulated profile has no positive transmission");
  const double floor = noise_floor_fraction * peak;
  std::vector<double> values;
  values.reserve(transmission.size() + 2);
  values.push_back(0.0);
  for (double t : transmission) values.push_back(t > floor ? t : 0.0);
  values.push_back(0.0);
  Grid1D table = Grid1D::normalized(omega.front() - center - step, step, std::move(values));
  std::vector<double> cum(table.size(), 0.0);
  for (std::size_t i = 1; i < table.size(); ++i)
    cum[i] = cum[i - 1] + 0.5 * step * (table[i - 1] + table[i]);
  return FilterProfile(Tabulated{std::move(table), std::move(cum)}, center);
}

FilterProfile FilterProfile::mean_of(std::vector<FilterProfile> components) {
  if (components.empty()) throw ConfigError("mean of an empty set of profiles");
  if (components.size() == 1) return components.front();
  double c = 0.0;
  for (const auto& p : components) c += p.center();
  c /= static_cast<double>(components.size());
  return FilterProfile(Mixture{std::make_shared<const std::vector<FilterProfile>>(std::move(components))}, c);
}

FilterProfile FilterProfile::with_center(double center) const {
  if (const auto* mix = std::get_if<Mixture>(&shape_)) {
    const double shift = center - center_;
    std::vector<FilterProfile> moved;
    moved.reserve(mix->components->size());
    for (const auto& p : *mix->components) moved.push_back(p.with_center(p.center() + shift));
    return FilterProfile(Mixture{std::make_shared<const std::vector<FilterProfile>>(std::move(moved))},
                         center);
  }
  return FilterProfile(shape_, center);
}

double FilterProfile::evaluate(double omega) const {
  const double u = omega - center_;
  return std::visit(
      Overloaded{
          [&](const TopHat& t) { return (u >= -0.5 * t.width && u < 0.5 * t.width) ? 1.0 / t.width : 0.0; },
          [&](const Lorentzian& l) { return lorentz(u, 0.5 * l.fwhm); },
          [&](const Gaussian& g) { return gauss(u, g.sigma); },
          [&](const Voigt& v) { return v.table->value(u); },
          [&](const Tabulated& t) { return tabulated_value(t, u); },
          [&](const Mixture& m) {
            double acc = 0.0;
            for (const auto& p : *m.components) acc += p.evaluate(omega);
            return acc / static_cast<double>(m.components->size());
          },
      },
      shape_);
}

double FilterProfile::log_evaluate(double omega) const {
  const double u = omega - center_;
  if (const auto* g = std::get_if<Gaussian>(&shape_))
    return -0.5 * (u / g->sigma) * (u / g->sigma) - std::log(g->sigma * kSqrt2Pi);
  if (const auto* m = std::get_if<Mixture>(&shape_)) {
    double best = -kInf;
    std::vector<double> logs;
    logs.reserve(m->components->size());
    for (const auto& p : *m->components) {
      logs.push_back(p.log_evaluate(omega));
      best = std::max(best, logs.back());
    }
    if (best == -kInf) return -kInf;
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - best);
    return best + std::log(acc / static_cast<double>(logs.size()));
  }
  const double v = evaluate(omega);
  return v > 0.0 ? std::log(v) : -kInf;
}

double FilterProfile::cdf(double omega) const {
  const double u = omega - center_;
  return std::visit(
      Overloaded{
          [&](const TopHat& t) { return std::clamp(u / t.width + 0.5, 0.0, 1.0); },
          [&](const Lorentzian& l) { return 0.5 + std::atan(2.0 * u / l.fwhm) / kPi; },
          [&](const Gaussian& g) { return 0.5 * std::erfc(-u / (g.sigma * std::numbers::sqrt2)); },
          [&](const Voigt& v) { return v.table->cdf(u); },
          [&](const Tabulated& t) { return tabulated_cdf(t, u); },
          [&](const Mixture& m) {
            double acc = 0.0;
            for (const auto& p : *m.components) acc += p.cdf(omega);
            return acc / static_cast<double>(m.components->size());
          },
      },
      shape_);
}

double FilterProfile::mass(double lo, double hi) const {
  if (!(hi > lo)) return 0.0;
  const double a = lo - center_, b = hi - center_;
  return std::visit(
      Overloaded{
          [&](const TopHat&) { return cdf(hi) - cdf(lo); },
          [&](const Lorentzian& l) { return lorentz_mass(a, b, 0.5 * l.fwhm); },
          [&](const Gaussian& g) { return gauss_mass(a, b, g.sigma); },
          [&](const Voigt& v) {
            const double h = std::min(0.5 * v.fwhm_lorentz, v.sigma_gauss) / 20.0;
            if (b - a <= 64.0 * h) {
              auto f = [&](double x) { return v.table->value(x); };
              return panel(f, a, b, h);
            }
            return v.table->cdf(b) - v.table->cdf(a);
          },
          [&](const Tabulated& t) { return tabulated_cdf(t, b) - tabulated_cdf(t, a); },
          [&](const Mixture& m) {
            double acc = 0.0;
            for (const auto& p : *m.components) acc += p.mass(lo, hi);
            return acc / static_cast<double>(m.components->size());
          },
      },
      shape_);
}

double FilterProfile::peak() const {
  return std::visit(
      Overloaded{
          [](const TopHat& t) { return 1.0 / t.width; },
          [](const Lorentzian& l) { return 2.0 / (kPi * l.fwhm); },
          [](const Gaussian& g) { return 1.0 / (g.sigma * kSqrt2Pi); },
          [](const Voigt& v) { return voigt_direct(0.0, voigt_gamma(v), v.sigma_gauss); },
          [](const Tabulated& t) {
            const auto vals = t.table.values();
            return *std::max_element(vals.begin(), vals.end());
          },
          [this](const Mixture& m) {
            double lo = kInf, hi = -kInf;
            for (const auto& p : *m.components) {
              lo = std::min(lo, p.center() - 2.0 * p.width());
              hi = std::max(hi, p.center() + 2.0 * p.width());
            }
            constexpr std::size_t kScan = 4001;
            const double step = (hi - lo) / static_cast<double>(kScan - 1);
            std::size_t best = 0;
            double best_v = -1.0;
            for (std::size_t i = 0; i < kScan; ++i) {
              const double v = evaluate(lo + static_cast<double>(i) * step);
              if (v > best_v) {
                best_v = v;
                best = i;
              }
            }
            const double x = lo + static_cast<double>(best) * step;
            auto neg = [this](double w) { return -evaluate(w); };
            const auto m2 = numeric::golden_section_min(neg, x - step, x + step, step * 1e-9);
            return std::max(best_v, -m2.value);
          },
      },
      shape_);
}

double FilterProfile::width() const {
  return std::visit(
      Overloaded{
          [](const TopHat& t) { return t.width; },
          [](const Lorentzian& l) { return l.fwhm; },
          [](const Gaussian& g) { return kFwhmPerSigma * g.sigma; },
          [](const Voigt& v) {
            const double fg = kFwhmPerSigma * v.sigma_gauss;
            return 0.5346 * v.fwhm_lorentz +
                   std::sqrt(0.2166 * v.fwhm_lorentz * v.fwhm_lorentz + fg * fg);
          },
          [](const Tabulated& t) { return tabulated_fwhm(t); },
          [](const Mixture& m) {
            double w = 0.0;
            for (const auto& p : *m.components) w = std::max(w, p.width());
            return w;
          },
      },
      shape_);
}

TailModel FilterProfile::tail(Side side) const {
  using K = TailModel::Kind;
  return std::visit(
      Overloaded{
          [](const TopHat&) { return TailModel{}; },
          [](const Tabulated&) { return TailModel{}; },
          [](const Lorentzian& l) {
            TailModel t;
            t.kind = K::Power;
            t.coefficient = l.fwhm / (2.0 * kPi);
            return t;
          },
          [](const Voigt& v) {
            TailModel t;
            t.kind = K::Power;
            t.coefficient = v.fwhm_lorentz / (2.0 * kPi);
            return t;
          },
          [this](const Gaussian& g) {
            TailModel t;
            t.kind = K::Gaussian;
            t.sigma = g.sigma;
            t.center = center_;
            t.amplitude = 1.0 / (g.sigma * kSqrt2Pi);
            return t;
          },
          [side](const Mixture& m) {
            const double share = 1.0 / static_cast<double>(m.components->size());
            std::vector<TailModel> tails;
            for (const auto& p : *m.components) tails.push_back(scaled(p.tail(side), share));
            TailModel out;
            for (const auto& t : tails) {
              if (t.kind == K::Power) {
                out.kind = K::Power;
                out.coefficient += t.coefficient;
              }
            }
            if (out.kind == K::Power) return out;
            for (const auto& t : tails) {
              if (t.kind != K::Gaussian) continue;
              if (out.kind != K::Gaussian || (t.sigma > out.sigma && !nearly(t.sigma, out.sigma))) {
                out = t;
                continue;
              }
              if (!nearly(t.sigma, out.sigma)) continue;
              const double dc = t.center - out.center;
              if (std::abs(dc) <= 1e-12 * out.sigma) {
                out.amplitude += t.amplitude;
              } else if (side == Side::Right ? dc > 0.0 : dc < 0.0) {
                out = t;
              }
            }
            return out;
          },
      },
      shape_);
}

bool FilterProfile::same_shape(const FilterProfile& other) const {
  if (kind() != other.kind()) return false;
  return std::visit(
      Overloaded{
          [&](const TopHat& t) { return t.width == std::get<TopHat>(other.shape_).width; },
          [&](const Lorentzian& l) { return l.fwhm == std::get<Lorentzian>(other.shape_).fwhm; },
          [&](const Gaussian& g) { return g.sigma == std::get<Gaussian>(other.shape_).sigma; },
          [&](const Voigt& v) {
            const auto& o = std::get<Voigt>(other.shape_);
            return v.fwhm_lorentz == o.fwhm_lorentz && v.sigma_gauss == o.sigma_gauss;
          },
          [&](const Tabulated& t) {
            const auto& o = std::get<Tabulated>(other.shape_).table;
            return t.table.start() == o.start() && t.table.step() == o.step() &&
                   std::equal(t.table.values().begin(), t.table.values().end(), o.values().begin(),
                              o.values().end());
          },
          [&](const Mixture& m) {
            const auto& o = *std::get<Mixture>(other.shape_).components;
            if (o.size() != m.components->size()) return false;
            for (std::size_t i = 0; i < o.size(); ++i) {
              const auto& p = (*m.components)[i];
              if (!p.same_shape(o[i]) || p.center() - center_ != o[i].center() - other.center_)
                return false;
            }
            return true;
          },
      },
      shape_);
}

std::string FilterProfile::describe() const {
  std::ostringstream os;
  os.precision(10);
  std::visit(Overloaded{
                 [&](const TopHat& t) { os << "top_hat(width=" << t.width; },
                 [&](const Lorentzian& l) { os << "lorentzian(fwhm=" << l.fwhm; },
                 [&](const Gaussian& g) { os << "gaussian(sigma=" << g.sigma; },
                 [&](const Voigt& v) {
                   os << "voigt(fwhm_lorentz=" << v.fwhm_lorentz << ", sigma_gauss=" << v.sigma_gauss;
                 },
                 [&](const Tabulated& t) { os << "tabulated(nodes=" << t.table.size(); },
                 [&](const Mixture& m) { os << "mixture(components=" << m.components->size(); },
             },
             shape_);
  os << ", center=" << center_ << ")";
  return os.str();
}

double evaluate(const FilterProfile& f, double omega) { return f.evaluate(omega); }

// ---------------------------------------------------------------------------

TopHatCheck majorized_by_tophat(const FilterProfile& f, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("top-hat spacing must be positive");
  const double margin = 1.0 / spacing - f.peak();
  if (const auto* t = std::get_if<Tabulated>(&f.shape())) {
    bool ok = true;
    for (const auto& pt : dominance_curve(t->table)) {
      if (pt.mass > std::min(pt.measure / spacing, 1.0) + kMajorizationSlack) {
        ok = false;
        break;
      }
    }
    return {ok, margin};
  }
  return {margin >= -kMajorizationSlack / spacing, margin};
}

double min_width_for_spacing(ProfileKind kind, double spacing, double voigt_sigma) {
  if (!(spacing > 0.0)) throw ConfigError("spacing must be positive");
  switch (kind) {
    case ProfileKind::TopHat:
      return spacing;
    case ProfileKind::Lorentzian:
      return 2.0 / kPi * spacing;
    case ProfileKind::Gaussian:
      return spacing / kSqrt2Pi;
    case ProfileKind::Voigt: {
      if (!(voigt_sigma >= 0.0)) throw ConfigError("Voigt sigma must be non-negative");
      if (voigt_sigma == 0.0) return 2.0 / kPi * spacing;
      if (1.0 / (voigt_sigma * kSqrt2Pi) <= 1.0 / spacing) return 0.0;
      auto excess = [&](double fwhm) {
        return voigt_direct(0.0, 0.5 * fwhm, voigt_sigma) * spacing - 1.0;
      };
      const double hi = 2.0 / kPi * spacing;
      // Bracket from below: shrink until the peak exceeds 1/spacing.
      double lo = hi * 0.5;
      while (excess(lo) <= 0.0 && lo > hi * 1e-12) lo *= 0.5;
      return numeric::bisect(excess, lo, hi, spacing * 1e-13);
    }
    case ProfileKind::Tabulated:
    case ProfileKind::Mixture:
      break;
  }
  throw Unsupported("min_width_for_spacing: use majorized_by_tophat for measured profiles");
}

// ---------------------------------------------------------------------------

FilterBank::FilterBank(std::vector<FilterProfile> profiles, double nominal_spacing,
                       std::vector<double> nominal_centers)
    : profiles_(std::move(profiles)), spacing_(nominal_spacing), nominal_(std::move(nominal_centers)) {
  if (profiles_.empty()) throw ConfigError("filter bank is empty");
  if (profiles_.size() != nominal_.size())
    throw ConfigError("filter bank: one nominal center per profile required");
  if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
    throw ConfigError("filter bank: nominal spacing must be positive");
  for (std::size_t i = 1; i < nominal_.size(); ++i) {
    if (!(nominal_[i] > nominal_[i - 1]))
      throw ConfigError("filter bank: nominal centers must be strictly increasing");
  }
}

FilterBank FilterBank::regular(const FilterProfile& prototype, double first_center, double spacing,
                               std::size_t count) {
  std::vector<FilterProfile> profiles;
  std::vector<double> centers;
  profiles.reserve(count);
  centers.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const double c = first_center + static_cast<double>(n) * spacing;
    centers.push_back(c);
    profiles.push_back(prototype.with_center(c));
  }
  return FilterBank(std::move(profiles), spacing, std::move(centers));
}

std::vector<double> FilterBank::offsets() const {
  std::vector<double> out(size());
  for (std::size_t n = 0; n < size(); ++n) out[n] = profiles_[n].center() - nominal_[n];
  return out;
}

FilterProfile FilterBank::relative_profile(std::size_t n) const {
  return profiles_.at(n).with_center(profiles_[n].center() - nominal_[n]);
}

double FilterBank::span_lo() const { return nominal_.front() - 0.5 * spacing_; }
double FilterBank::span_hi() const { return nominal_.back() + 0.5 * spacing_; }

double FilterBank::narrowest_width() const {
  double w = kInf;
  for (const auto& p : profiles_) w = std::min(w, p.width());
  return w;
}

bool FilterBank::uniform() const {
  const auto off = offsets();
  for (std::size_t n = 0; n < size(); ++n) {
    if (!profiles_[n].same_shape(profiles_[0])) return false;
    if (std::abs(off[n]) > 1e-12 * profiles_[n].width()) return false;
  }
  return true;
}

FilterProfile mean_filter(const FilterBank& bank) {
  if (bank.size() == 0) throw ConfigError("mean_filter: empty bank");
  std::vector<FilterProfile> rel;
  rel.reserve(bank.size());
  bool identical = true;
  for (std::size_t n = 0; n < bank.size(); ++n) {
    rel.push_back(bank.relative_profile(n));
    if (!rel.back().same_shape(rel.front()) || rel.back().center() != rel.front().center())
      identical = false;
  }
  if (identical) return rel.front();
  return FilterProfile::mean_of(std::move(rel));
}

// ---------------------------------------------------------------------------

namespace {

struct WindowGrid {
  double lo = 0.0;
  double step = 0.0;
  double half_width = 0.0;
  std::vector<double> target_log;
};

WindowGrid make_window(const FilterProfile& target, const WeightOptions& options) {
  if (options.grid_points < 3) throw ConfigError("weight search needs at least 3 grid points");
  WindowGrid w;
  w.half_width = options.window_widths * target.width();
  w.lo = target.center() - w.half_width;
  w.step = 2.0 * w.half_width / static_cast<double>(options.grid_points - 1);
  w.target_log.resize(options.grid_points);
  parallel_for(options.grid_points, [&](std::size_t i) {
    w.target_log[i] = target.log_evaluate(w.lo + static_cast<double>(i) * w.step);
  });
  return w;
}

FilterWeight weight_on_window(const FilterProfile& f_n, const FilterProfile& target,
                              const WindowGrid& w, const WeightOptions& options) {
  auto ratio = [&](double x) {
    const double lt = target.log_evaluate(x);
    if (lt == -kInf) return kInf;
    const double ln = f_n.log_evaluate(x);
    return ln == -kInf ? 0.0 : std::exp(ln - lt);
  };

  FilterWeight out;
  out.window_half_width = w.half_width;
  double best = kInf;
  std::size_t best_i = 0;
  bool any = false;
  for (std::size_t i = 0; i < w.target_log.size(); ++i) {
    const double lt = w.target_log[i];
    if (lt == -kInf) continue;
    any = true;
    const double ln = f_n.log_evaluate(w.lo + static_cast<double>(i) * w.step);
    const double r = ln == -kInf ? 0.0 : std::exp(ln - lt);
    if (r < best) {
      best = r;
      best_i = i;
    }
  }
  if (!any) throw DegenerateRatio("target profile vanishes on the whole search window", 0.0);
  out.value = best;
  out.location = w.lo + static_cast<double>(best_i) * w.step;
  if (best > 0.0 && best_i > 0 && best_i + 1 < w.target_log.size()) {
    const auto m = numeric::golden_section_min(ratio, out.location - w.step, out.location + w.step,
                                               w.step * 1e-6);
    if (m.value < out.value) {
      out.value = m.value;
      out.location = m.x;
    }
  }
  for (Side side : {Side::Left, Side::Right}) {
    const double lim = tail_ratio(f_n.tail(side), target.tail(side), side);
    if (lim < out.value) {
      out.value = lim;
      out.location = side == Side::Left ? -kInf : kInf;
      out.tail_limited = true;
    }
  }
  out.value = std::min(out.value, 1.0);
  if (!(out.value >= options.floor)) {
    std::ostringstream os;
    os << "filter weight " << out.value << " below floor " << options.floor
       << " (profile ratio decays too fast to bound)";
    throw DegenerateRatio(os.str(), out.value);
  }
  return out;
}

}  // namespace

FilterWeight filter_weight_detail(const FilterProfile& f_n, const FilterProfile& target,
                                  const WeightOptions& options) {
  const WindowGrid w = make_window(target, options);
  return weight_on_window(f_n, target, w, options);
}

double filter_weight(const FilterProfile& f_n, const FilterProfile& target, double search_window) {
  WeightOptions opts;
  opts.window_widths = search_window;
  return filter_weight_detail(f_n, target, opts).value;
}

WeightReport bank_weights(const FilterBank& bank, const WeightOptions& options) {
  WeightReport report;
  report.target = mean_filter(bank);
  const WindowGrid w = make_window(report.target, options);
  report.details.resize(bank.size());
  std::vector<std::size_t> failed(bank.size(), 0);
  std::vector<double> failed_value(bank.size(), 0.0);
  parallel_for(bank.size(), [&](std::size_t n) {
    try {
      report.details[n] = weight_on_window(bank.relative_profile(n), report.target, w, options);
    } catch (const DegenerateRatio& e) {
      failed[n] = 1;
      failed_value[n] = e.weight();
    }
  });
  for (std::size_t n = 0; n < bank.size(); ++n) {
    if (failed[n]) {
      std::ostringstream os;
      os << "filter " << n << ": weight " << failed_value[n] << " below floor " << options.floor
         << " (profile ratio decays too fast to bound)";
      throw DegenerateRatio(os.str(), failed_value[n], n);
    }
  }
  report.per_filter_w.resize(bank.size());
  report.w0 = kInf;
  for (std::size_t n = 0; n < bank.size(); ++n) {
    report.per_filter_w[n] = report.details[n].value;
    if (report.per_filter_w[n] < report.w0) {
      report.w0 = report.per_filter_w[n];
      report.argmin_index = n;
    }
  }
  return report;
}

double lorentzian_width_weight(double epsilon) {
  if (!(epsilon >= 0.0)) throw ConfigError("width excess epsilon must be non-negative");
  return 1.0 / (1.0 + epsilon);
}

double lorentzian_shift_weight(double delta_hwhm) {
  const double d = std::abs(delta_hwhm);
  return 1.0 + 0.5 * d * d - d * std::sqrt(1.0 + 0.25 * d * d);
}

double lorentzian_shift_weight_linear(double delta_hwhm) { return 1.0 - std::abs(delta_hwhm); }

}  // namespace entrocert
