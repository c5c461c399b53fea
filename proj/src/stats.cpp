#include "rgc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rgc {

namespace {

double mean_of(std::span<const double> v) {
  double m = 0.0;
  for (const double x : v) m += x;
  return m / static_cast<double>(v.size());
}

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("ibeta: continued fraction did not converge");
}

}  // namespace

double ibeta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) {
    throw std::invalid_argument("ibeta: a and b must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) -
                                std::lgamma(b) + a * std::log(x) +
                                b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (dof <= 0.0) throw std::invalid_argument("student_t_cdf: dof <= 0");
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * ibeta(0.5 * dof, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof) {
  if (p <= 0.0 || p >= 1.0) {
    throw std::invalid_argument("student_t_quantile: p must be in (0, 1)");
  }
  double lo = -1.0, hi = 1.0;
  while (student_t_cdf(lo, dof) > p) lo *= 2.0;
  while (student_t_cdf(hi, dof) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double f_sf(double f, double d1, double d2) {
  if (d1 <= 0.0 || d2 <= 0.0) throw std::invalid_argument("f_sf: bad dof");
  if (f <= 0.0) return 1.0;
  return ibeta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson: need equal lengths >= 2, got " +
                                std::to_string(x.size()) + " and " +
                                std::to_string(y.size()));
  }
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  const double rho = sxy / std::sqrt(sxx * syy);
  return {std::clamp(rho, -1.0, 1.0), false};
}

double mae(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw std::invalid_argument("mae: need equal non-empty lengths");
  }
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) s += std::fabs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

std::pair<double, double> ci95(std::span<const double> values) {
  const size_t r = values.size();
  if (r < 2) throw std::invalid_argument("ci95: need at least 2 values");
  const double m = mean_of(values);
  double ss = 0.0;
  for (const double v : values) ss += (v - m) * (v - m);
  const double s = std::sqrt(ss / static_cast<double>(r - 1));
  const double t = student_t_quantile(0.975, static_cast<double>(r - 1));
  const double half = t * s / std::sqrt(static_cast<double>(r));
  return {m - half, m + half};
}

namespace {

TestResult oneway_f(const std::vector<std::vector<double>>& groups,
                    const char* name) {
  const size_t k = groups.size();
  if (k < 2) {
    throw std::invalid_argument(std::string(name) + ": need >= 2 groups");
  }
  size_t total = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) {
      throw std::invalid_argument(std::string(name) +
                                  ": every group needs >= 2 values");
    }
    for (const double v : g) grand += v;
    total += g.size();
  }
  grand /= static_cast<double>(total);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean_of(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (const double v : g) ssw += (v - m) * (v - m);
  }
  if (ssw == 0.0) {
    throw std::invalid_argument(std::string(name) +
                                ": degenerate ANOVA, zero within-group variance");
  }
  const double d1 = static_cast<double>(k - 1);
  const double d2 = static_cast<double>(total - k);
  const double f = (ssb / d1) / (ssw / d2);
  return {f, f_sf(f, d1, d2)};
}

}  // namespace

TestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  return oneway_f(groups, "anova_oneway");
}

TestResult levene(const std::vector<std::vector<double>>& groups) {
  std::vector<std::vector<double>> z;
  z.reserve(groups.size());
  for (const auto& g : groups) {
    if (g.size() < 2) {
      throw std::invalid_argument("levene: every group needs >= 2 values");
    }
    const double m = mean_of(g);
    std::vector<double> zg;
    zg.reserve(g.size());
    for (const double v : g) zg.push_back(std::fabs(v - m));
    z.push_back(std::move(zg));
  }
  return oneway_f(z, "levene");
}

TestResult jarque_bera(std::span<const double> residuals) {
  const size_t n = residuals.size();
  if (n < 4) throw std::invalid_argument("jarque_bera: need >= 4 values");
  const double m = mean_of(residuals);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const double v : residuals) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  if (m2 == 0.0) {
    throw std::invalid_argument("jarque_bera: degenerate constant sample");
  }
  const double skew = m3 / std::pow(m2, 1.5);
  const double kurt = m4 / (m2 * m2);
  const double jb = static_cast<double>(n) / 6.0 *
                    (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
  return {jb, std::exp(-0.5 * jb)};
}

double relative_diff(double rho_clean, double rho_noisy) {
  if (rho_clean == 0.0) {
    throw std::invalid_argument("relative_diff: clean score is zero");
  }
  return 100.0 * (rho_noisy - rho_clean) / rho_clean;
}

}  // namespace rgc
