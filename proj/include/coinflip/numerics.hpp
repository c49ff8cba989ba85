#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "coinflip/rational.hpp"
#include "coinflip/rng.hpp"

namespace coinflip {

struct SampledInequalityReport {
  std::uint64_t trials = 0;
  std::uint64_t violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  std::string ranges;

  bool pass() const { return violations == 0; }
};

// LHS - RHS of
//   p0·x^{k+1}/Πa_i + p1·y^{k+1}/Πb_i  >=  (p0x + p1y)^{k+1} / Π(p0a_i + p1b_i).
inline Rational check_calculus1(const Rational& x, const Rational& y, const std::vector<Rational>& a,
                                const std::vector<Rational>& b, const Rational& p0) {
  const std::size_t k = a.size();
  if (k < 1 || b.size() != k) throw std::invalid_argument("calculus1: need k >= 1 and |a| = |b| = k");
  if (x < 0 || x > 1 || y < 0 || y > 1) throw std::invalid_argument("calculus1: x, y must lie in [0,1]");
  if (p0 < 0 || p0 > 1) throw std::invalid_argument("calculus1: p0 must lie in [0,1]");
  for (std::size_t i = 0; i < k; ++i)
    if (a[i] <= 0 || a[i] > 1 || b[i] <= 0 || b[i] > 1)
      throw std::invalid_argument("calculus1: a_i, b_i must lie in (0,1]");
  Rational p1 = 1 - p0, pa = 1, pb = 1, pm = 1;
  for (std::size_t i = 0; i < k; ++i) {
    pa *= a[i];
    pb *= b[i];
    pm *= p0 * a[i] + p1 * b[i];
  }
  auto e = static_cast<unsigned long>(k + 1);
  Rational lhs = p0 * pow(x, e) / pa + p1 * pow(y, e) / pb;
  Rational rhs = pow(p0 * x + p1 * y, e) / pm;
  return lhs - rhs;
}

// Random exact-rational audit of calculus1 with denominators up to `den`.
inline SampledInequalityReport audit_calculus1(std::uint64_t trials, std::uint64_t seed, int max_k = 4,
                                               long den = 64) {
  SampledInequalityReport rep;
  rep.ranges = "k in [1," + std::to_string(max_k) + "], grid 1/" + std::to_string(den);
  Rng rng(seed);
  auto unit = [&](bool positive) {
    long lo = positive ? 1 : 0;
    long n = lo + static_cast<long>(uniform_below(rng, static_cast<std::uint64_t>(den - lo + 1)));
    return make_rational(n, den);
  };
  for (std::uint64_t t = 0; t < trials; ++t) {
    int k = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(max_k)));
    std::vector<Rational> a, b;
    for (int i = 0; i < k; ++i) {
      a.push_back(unit(true));
      b.push_back(unit(true));
    }
    Rational s = check_calculus1(unit(false), unit(false), a, b, unit(false));
    ++rep.trials;
    if (s < 0) ++rep.violations;
    rep.worst_slack = std::min(rep.worst_slack, to_double(s));
  }
  return rep;
}

// Slack (RHS - LHS) of λ·a1^{1+α}(2 - a1·x) + a2^{1+α}(2 - a2·x) <= (1+λ)(2 - x).
inline long double calculus2_slack(long double alpha, long double x, long double lambda, long double y) {
  long double a1 = 1 + y, a2 = 1 - lambda * y;
  long double lhs = lambda * std::pow(a1, 1 + alpha) * (2 - a1 * x) + std::pow(a2, 1 + alpha) * (2 - a2 * x);
  return (1 + lambda) * (2 - x) - lhs;
}

struct Calculus2Grid {
  int x_points = 33;
  int lambda_exp = 8;   // λ ∈ {0} ∪ {2^-e .. 2^e}
  int y_points = 33;    // y ∈ [0, min(1/λ, y_cap)]
  double y_cap = 64;
  long double tolerance = 1e-12L;
};

struct FindAlphaReport {
  bool ok = false;
  double alpha = 0;
  std::uint64_t points = 0;
  double worst_slack = 0;  // at the returned α
};

inline bool calculus2_holds(long double alpha, double delta, const Calculus2Grid& g, std::uint64_t* points,
                            double* worst) {
  std::uint64_t n = 0;
  long double w = std::numeric_limits<long double>::infinity();
  bool ok = true;
  std::vector<long double> lambdas{0};
  for (int e = -g.lambda_exp; e <= g.lambda_exp; ++e) lambdas.push_back(std::ldexp(1.0L, e));
  for (int i = 0; i < g.x_points; ++i) {
    long double x = delta + (1 - delta) * i / (g.x_points - 1);
    for (long double lam : lambdas) {
      long double ymax = lam == 0 ? g.y_cap : std::min<long double>(1 / lam, g.y_cap);
      for (int j = 0; j < g.y_points; ++j) {
        long double y = ymax * j / (g.y_points - 1);
        long double s = calculus2_slack(alpha, x, lam, y);
        long double scale = 1 + std::fabs((1 + lam) * (2 - x));
        ++n;
        w = std::min(w, s / scale);
        if (s < -g.tolerance * scale) ok = false;
      }
    }
  }
  if (points) *points = n;
  if (worst) *worst = static_cast<double>(w);
  return ok;
}

// Largest α in (0,1] passing the grid, by bisection on log2(α) down to 2^-20.
// This is a grid certificate, not a proof.
inline FindAlphaReport find_alpha(double delta, const Calculus2Grid& grid = {}) {
  if (!(delta > 0 && delta <= 0.5)) throw std::invalid_argument("find_alpha: delta must lie in (0, 1/2]");
  FindAlphaReport rep;
  auto holds = [&](long double a) { return calculus2_holds(a, delta, grid, nullptr, nullptr); };
  if (!holds(std::ldexp(1.0L, -20))) {
    calculus2_holds(std::ldexp(1.0L, -20), delta, grid, &rep.points, &rep.worst_slack);
    return rep;
  }
  long double lo = -20, hi = 0;
  if (holds(1)) {
    lo = 0;
  } else {
    for (int it = 0; it < 40; ++it) {
      long double mid = (lo + hi) / 2;
      if (holds(std::exp2(mid))) lo = mid;
      else hi = mid;
    }
  }
  rep.ok = true;
  rep.alpha = static_cast<double>(std::exp2(lo));
  calculus2_holds(std::exp2(lo), delta, grid, &rep.points, &rep.worst_slack);
  return rep;
}

using Distribution = std::vector<Rational>;

inline void check_distribution(const Distribution& p) {
  Rational s;
  for (const auto& x : p) {
    if (x < 0) throw std::invalid_argument("negative probability");
    s += x;
  }
  if (s != 1) throw std::invalid_argument("probabilities do not sum to 1");
}

inline Rational statistical_distance(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw std::invalid_argument("support size mismatch");
  Rational s;
  for (std::size_t i = 0; i < p.size(); ++i) s += abs(p[i] - q[i]);
  return s / 2;
}

// Joint distribution R[x][y]: diagonal mass min(P,Q), the rest a product of residuals.
inline std::vector<std::vector<Rational>> optimal_coupling(const Distribution& p, const Distribution& q) {
  check_distribution(p);
  check_distribution(q);
  if (p.size() != q.size()) throw std::invalid_argument("support size mismatch");
  const std::size_t n = p.size();
  std::vector<std::vector<Rational>> r(n, std::vector<Rational>(n));
  std::vector<Rational> rp(n), rq(n);
  Rational mu;
  for (std::size_t i = 0; i < n; ++i) {
    Rational m = std::min(p[i], q[i]);
    r[i][i] = m;
    mu += m;
    rp[i] = p[i] - m;
    rq[i] = q[i] - m;
  }
  Rational rest = 1 - mu;
  if (rest == 0) return r;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (rp[i] != 0 && rq[j] != 0) r[i][j] += rp[i] * rq[j] / rest;
  return r;
}

inline Rational disagreement(const std::vector<std::vector<Rational>>& r) {
  Rational s;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < r[i].size(); ++j)
      if (i != j) s += r[i][j];
  return s;
}

// Least t with t >= ln(2/γ) / (2ε²).
inline std::uint64_t hoeffding_samples(double eps, double gamma) {
  if (!(eps > 0 && eps < 1) || !(gamma > 0 && gamma < 1))
    throw std::invalid_argument("hoeffding_samples: eps and gamma must lie in (0,1)");
  long double t = std::log(2.0L / gamma) / (2.0L * eps * eps);
  return static_cast<std::uint64_t>(std::ceil(t));
}

// Radius ε with n = ln(2/γ)/(2ε²).
inline double hoeffding_radius(std::uint64_t n, double gamma = 0.01) {
  if (n == 0) return 1;
  return std::sqrt(std::log(2.0 / gamma) / (2.0 * static_cast<double>(n)));
}

}  // namespace coinflip
