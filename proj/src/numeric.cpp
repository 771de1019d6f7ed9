#include "alleles/numeric.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace alleles {

double erfcx(double z) {
  if (z < 0.0) throw std::domain_error("erfcx: negative argument");
  if (z < 10.0) return std::exp(z * z) * std::erfc(z);
  // Asymptotic series 1/(z sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2z^2)^k.
  const double w = 1.0 / (2.0 * z * z);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    term *= -(2.0 * k - 1.0) * w;
    sum += term;
    if (std::abs(term) < 1e-17) break;
  }
  return sum / (z * std::sqrt(M_PI));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

// One 7/15-point Gauss-Kronrod panel on [a, b].
Piece panel(const std::function<double(double)>& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  // Kronrod abscissae: x[0] = 0, odd indices are the Gauss points.
  const double f0 = f(mid);
  double kronrod = wk[0] * f0;
  double gauss = wg[0] * f0;
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double s = f(mid - half * xk[i]) + f(mid + half * xk[i]);
    kronrod += wk[i] * s;
    if (i % 2 == 0) gauss += wg[i / 2] * s;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, abs_tol);
  std::function<double(double)> g = f;
  if (std::isinf(b)) {
    // y = a + t / (1 - t) maps [0, 1) onto [a, inf).
    g = [&f, a](double t) {
      const double u = 1.0 - t;
      return f(a + t / u) / (u * u);
    };
    a = 0.0;
    b = 1.0;
  }
  // Global adaptive refinement: always split the panel with the largest error.
  std::priority_queue<Piece> pieces;
  Piece first = panel(g, a, b);
  double total = first.value, error = first.error;
  pieces.push(first);
  constexpr int kMaxPanels = 20000;
  for (int n = 1; n < kMaxPanels && error > abs_tol; ++n) {
    const Piece worst = pieces.top();
    pieces.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // no room left to split
    const Piece left = panel(g, worst.a, mid);
    const Piece right = panel(g, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    pieces.push(left);
    pieces.push(right);
  }
  return total;
}

double integrate_sqrt_substituted(const std::function<double(double)>& f, double a, double b, double abs_tol) {
  if (a < 0.0) throw std::domain_error("integrate_sqrt_substituted: lower limit below 0");
  const double sa = std::sqrt(a);
  const double sb = std::isinf(b) ? std::numeric_limits<double>::infinity() : std::sqrt(b);
  return integrate([&](double s) { return 2.0 * s * f(s * s); }, sa, sb, abs_tol);
}

}  // namespace alleles
