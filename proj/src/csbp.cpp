#include "alleles/csbp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "alleles/numeric.hpp"

namespace alleles {

namespace {

constexpr double kRootTolerance = 1e-10;

// 1 - sqrt(pi) z erfcx(z), switching to its asymptotic series where the
// difference cancels badly.
double tail_bracket(double z) {
  if (z < 6.0) return 1.0 - std::sqrt(M_PI) * z * erfcx(z);
  const double w = 1.0 / (2.0 * z * z);
  double term = -1.0, sum = 0.0;
  for (int k = 1; k < 40; ++k) {
    term *= -(2.0 * k - 1.0) * w;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

LevyMeasure::LevyMeasure(double c, double sigma2) : c_(c), sigma2_(sigma2) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("LevyMeasure: c must be positive");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw DomainError("LevyMeasure: sigma2 must be positive");
  beta_ = c * c / (2.0 * sigma2);
  scale_ = c / std::sqrt(2.0 * M_PI * sigma2);
  // int (1 ^ y) nu(dy) = int_0^1 y nu(dy) + tail(1), checked numerically.
  const double near = integrate_sqrt_substituted([&](double y) { return y * density(y); }, 0.0, 1.0, 1e-12);
  const double far = integrate([&](double y) { return density(y); }, 1.0, std::numeric_limits<double>::infinity(), 1e-12);
  if (!std::isfinite(near + far) || std::abs(near - small_jump_mass(1.0)) > 1e-8 || std::abs(far - tail(1.0)) > 1e-8) {
    throw DomainError("LevyMeasure: int (1 ^ y) nu(dy) failed the numerical check");
  }
}

double LevyMeasure::density(double y) const {
  if (!(y > 0.0)) return 0.0;
  return scale_ * std::exp(-beta_ * y) / (y * std::sqrt(y));
}

double LevyMeasure::tail(double y) const {
  if (!(y > 0.0)) throw DomainError("levy_tail: y must be positive");
  if (std::isinf(y)) return 0.0;
  return 2.0 * scale_ * std::exp(-beta_ * y) / std::sqrt(y) * tail_bracket(std::sqrt(beta_ * y));
}

double LevyMeasure::cumulant(double q) const {
  if (!(q >= 0.0)) throw DomainError("cumulant: q must be nonnegative");
  // Rationalised form of (sqrt(c^2 + 2 q sigma^2) - c) / sigma^2.
  return 2.0 * q / (std::sqrt(c_ * c_ + 2.0 * q * sigma2_) + c_);
}

double LevyMeasure::small_jump_mass(double eps) const {
  if (!(eps >= 0.0)) throw DomainError("small_jump_mass: eps must be nonnegative");
  return std::erf(std::sqrt(beta_ * eps));
}

double LevyMeasure::inverse_tail(double target, double eps) const {
  const double top = tail(eps);
  if (!(target > 0.0) || target > top) throw DomainError("inverse_tail: target outside (0, tail(eps)]");
  if (target == top) return eps;
  // log tail(e^t) - log target, computed without underflow.
  const double log_target = std::log(target);
  auto f = [&](double t) {
    const double y = std::exp(t);
    return std::log(2.0 * scale_) - 0.5 * t - beta_ * y + std::log(tail_bracket(std::sqrt(beta_ * y))) - log_target;
  };
  double lo = std::log(eps), hi = lo + 1.0;
  double f_lo = f(lo), f_hi = f(hi);
  for (double step = 1.0; f_hi > 0.0; step *= 2.0) {
    lo = hi;
    f_lo = f_hi;
    hi += step;
    f_hi = f(hi);
  }
  if (f_lo <= 0.0) return std::exp(lo);
  std::uintmax_t iterations = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= kRootTolerance; };
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iterations);
  return std::exp(0.5 * (a + b));
}

double LevyMeasure::tau_density(double x, double y) const {
  if (!(x > 0.0)) throw DomainError("tau_density: x must be positive");
  if (!(y > 0.0)) return 0.0;
  const double d = c_ * y - x;
  return x / std::sqrt(2.0 * M_PI * sigma2_ * y * y * y) * std::exp(-d * d / (2.0 * sigma2_ * y));
}

double LevyMeasure::tau_cdf(double x, double y) const {
  if (!(x > 0.0)) throw DomainError("tau_cdf: x must be positive");
  if (!(y > 0.0)) return 0.0;
  if (std::isinf(y)) return 1.0;
  const double mu = x / c_;
  const double lambda = x * x / sigma2_;
  const double r = std::sqrt(lambda / y);
  const double first = normal_cdf(r * (y / mu - 1.0));
  // exp(2 lambda / mu) Phi(-r (y/mu + 1)), rewritten to avoid overflow.
  const double z = r * (y / mu + 1.0) / std::sqrt(2.0);
  const double second = 0.5 * std::exp(-lambda * (y - mu) * (y - mu) / (2.0 * mu * mu * y)) * erfcx(z);
  return std::clamp(first + second, 0.0, 1.0);
}

double tail_by_quadrature(const LevyMeasure& m, double y) {
  if (!(y > 0.0)) throw DomainError("tail_by_quadrature: y must be positive");
  return integrate([&](double s) { return m.density(s); }, y, std::numeric_limits<double>::infinity(), 1e-13);
}

double cumulant_by_quadrature(const LevyMeasure& m, double q) {
  // (1 - e^{-qy}) y^{-3/2} ~ q y^{-1/2} near 0.
  auto f = [&](double y) { return -std::expm1(-q * y) * m.density(y) / m.c(); };
  return integrate_sqrt_substituted(f, 0.0, 1.0, 1e-12) +
         integrate(f, 1.0, std::numeric_limits<double>::infinity(), 1e-12);
}

double tau_density_integral(const LevyMeasure& m, double x) {
  auto f = [&](double y) { return m.tau_density(x, y); };
  const double mean = m.tau_mean(x);
  return integrate(f, 0.0, mean, 1e-12) + integrate(f, mean, std::numeric_limits<double>::infinity(), 1e-12);
}

double tau_cdf_by_quadrature(const LevyMeasure& m, double x, double y) {
  if (!(y > 0.0)) return 0.0;
  auto f = [&](double s) { return m.tau_density(x, s); };
  const double mean = m.tau_mean(x);
  if (y <= mean) return integrate(f, 0.0, y, 1e-13);
  return integrate(f, 0.0, mean, 1e-13) + integrate(f, mean, y, 1e-13);
}

double sample_tau(const LevyMeasure& m, double x, Rng& rng) {
  if (!(x > 0.0)) throw DomainError("sample_tau: x must be positive");
  const double mu = m.tau_mean(x);
  const double lambda = x * x / m.sigma2();
  std::normal_distribution<double> normal;
  const double v = normal(rng);
  const double w = mu * v * v / (2.0 * lambda);
  // Smaller root of the quadratic, in a form free of cancellation.
  const double x1 = mu / (1.0 + w + std::sqrt(w * w + 2.0 * w));
  return uniform01(rng) * (mu + x1) <= mu ? x1 : mu * mu / x1;
}

namespace {

double sample_jump(const LevyMeasure& m, double eps, double tail_eps, Rng& rng) {
  const double u = 1.0 - uniform01(rng);  // (0, 1]
  return m.inverse_tail(u * tail_eps, eps);
}

}  // namespace

AtomSample sample_atoms(const LevyMeasure& m, double mass, double eps, std::size_t top_j, Rng& rng) {
  if (!(mass > 0.0)) throw DomainError("sample_atoms: mass must be positive");
  if (!(eps > 0.0)) throw DomainError("sample_atoms: eps must be positive");
  const double tail_eps = m.tail(eps);
  std::poisson_distribution<std::uint64_t> count(mass * tail_eps);
  AtomSample out{{}, count(rng), 0.0};
  out.atoms.reserve(out.count);
  for (std::uint64_t i = 0; i < out.count; ++i) out.atoms.push_back(sample_jump(m, eps, tail_eps, rng));
  std::sort(out.atoms.begin(), out.atoms.end(), std::greater<>());
  for (double a : out.atoms) out.sum += a;
  if (out.atoms.size() > top_j) out.atoms.resize(top_j);
  return out;
}

std::vector<double> sample_csbp_chain(const LevyMeasure& m, double z0, std::size_t steps, Rng& rng) {
  if (!(z0 > 0.0)) throw DomainError("sample_csbp_chain: z0 must be positive");
  std::vector<double> z{z0};
  z.reserve(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) z.push_back(sample_tau(m, m.c() * z.back(), rng));
  return z;
}

namespace {

// Builds the tree breadth first. children_of(mass) returns the atoms of a
// new vertex; it is called exactly once per stored vertex above the last
// level, in breadth-first order.
template <class ChildrenOf>
CsbpTree build_tree(const LevyMeasure& m, double root_mass, std::size_t depth, double eps, std::size_t top_j,
                    std::size_t node_cap, ChildrenOf&& children_of) {
  CsbpTree out;
  out.epsilon = eps;
  out.top_j = top_j;
  out.m_eps = m.small_jump_mass(eps);
  out.tree.depth_limit = depth;

  std::deque<std::vector<double>> pending;  // atoms of stored vertices, not yet expanded
  auto open = [&](double mass, std::size_t level) {
    if (level >= depth) {
      out.atom_count.push_back(0);
      out.atom_sum.push_back(0.0);
      pending.emplace_back();
      return std::uint64_t{0};
    }
    AtomSample s = children_of(mass);
    out.atom_count.push_back(s.count);
    out.atom_sum.push_back(s.sum);
    pending.push_back(std::move(s.atoms));
    return static_cast<std::uint64_t>(pending.back().size());
  };

  const auto root_degree = open(root_mass, 0);
  out.tree.add_root(root_mass, root_degree);
  std::vector<VertexTree<double>::Child> block;
  for (std::size_t i = 0; i < out.tree.size(); ++i) {
    std::vector<double> atoms = std::move(pending.front());
    pending.pop_front();
    if (atoms.empty()) continue;
    if (out.tree.size() + atoms.size() > node_cap) {
      throw std::length_error("csbp tree: node cap " + std::to_string(node_cap) + " exceeded");
    }
    const std::size_t level = out.tree.node(i).level + 1;
    block.clear();
    for (double a : atoms) block.push_back({a, open(a, level)});
    out.tree.append_children(i, block);
  }
  return out;
}

void check_tree_args(double eps, double x) {
  if (!(eps > 0.0)) throw DomainError("csbp tree: epsilon must be positive");
  if (!(x > 0.0)) throw DomainError("csbp tree: root parameter must be positive");
}

}  // namespace

CsbpTree sample_tree(const LevyMeasure& m, const RootLaw& root, std::size_t depth, double eps, std::size_t top_j,
                     Rng& rng, std::size_t node_cap) {
  double root_mass = 0.0;
  if (const auto* fixed = std::get_if<FixedRoot>(&root)) {
    check_tree_args(eps, fixed->mass);
    root_mass = fixed->mass;
  } else {
    const double x = std::get<TauRoot>(root).x;
    check_tree_args(eps, x);
    root_mass = sample_tau(m, x, rng);
  }
  return build_tree(m, root_mass, depth, eps, top_j, node_cap,
                    [&](double mass) { return sample_atoms(m, mass, eps, top_j, rng); });
}

namespace {

// Jumps above eps of the subordinator with Levy measure nu / c, revealed in
// time order as the horizon grows.
class JumpPath {
 public:
  JumpPath(const LevyMeasure& m, double eps, double max_horizon, Rng& rng)
      : m_(m), eps_(eps), tail_eps_(m.tail(eps)), max_horizon_(max_horizon), rng_(rng),
        gap_(tail_eps_ / m.c()) {
    next_ = gap_(rng_);
  }

  /// Jumps on (horizon, horizon + length]; advances the horizon.
  std::vector<double> advance(double length) {
    const double end = horizon_ + length;
    if (end > max_horizon_) throw std::length_error("subordinator: horizon guard exceeded");
    std::vector<double> jumps;
    while (next_ <= end) {
      jumps.push_back(sample_jump(m_, eps_, tail_eps_, rng_));
      next_ += gap_(rng_);
    }
    horizon_ = end;
    return jumps;
  }

 private:
  const LevyMeasure& m_;
  double eps_;
  double tail_eps_;
  double max_horizon_;
  Rng& rng_;
  std::exponential_distribution<double> gap_;
  double horizon_ = 0.0;
  double next_ = 0.0;
};

}  // namespace

CsbpTree sample_tree_via_subordinator(const LevyMeasure& m, double x, std::size_t depth, double eps, std::size_t top_j,
                                      Rng& rng, std::size_t node_cap, double max_horizon) {
  check_tree_args(eps, x);
  JumpPath path(m, eps, max_horizon, rng);
  double root_mass = x * m.small_jump_mass(eps) / m.c();
  for (double j : path.advance(x)) root_mass += j;
  return build_tree(m, root_mass, depth, eps, top_j, node_cap, [&](double mass) {
    AtomSample s{path.advance(m.c() * mass), 0, 0.0};
    s.count = s.atoms.size();
    std::sort(s.atoms.begin(), s.atoms.end(), std::greater<>());
    for (double a : s.atoms) s.sum += a;
    if (s.atoms.size() > top_j) s.atoms.resize(top_j);
    return s;
  });
}

}  // namespace alleles
