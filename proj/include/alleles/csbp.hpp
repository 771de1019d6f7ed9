#pragma once

#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "alleles/offspring.hpp"
#include "alleles/random.hpp"
#include "alleles/vertex_tree.hpp"

namespace alleles {

/// nu(dy) = c (2 pi sigma^2 y^3)^{-1/2} exp(-c^2 y / (2 sigma^2)) dy on (0, inf).
/// The inverse Gaussian subordinator tau has Levy measure nu / c and
/// Laplace exponent kappa.
class LevyMeasure {
 public:
  /// Throws DomainError unless c > 0 and sigma2 > 0, and if the numerical
  /// check of int (1 ^ y) nu(dy) < inf fails.
  LevyMeasure(double c, double sigma2);

  double c() const { return c_; }
  double sigma2() const { return sigma2_; }
  /// c^2 / (2 sigma^2), the exponential decay rate of the density.
  double beta() const { return beta_; }

  double density(double y) const;
  /// nu((y, inf)); DomainError for y <= 0.
  double tail(double y) const;
  /// kappa(q) = (sqrt(c^2 + 2 q sigma^2) - c) / sigma^2.
  double cumulant(double q) const;
  /// int_0^eps y nu(dy) = erf(sqrt(beta eps)).
  double small_jump_mass(double eps) const;

  /// Smallest y > eps with tail(y) <= target, for 0 < target <= tail(eps),
  /// by bracketed root finding in log y.
  double inverse_tail(double target, double eps) const;

  // Law of tau_x: inverse Gaussian with mean x / c and shape x^2 / sigma^2.
  double tau_density(double x, double y) const;
  double tau_cdf(double x, double y) const;
  double tau_mean(double x) const { return x / c_; }
  double tau_variance(double x) const { return x * sigma2_ / (c_ * c_ * c_); }

 private:
  double c_;
  double sigma2_;
  double beta_;
  double scale_;  // c / sqrt(2 pi sigma^2)
};

// Quadrature oracles for the closed forms above.
double tail_by_quadrature(const LevyMeasure& m, double y);
/// int (1 - e^{-qy}) c^{-1} nu(dy).
double cumulant_by_quadrature(const LevyMeasure& m, double q);
double tau_density_integral(const LevyMeasure& m, double x);
double tau_cdf_by_quadrature(const LevyMeasure& m, double x, double y);

/// One draw of tau_x (Michael-Schucany-Haas transform); x > 0.
double sample_tau(const LevyMeasure& m, double x, Rng& rng);

struct AtomSample {
  std::vector<double> atoms;  // largest first, at most top_j of them
  std::uint64_t count;        // number of atoms above eps
  double sum;                 // sum of all atoms above eps
};

/// Atoms above eps of a Poisson random measure with intensity mass * nu.
AtomSample sample_atoms(const LevyMeasure& m, double mass, double eps, std::size_t top_j, Rng& rng);

/// (Z_0, ..., Z_steps) with Z_{k+1} | Z_k = y distributed as tau_{c y}.
std::vector<double> sample_csbp_chain(const LevyMeasure& m, double z0, std::size_t steps, Rng& rng);

struct FixedRoot {
  double mass;
};
struct TauRoot {
  double x;
};
using RootLaw = std::variant<FixedRoot, TauRoot>;

inline constexpr std::size_t kDefaultTopJ = 64;
inline constexpr std::size_t kDefaultNodeCap = 1'000'000;

/// Tree-indexed CSBP truncated to atoms above epsilon and to the top_j
/// largest children of each vertex.
struct CsbpTree {
  VertexTree<double> tree;
  double epsilon;
  std::size_t top_j;
  /// int_0^eps y nu(dy): expected mass per unit parent mass lost below eps.
  double m_eps;
  /// Per node: number of atoms above eps among its children and their sum
  /// (before the top_j cut). Zero on the last level.
  std::vector<std::uint64_t> atom_count;
  std::vector<double> atom_sum;
};

/// Definition-based sampler: children of u are the atoms of a Poisson
/// measure with intensity Z_u nu, level by level down to `depth`.
CsbpTree sample_tree(const LevyMeasure& m, const RootLaw& root, std::size_t depth, double eps, std::size_t top_j,
                     Rng& rng, std::size_t node_cap = kDefaultNodeCap);

/// Breadth-first construction from one path of the subordinator with Levy
/// measure nu / c restricted to (eps, inf). The root is the sum of jumps on
/// (0, x] plus the compensating drift x m_eps / c; the children of each
/// stored vertex, in breadth-first order, are the jumps on the next interval
/// of length c * Z_u.
CsbpTree sample_tree_via_subordinator(const LevyMeasure& m, double x, std::size_t depth, double eps,
                                      std::size_t top_j, Rng& rng, std::size_t node_cap = kDefaultNodeCap,
                                      double max_horizon = 1e9);

}  // namespace alleles
