#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "alleles/offspring.hpp"
#include "alleles/rational.hpp"

namespace alleles {

/// Thrown when an iterative computation fails to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense pmf over (clones k, mutants l) with k <= max_k and l <= max_l.
template <class T>
struct JointPmf {
  std::size_t max_k = 0;
  std::size_t max_l = 0;
  std::vector<T> cells;  // row-major: cells[k * (max_l + 1) + l]
  /// Mass of sums with clone index beyond the retained support.
  T discarded = T(0);

  const T& at(std::size_t k, std::size_t l) const { return cells[k * (max_l + 1) + l]; }
  T get(std::size_t k, std::size_t l) const { return k <= max_k && l <= max_l ? at(k, l) : T(0); }
};

/// Law of (T_0, M_1) under P_ancestors on a <= n <= n_max.
template <class T>
struct JointPmfTable {
  std::uint64_t ancestors = 0;
  std::map<std::pair<std::uint64_t, std::uint64_t>, T> entries;  // (n, l) -> probability
  /// 1 - sum of entries: the mass not enumerated.
  T truncation_bound = T(1);

  T get(std::uint64_t n, std::uint64_t l) const {
    auto it = entries.find({n, l});
    return it == entries.end() ? T(0) : it->second;
  }
  T total() const {
    T s = T(0);
    for (const auto& [key, p] : entries) s += p;
    return s;
  }
};

/// Nonzero cells of the law in the requested arithmetic. The Rational
/// variant needs a law built from exact probabilities.
template <class T>
std::vector<std::tuple<std::size_t, std::size_t, T>> law_cells(const MarkedOffspringLaw& law);

/// pi^{*n}: law of the sum of n independent copies of (xi^c, xi^m), keeping
/// clone indices <= support_cap and reporting the rest as discarded.
template <class T>
JointPmf<T> convolution_power(const MarkedOffspringLaw& law, std::uint64_t n, std::size_t support_cap);

/// P_a(T_0 = n, M_1 = l) = (a/n) pi^{*n}_{n-a, l} for a <= n <= n_max.
/// n_max < a gives an empty table.
template <class T>
JointPmfTable<T> joint_law_T0_M1(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::uint64_t n_max);

inline constexpr std::uint64_t kEnumerationSizeLimit = 16;
inline constexpr std::uint64_t kEnumerationNodeLimit = 50'000'000;

/// Brute-force law of (T_0, M_1) for T_0 <= size_cap: sums over every
/// plane clone forest of `ancestors` roots, weighting each individual by
/// its own (clones, mutants) probability. Throws DomainError when size_cap
/// exceeds kEnumerationSizeLimit and NumericError when the search visits
/// more than kEnumerationNodeLimit partial forests.
template <class T>
JointPmfTable<T> enumerate_genealogies(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::uint64_t size_cap);

/// g(s, y) = sum pi_{k,l} s^k y^l.
double joint_pgf(const MarkedOffspringLaw& law, double s, double y);

struct FixedPointResult {
  double value;
  std::size_t iterations;
};

/// Minimal solution of phi = x g(phi, y), by monotone iteration from 0.
/// Requires E(xi^c) <= 1 and x, y in (0, 1].
FixedPointResult phi_fixed_point(const MarkedOffspringLaw& law, double x, double y, double tol = 1e-12,
                                 std::size_t max_iterations = 10'000'000);

/// Largest absolute difference over the union of entries with n <= n_cap.
template <class T>
T max_abs_difference(const JointPmfTable<T>& a, const JointPmfTable<T>& b, std::uint64_t n_cap);

}  // namespace alleles
