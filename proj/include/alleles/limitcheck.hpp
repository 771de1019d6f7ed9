#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "alleles/csbp.hpp"
#include "alleles/genealogy.hpp"
#include "alleles/offspring.hpp"
#include "alleles/stats.hpp"
#include "alleles/vertex_tree.hpp"

namespace alleles {

/// One point of the regime a(n) ~ n x, p(n) ~ c / n, instantiated as
/// a_n = round(n x) and p_n = min(1, c / n).
class ScalingRegime {
 public:
  /// Throws DomainError unless n >= 1, x > 0, c > 0 and a_n >= 1.
  ScalingRegime(std::uint64_t n, double x, double c);

  std::uint64_t n() const { return n_; }
  double x() const { return x_; }
  double c() const { return c_; }
  std::uint64_t ancestors() const { return a_; }
  double mutation_p() const { return p_; }
  /// binomial_mark(base, mutation_p()).
  MarkedOffspringLaw marked(const OffspringLaw& base) const;

 private:
  std::uint64_t n_;
  double x_;
  double c_;
  std::uint64_t a_;
  double p_;
};

/// Raw sampled statistics, one named column per series.
struct SampleColumn {
  std::string name;
  std::vector<double> values;
};

struct CheckOutcome {
  std::vector<FitReport> reports;
  std::vector<SampleColumn> columns;
};

struct RunOptions {
  std::size_t replicates = 20'000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double alpha = 0.01;
  Caps caps{};
};

struct RootCheckOptions {
  double ks_threshold = 0.03;
  double collapse_delta = 0.1;
  double collapse_threshold = 0.05;
  /// When false the collapse report is informational.
  bool collapse_verdict = true;
};

/// n^-2 T_0 against the tau_x CDF (one-sample KS, fixed threshold) and the
/// collapse frequency P(|n^-1 M_1 - c n^-2 T_0| > delta).
CheckOutcome check_root_convergence(const ScalingRegime& regime, const OffspringLaw& base, const RunOptions& run,
                                    const RootCheckOptions& opts = {});

/// Root KS distances across several n; passes when no distance exceeds its
/// predecessor by more than the Kolmogorov band quantile(alpha) / sqrt(N).
CheckOutcome check_root_trend(const OffspringLaw& base, double x, double c, const std::vector<std::uint64_t>& n_list,
                              const RunOptions& run, const RootCheckOptions& opts = {});

struct TailPoint {
  double t;
  double m;
};

struct TailCheckOptions {
  double max_standard_errors = 3.0;
  std::uint64_t min_hits = 100;
};

/// n P_1(n^-2 T_0 > t or n^-1 M_1 > m) against c^-1 nu_bar(min(t, m/c)), one
/// report per grid point, scored in binomial standard errors under the
/// predicted frequency. Points with fewer than min_hits hits are inconclusive.
CheckOutcome check_tail_limit(const ScalingRegime& regime, const OffspringLaw& base, const std::vector<TailPoint>& grid,
                              const RunOptions& run, const TailCheckOptions& opts = {});

struct CensusCheckOptions {
  /// Lower cutoff (in units of n^2) for the collapse statistic.
  double delta = 0.1;
  double collapse_delta = 0.1;
};

/// Per level k < levels: two-sample KS of n^-2 T_k against Z_{k+1} of the
/// chain started at x / c; level 0 also one-sample against tau_x. Extinction
/// frequencies and the collapse statistic are informational.
CheckOutcome check_census_chain(const ScalingRegime& regime, const OffspringLaw& base, std::size_t levels,
                                const RunOptions& run, const CensusCheckOptions& opts = {});

struct TreeCheckOptions {
  double epsilon = 1e-3;
  std::size_t top_j = kDefaultTopJ;
  double root_ks_threshold = 0.03;
  double collapse_delta = 0.1;
  double collapse_threshold = 0.05;
  bool collapse_verdict = true;
  /// Replicates on the CSBP side; 0 means the same as the tree side.
  std::size_t limit_replicates = 0;
};

/// Per pattern vertex u: two-sample KS of n^-2 A_u against Z_u from
/// sample_tree with a tau_x root; the root is also tested one-sample. The
/// degree collapse P(|n^-1 d_u - c n^-2 A_u| > delta) is reported per vertex
/// (with a verdict at the root only). Vertices never occupied on the tree
/// side are inconclusive. Pattern vertices must have level <= 2.
CheckOutcome check_tree_convergence(const ScalingRegime& regime, const OffspringLaw& base,
                                    const std::vector<UVertex>& pattern, const RunOptions& run,
                                    const TreeCheckOptions& opts = {});

/// Two-sample chi-square between the walk and direct constructions on the
/// joint law of (T_0, M_1, T_1, M_2), each coordinate capped at `cap`.
CheckOutcome check_construction_equivalence(const MarkedOffspringLaw& law, std::uint64_t ancestors,
                                            const RunOptions& run, std::uint64_t cap = 12);

/// Definition-based versus subordinator-based tree sampler with a tau_x
/// root: root mass, largest level-1 atom and level-1 atom sum (two-sample
/// KS) and the level-1 atom count (chi-square).
CheckOutcome check_csbp_equivalence(const LevyMeasure& measure, double x, double eps, std::size_t top_j,
                                    const RunOptions& run);

/// Level-1 sum of sample_tree from a fixed root, plus m_eps * root_mass,
/// against Z_1 of sample_csbp_chain from the same mass (two-sample KS).
CheckOutcome check_tree_level_sum(const LevyMeasure& measure, double root_mass, double eps, std::size_t top_j,
                                  const RunOptions& run);

}  // namespace alleles
