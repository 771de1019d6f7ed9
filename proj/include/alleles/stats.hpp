#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace alleles {

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

/// Quantile: the lambda with kolmogorov_survival(lambda) == alpha.
double kolmogorov_quantile(double alpha);

/// sqrt(n_eff) + 0.12 + 0.11 / sqrt(n_eff): the usual finite-sample scaling
/// applied to the asymptotic distribution.
double ks_scale(double n_eff);

struct KsResult {
  double statistic;
  double critical_value;  // at the requested alpha
  double p_value;
  double n_eff;
  bool passed;
};

/// sup_t |F_n(t) - F(t)| for a continuous F, evaluated at the sample points
/// with left and right limits of F_n, so ties and lattice-valued samples are
/// handled exactly. Left limits are skipped at points <= support_floor, which
/// allows samples censored at a floor value to be compared on [floor, inf).
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf,
                    double support_floor = -std::numeric_limits<double>::infinity());

/// Two-sample statistic sup_t |F_a(t) - F_b(t)|; symmetric in its arguments.
double ks_statistic(std::vector<double> a, std::vector<double> b);

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf, double alpha,
                       double support_floor = -std::numeric_limits<double>::infinity());
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha);

// ---------------------------------------------------------------------------
// Chi-square
// ---------------------------------------------------------------------------

struct ChiSquareResult {
  double statistic;
  std::size_t df;
  std::size_t cells;  // after pooling
  double p_value;
  bool passed;
};

/// Goodness of fit of counts against cell probabilities (same indexing).
/// Adjacent cells are pooled left to right until every expected count reaches
/// min_expected. Probability mass not covered by `probs` forms an extra
/// cell together with any observation beyond the last index.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> probs, double alpha,
                               double min_expected = 5.0);

/// Two-sample homogeneity test over keyed categories. Categories whose
/// expected count is below min_expected in either sample are pooled.
template <class Key>
ChiSquareResult chi_square_homogeneity(const std::map<Key, std::uint64_t>& a, const std::map<Key, std::uint64_t>& b,
                                       double alpha, double min_expected = 5.0);

ChiSquareResult chi_square_homogeneity_counts(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                                              double alpha, double min_expected = 5.0);

double chi_square_survival(double statistic, std::size_t df);

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

struct MeanEstimate {
  double mean;
  double variance;
  double standard_error;
  std::size_t n;
};
MeanEstimate estimate_mean(std::span<const double> values);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Outcome of one statistical check. `passed` is statistic <= threshold
/// unless the check is inconclusive or informational.
struct FitReport {
  std::string name;
  std::vector<std::size_t> sample_sizes;
  double statistic = 0.0;
  double threshold = 0.0;
  double alpha = 0.01;
  std::optional<double> p_value;
  bool passed = false;
  bool inconclusive = false;
  /// Reported without a verdict (passed is ignored by aggregation).
  bool informational = false;
  nlohmann::json metadata = nlohmann::json::object();

  /// Recomputes `passed` from statistic and threshold.
  void decide() { passed = !inconclusive && statistic <= threshold; }
};

nlohmann::json to_json(const FitReport& report);
/// True when every report that carries a verdict passed.
bool all_passed(std::span<const FitReport> reports);

// Template definition ------------------------------------------------------

template <class Key>
ChiSquareResult chi_square_homogeneity(const std::map<Key, std::uint64_t>& a, const std::map<Key, std::uint64_t>& b,
                                       double alpha, double min_expected) {
  std::map<Key, std::pair<std::uint64_t, std::uint64_t>> joint;
  for (const auto& [k, v] : a) joint[k].first += v;
  for (const auto& [k, v] : b) joint[k].second += v;
  std::vector<std::uint64_t> ca, cb;
  ca.reserve(joint.size());
  cb.reserve(joint.size());
  for (const auto& [k, v] : joint) {
    ca.push_back(v.first);
    cb.push_back(v.second);
  }
  return chi_square_homogeneity_counts(ca, cb, alpha, min_expected);
}

}  // namespace alleles
