#include "alleles/stats.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace alleles {

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; Q is 1 to double precision here
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double kolmogorov_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("kolmogorov_quantile: alpha outside (0, 1)");
  double lo = 0.2, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_survival(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ks_scale(double n_eff) {
  const double s = std::sqrt(n_eff);
  return s + 0.12 + 0.11 / s;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf, double support_floor) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sample.size()) {
    const double v = sample[i];
    std::size_t j = i;
    while (j < sample.size() && sample[j] == v) ++j;
    const double f = cdf(v);
    d = std::max(d, std::abs(static_cast<double>(j) / n - f));
    if (v > support_floor) d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    i = j;
  }
  return d;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double v;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      v = a[i];
    } else {
      v = b[j];
    }
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

namespace {

KsResult finish_ks(double d, double n_eff, double alpha) {
  KsResult r{};
  r.statistic = d;
  r.n_eff = n_eff;
  r.critical_value = kolmogorov_quantile(alpha) / ks_scale(n_eff);
  r.p_value = kolmogorov_survival(ks_scale(n_eff) * d);
  r.passed = d <= r.critical_value;
  return r;
}

}  // namespace

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf, double alpha,
                       double support_floor) {
  const double n = static_cast<double>(sample.size());
  return finish_ks(ks_statistic(std::move(sample), cdf, support_floor), n, alpha);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b, double alpha) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  return finish_ks(ks_statistic(std::move(a), std::move(b)), na * nb / (na + nb), alpha);
}

double chi_square_survival(double statistic, std::size_t df) {
  if (df == 0) return 1.0;
  boost::math::chi_squared dist(static_cast<double>(df));
  if (statistic <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> probs, double alpha,
                               double min_expected) {
  const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
  if (n == 0) throw std::invalid_argument("chi_square_gof: no observations");
  // Cells: probs indices, then a residual cell for uncovered mass.
  std::vector<double> expected;
  std::vector<double> counts;
  double covered = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    expected.push_back(n * probs[i]);
    counts.push_back(i < observed.size() ? static_cast<double>(observed[i]) : 0.0);
    covered += probs[i];
  }
  double beyond = 0.0;
  for (std::size_t i = probs.size(); i < observed.size(); ++i) beyond += static_cast<double>(observed[i]);
  const double residual = std::max(0.0, 1.0 - covered);
  if (residual * n > 1e-9 || beyond > 0) {
    expected.push_back(n * residual);
    counts.push_back(beyond);
  }

  std::vector<double> pe, po;
  double acc_e = 0.0, acc_o = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    acc_e += expected[i];
    acc_o += counts[i];
    if (acc_e >= min_expected) {
      pe.push_back(acc_e);
      po.push_back(acc_o);
      acc_e = acc_o = 0.0;
    }
  }
  if (acc_e > 0.0 || acc_o > 0.0) {
    if (pe.empty()) {
      pe.push_back(acc_e);
      po.push_back(acc_o);
    } else {
      pe.back() += acc_e;
      po.back() += acc_o;
    }
  }

  ChiSquareResult r{};
  r.cells = pe.size();
  r.df = pe.size() > 0 ? pe.size() - 1 : 0;
  for (std::size_t i = 0; i < pe.size(); ++i) {
    if (pe[i] <= 0.0) {
      if (po[i] > 0.0) r.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    const double diff = po[i] - pe[i];
    r.statistic += diff * diff / pe[i];
  }
  r.p_value = std::isinf(r.statistic) ? 0.0 : chi_square_survival(r.statistic, r.df);
  r.passed = r.p_value > alpha;
  return r;
}

ChiSquareResult chi_square_homogeneity_counts(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                                              double alpha, double min_expected) {
  if (a.size() != b.size()) throw std::invalid_argument("chi_square_homogeneity: category mismatch");
  const double na = static_cast<double>(std::accumulate(a.begin(), a.end(), std::uint64_t{0}));
  const double nb = static_cast<double>(std::accumulate(b.begin(), b.end(), std::uint64_t{0}));
  if (na == 0 || nb == 0) throw std::invalid_argument("chi_square_homogeneity: empty sample");
  const double fa = na / (na + nb);
  const double fb = nb / (na + nb);

  std::vector<std::pair<double, double>> cells;
  std::pair<double, double> pooled{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double total = static_cast<double>(a[i] + b[i]);
    if (total == 0) continue;
    if (std::min(total * fa, total * fb) < min_expected) {
      pooled.first += static_cast<double>(a[i]);
      pooled.second += static_cast<double>(b[i]);
    } else {
      cells.emplace_back(static_cast<double>(a[i]), static_cast<double>(b[i]));
    }
  }
  const double pooled_total = pooled.first + pooled.second;
  if (pooled_total > 0) {
    if (std::min(pooled_total * fa, pooled_total * fb) >= min_expected || cells.empty()) {
      cells.push_back(pooled);
    } else {
      auto smallest = std::min_element(cells.begin(), cells.end(), [](const auto& x, const auto& y) {
        return x.first + x.second < y.first + y.second;
      });
      smallest->first += pooled.first;
      smallest->second += pooled.second;
    }
  }

  ChiSquareResult r{};
  r.cells = cells.size();
  r.df = cells.size() > 0 ? cells.size() - 1 : 0;
  for (const auto& [ca, cb] : cells) {
    const double total = ca + cb;
    const double ea = total * fa;
    const double eb = total * fb;
    r.statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  r.p_value = chi_square_survival(r.statistic, r.df);
  r.passed = r.p_value > alpha;
  return r;
}

MeanEstimate estimate_mean(std::span<const double> values) {
  MeanEstimate m{};
  m.n = values.size();
  if (values.empty()) return m;
  // Welford keeps the variance stable for heavy-tailed inputs.
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  m.mean = mean;
  m.variance = k > 1 ? m2 / static_cast<double>(k - 1) : 0.0;
  m.standard_error = std::sqrt(m.variance / static_cast<double>(k));
  return m;
}

nlohmann::json to_json(const FitReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["sample_sizes"] = report.sample_sizes;
  j["statistic"] = report.statistic;
  j["threshold"] = report.threshold;
  j["alpha"] = report.alpha;
  j["p_value"] = report.p_value ? nlohmann::json(*report.p_value) : nlohmann::json(nullptr);
  j["passed"] = report.passed;
  j["inconclusive"] = report.inconclusive;
  j["informational"] = report.informational;
  j["metadata"] = report.metadata;
  return j;
}

bool all_passed(std::span<const FitReport> reports) {
  return std::all_of(reports.begin(), reports.end(), [](const FitReport& r) {
    return r.informational || r.inconclusive || r.passed;
  });
}

}  // namespace alleles
