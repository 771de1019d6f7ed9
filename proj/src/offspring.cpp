#include "alleles/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace alleles {

namespace {

void check_probabilities(std::span<const double> probs, const char* what) {
  if (probs.empty()) throw DomainError(std::string(what) + ": empty pmf");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError(std::string(what) + ": negative or non-finite entry");
    total += p;
  }
  if (std::abs(total - 1.0) > kPmfTolerance) {
    throw DomainError(std::string(what) + ": entries sum to " + std::to_string(total) + ", not 1");
  }
}

void check_probabilities(std::span<const Rational> probs, const char* what) {
  if (probs.empty()) throw DomainError(std::string(what) + ": empty pmf");
  Rational total = 0;
  for (const auto& p : probs) {
    if (p < 0) throw DomainError(std::string(what) + ": negative entry");
    total += p;
  }
  if (total != 1) throw DomainError(std::string(what) + ": entries sum to " + to_string(total) + ", not 1");
}

std::vector<double> to_doubles(std::span<const Rational> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(to_double(v));
  return out;
}

template <class T>
void trim_trailing_zeros(std::vector<T>& pmf) {
  while (pmf.size() > 1 && pmf.back() == 0) pmf.pop_back();
}

// Joint table of binomial marking: cell (k, l) = pmf[k + l] * C(k + l, k) (1-p)^k p^l.
template <class T>
std::vector<T> mark_table(std::span<const T> pmf, const T& p) {
  const std::size_t width = pmf.size();
  std::vector<T> table(width * width, T(0));
  const T q = T(1) - p;
  for (std::size_t total = 0; total < width; ++total) {
    if (pmf[total] == 0) continue;
    // Binomial(total, p) weights built multiplicatively to stay exact for rationals.
    T choose = 1;
    for (std::size_t l = 0; l <= total; ++l) {
      const std::size_t k = total - l;
      T weight = choose;
      for (std::size_t i = 0; i < k; ++i) weight *= q;
      for (std::size_t i = 0; i < l; ++i) weight *= p;
      table[k * width + l] = pmf[total] * weight;
      choose = choose * T(total - l) / T(l + 1);
    }
  }
  return table;
}

}  // namespace

OffspringLaw::OffspringLaw(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  check_probabilities(pmf_, "offspring law");
  trim_trailing_zeros(pmf_);
}

OffspringLaw::OffspringLaw(std::vector<Rational> pmf) {
  check_probabilities(pmf, "offspring law");
  trim_trailing_zeros(pmf);
  pmf_ = to_doubles(pmf);
  exact_ = std::move(pmf);
}

double OffspringLaw::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) m += static_cast<double>(k) * pmf_[k];
  return m;
}

double OffspringLaw::variance() const {
  const double m = mean();
  double v = 0.0;
  for (std::size_t k = 0; k < pmf_.size(); ++k) {
    const double d = static_cast<double>(k) - m;
    v += d * d * pmf_[k];
  }
  return v;
}

TruncatedLaw truncate_law(std::span<const double> pmf, std::size_t k_max) {
  if (pmf.empty()) throw DomainError("truncate_law: empty pmf");
  const std::size_t keep = std::min(pmf.size(), k_max + 1);
  std::vector<double> kept(pmf.begin(), pmf.begin() + static_cast<std::ptrdiff_t>(keep));
  double removed = 0.0;
  for (std::size_t k = keep; k < pmf.size(); ++k) removed += pmf[k];
  const double total = std::accumulate(kept.begin(), kept.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("truncate_law: no mass below the cap");
  for (double& p : kept) p /= total;
  return {OffspringLaw(std::move(kept)), removed};
}

OffspringLaw binary_critical_law() { return OffspringLaw(std::vector<Rational>{Rational(1, 2), 0, Rational(1, 2)}); }

OffspringLaw geometric_truncated_law() {
  // Weights (8/15) 2^-k on k = 1..6 give mean exactly 1; the rest sits at 0.
  std::vector<Rational> pmf(7);
  Rational rest = 1;
  for (int k = 1; k <= 6; ++k) {
    pmf[k] = Rational(8, 15) / Rational(1 << k);
    rest -= pmf[k];
  }
  pmf[0] = rest;
  return OffspringLaw(std::move(pmf));
}

MarkedOffspringLaw::MarkedOffspringLaw(std::size_t max_clones, std::size_t max_mutants, std::vector<double> probs)
    : max_clones_(max_clones), max_mutants_(max_mutants), probs_(std::move(probs)) {
  if (probs_.size() != (max_clones_ + 1) * (max_mutants_ + 1)) {
    throw DomainError("marked law: table size does not match its dimensions");
  }
  check_probabilities(probs_, "marked offspring law");
  finish();
}

MarkedOffspringLaw::MarkedOffspringLaw(std::size_t max_clones, std::size_t max_mutants, std::vector<Rational> probs)
    : max_clones_(max_clones), max_mutants_(max_mutants) {
  if (probs.size() != (max_clones_ + 1) * (max_mutants_ + 1)) {
    throw DomainError("marked law: table size does not match its dimensions");
  }
  check_probabilities(probs, "marked offspring law");
  probs_ = to_doubles(probs);
  exact_ = std::move(probs);
  finish();
}

void MarkedOffspringLaw::finish() {
  const std::size_t width = max_mutants_ + 1;
  for (std::size_t k = 0; k <= max_clones_; ++k) {
    for (std::size_t l = 0; l < width; ++l) {
      const double p = probs_[k * width + l];
      if (p > 0.0) support_.push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(l), p});
    }
  }
  cumulative_.resize(support_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    acc += support_[i].prob;
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
  suffix_.resize(support_.size());
  acc = 0.0;
  for (std::size_t i = support_.size(); i-- > 0;) {
    acc += support_[i].prob;
    suffix_[i] = acc;
  }
}

double MarkedOffspringLaw::prob(std::size_t clones, std::size_t mutants) const {
  if (clones > max_clones_ || mutants > max_mutants_) return 0.0;
  return probs_[clones * (max_mutants_ + 1) + mutants];
}

std::optional<Rational> MarkedOffspringLaw::exact_prob(std::size_t clones, std::size_t mutants) const {
  if (!exact_) return std::nullopt;
  if (clones > max_clones_ || mutants > max_mutants_) return Rational(0);
  return (*exact_)[clones * (max_mutants_ + 1) + mutants];
}

std::vector<double> MarkedOffspringLaw::total_marginal() const {
  std::vector<double> out(max_clones_ + max_mutants_ + 1, 0.0);
  for (const auto& cell : support_) out[cell.clones + cell.mutants] += cell.prob;
  return out;
}

MarkedOffspringLaw binomial_mark(const OffspringLaw& base, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_mark: mutation probability outside [0, 1]");
  const std::size_t k_max = base.max_children();
  return MarkedOffspringLaw(k_max, k_max, mark_table<double>(base.pmf(), p));
}

MarkedOffspringLaw binomial_mark(const OffspringLaw& base, const Rational& p) {
  if (p < 0 || p > 1) throw DomainError("binomial_mark: mutation probability outside [0, 1]");
  const std::size_t k_max = base.max_children();
  if (!base.exact_pmf()) return binomial_mark(base, to_double(p));
  return MarkedOffspringLaw(k_max, k_max, mark_table<Rational>(*base.exact_pmf(), p));
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::subcritical:
      return "subcritical";
    case Regime::critical:
      return "critical";
    case Regime::supercritical:
      return "supercritical";
  }
  return "?";
}

namespace {

Regime compare_to_one(double value) {
  if (std::abs(value - 1.0) <= kPmfTolerance) return Regime::critical;
  return value < 1.0 ? Regime::subcritical : Regime::supercritical;
}

Regime compare_to_one(const Rational& value) {
  if (value == 1) return Regime::critical;
  return value < 1 ? Regime::subcritical : Regime::supercritical;
}

}  // namespace

LawSummary classify(const MarkedOffspringLaw& law) {
  LawSummary s{};
  double second = 0.0;
  for (const auto& cell : law.support()) {
    const double total = static_cast<double>(cell.clones + cell.mutants);
    s.clone_mean += cell.prob * cell.clones;
    s.mutant_mean += cell.prob * cell.mutants;
    second += cell.prob * total * total;
  }
  s.total_mean = s.clone_mean + s.mutant_mean;
  s.total_second_moment = second;
  s.clones_degenerate = std::all_of(law.support().begin(), law.support().end(),
                                    [](const MarkedCell& c) { return c.clones == 0; });
  s.mutants_degenerate = std::all_of(law.support().begin(), law.support().end(),
                                     [](const MarkedCell& c) { return c.mutants == 0; });

  if (const auto& exact = law.exact_probs()) {
    Rational clone_mean = 0, mutant_mean = 0;
    const std::size_t width = law.max_mutants() + 1;
    for (std::size_t k = 0; k <= law.max_clones(); ++k) {
      for (std::size_t l = 0; l < width; ++l) {
        const auto& p = (*exact)[k * width + l];
        clone_mean += p * Rational(k);
        mutant_mean += p * Rational(l);
      }
    }
    s.clone_regime = compare_to_one(clone_mean);
    if (s.clone_regime == Regime::subcritical) {
      Rational m = mutant_mean / (Rational(1) - clone_mean);
      s.exact_mutant_process_mean = m;
      s.mutant_process_mean = to_double(m);
      s.regime = compare_to_one(m);
    }
  } else {
    s.clone_regime = compare_to_one(s.clone_mean);
    if (s.clone_regime == Regime::subcritical) {
      s.mutant_process_mean = s.mutant_mean / (1.0 - s.clone_mean);
      s.regime = compare_to_one(s.total_mean);
    }
  }
  if (s.clone_regime == Regime::critical) {
    // Reported as infinite even for the degenerate xi_m == 0 case, which is
    // flagged separately through mutants_degenerate.
    s.mutant_process_mean = std::numeric_limits<double>::infinity();
    s.regime = Regime::supercritical;
  } else if (s.clone_regime == Regime::supercritical) {
    s.mutant_process_mean = std::numeric_limits<double>::infinity();
    s.regime.reset();
  }
  return s;
}

OffspringDraw sample_offspring(const MarkedOffspringLaw& law, Rng& rng) {
  const double u = uniform01(rng);
  const auto& cum = law.cumulative();
  auto it = std::upper_bound(cum.begin(), cum.end(), u);
  if (it == cum.end()) --it;
  const auto& cell = law.support()[static_cast<std::size_t>(it - cum.begin())];
  return {cell.clones, cell.mutants};
}

OffspringDraw sample_offspring_total(const MarkedOffspringLaw& law, std::uint64_t individuals, Rng& rng) {
  OffspringDraw total{0, 0};
  const auto& cells = law.support();
  if (individuals < 2 * cells.size()) {
    for (std::uint64_t i = 0; i < individuals; ++i) {
      const auto d = sample_offspring(law, rng);
      total.clones += d.clones;
      total.mutants += d.mutants;
    }
    return total;
  }
  const auto& suffix = law.suffix();
  std::uint64_t remaining = individuals;
  for (std::size_t i = 0; i < cells.size() && remaining > 0; ++i) {
    std::uint64_t count = remaining;
    if (i + 1 < cells.size()) {
      const double q = std::clamp(cells[i].prob / suffix[i], 0.0, 1.0);
      std::binomial_distribution<std::uint64_t> bin(remaining, q);
      count = bin(rng);
    }
    total.clones += count * cells[i].clones;
    total.mutants += count * cells[i].mutants;
    remaining -= count;
  }
  return total;
}

}  // namespace alleles
