#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "alleles/random.hpp"
#include "alleles/rational.hpp"

namespace alleles {

/// Thrown when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kPmfTolerance = 1e-12;

/// Reproduction law of a single-type Galton-Watson process, with finite
/// support {0, ..., max_children()}.
class OffspringLaw {
 public:
  explicit OffspringLaw(std::vector<double> pmf);
  /// Exact law; the double pmf is derived from it.
  explicit OffspringLaw(std::vector<Rational> pmf);

  const std::vector<double>& pmf() const { return pmf_; }
  const std::optional<std::vector<Rational>>& exact_pmf() const { return exact_; }
  std::size_t max_children() const { return pmf_.size() - 1; }
  double operator[](std::size_t k) const { return k < pmf_.size() ? pmf_[k] : 0.0; }

  double mean() const;
  double variance() const;

 private:
  std::vector<double> pmf_;
  std::optional<std::vector<Rational>> exact_;
};

/// A law cut at k_max and renormalised; removed_mass is the tail that was dropped.
struct TruncatedLaw {
  OffspringLaw law;
  double removed_mass;
};
TruncatedLaw truncate_law(std::span<const double> pmf, std::size_t k_max);

/// {0: 1/2, 2: 1/2}: critical, variance 1.
OffspringLaw binary_critical_law();
/// Geometric shape 2^-k on {1..6}, mass at 0 chosen so the mean is exactly 1.
OffspringLaw geometric_truncated_law();

/// One support cell of a joint (clones, mutants) pmf.
struct MarkedCell {
  std::uint32_t clones;
  std::uint32_t mutants;
  double prob;
};

/// Joint law of (clone children, mutant children) stored densely on
/// {0..max_clones} x {0..max_mutants}.
class MarkedOffspringLaw {
 public:
  /// Dense row-major table: probs[k * (max_mutants + 1) + l].
  MarkedOffspringLaw(std::size_t max_clones, std::size_t max_mutants, std::vector<double> probs);
  MarkedOffspringLaw(std::size_t max_clones, std::size_t max_mutants, std::vector<Rational> probs);

  std::size_t max_clones() const { return max_clones_; }
  std::size_t max_mutants() const { return max_mutants_; }
  double prob(std::size_t clones, std::size_t mutants) const;
  const std::optional<std::vector<Rational>>& exact_probs() const { return exact_; }
  std::optional<Rational> exact_prob(std::size_t clones, std::size_t mutants) const;
  const std::vector<double>& probs() const { return probs_; }

  /// Nonzero cells in (clones, mutants) lexicographic order.
  const std::vector<MarkedCell>& support() const { return support_; }
  /// Cumulative probabilities aligned with support(); back() == 1.
  const std::vector<double>& cumulative() const { return cumulative_; }
  /// suffix()[i] = sum of support()[j].prob for j >= i.
  const std::vector<double>& suffix() const { return suffix_; }

  /// Law of clones + mutants.
  std::vector<double> total_marginal() const;

 private:
  void finish();

  std::size_t max_clones_;
  std::size_t max_mutants_;
  std::vector<double> probs_;
  std::optional<std::vector<Rational>> exact_;
  std::vector<MarkedCell> support_;
  std::vector<double> cumulative_;
  std::vector<double> suffix_;
};

/// Each child independently becomes a mutant with probability p.
MarkedOffspringLaw binomial_mark(const OffspringLaw& base, double p);
/// Exact variant; the result carries exact probabilities when base does.
MarkedOffspringLaw binomial_mark(const OffspringLaw& base, const Rational& p);

enum class Regime { subcritical, critical, supercritical };
const char* to_string(Regime r);

struct LawSummary {
  double clone_mean;
  double mutant_mean;
  double total_mean;
  double total_second_moment;
  /// Mean of the allele-level process E_1(M_1); +infinity for critical clones.
  double mutant_process_mean;
  /// Regime of E_1(M_1) relative to 1; nullopt when clones are supercritical.
  std::optional<Regime> regime;
  Regime clone_regime;
  bool clones_degenerate;   // clone count is a.s. 0
  bool mutants_degenerate;  // mutant count is a.s. 0
  /// Exact E_1(M_1) when the law is rational and clones are strictly subcritical.
  std::optional<Rational> exact_mutant_process_mean;
};

LawSummary classify(const MarkedOffspringLaw& law);

struct OffspringDraw {
  std::uint64_t clones;
  std::uint64_t mutants;
};

/// Inverse-CDF draw of one individual's (clones, mutants).
OffspringDraw sample_offspring(const MarkedOffspringLaw& law, Rng& rng);

/// Total (clones, mutants) of `individuals` independent individuals, drawn
/// through a multinomial split over the support cells.
OffspringDraw sample_offspring_total(const MarkedOffspringLaw& law, std::uint64_t individuals, Rng& rng);

}  // namespace alleles
