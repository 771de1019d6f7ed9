#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "alleles/offspring.hpp"
#include "alleles/random.hpp"
#include "alleles/stats.hpp"
#include "alleles/vertex_tree.hpp"

namespace alleles {

/// Tree of alleles: vertex -> allelic sub-family size, with outer degrees.
using AlleleTree = VertexTree<std::uint64_t>;

/// Population of each type (T) and number of mutants of each type (M).
/// M[0] is the number of ancestors; both vectors run up to the last
/// nonempty type, so M_{L+1} = 0 is implicit.
struct TypedCensus {
  std::vector<std::uint64_t> T;
  std::vector<std::uint64_t> M;

  bool operator==(const TypedCensus&) const = default;
};

struct Caps {
  std::uint64_t max_individuals = 100'000'000;
  std::size_t max_level = 10'000;
};

/// Whatever had been simulated when a cap was hit.
struct PartialStatistics {
  std::uint64_t individuals = 0;
  std::size_t levels_completed = 0;
  TypedCensus census;
};

class TruncationError : public std::runtime_error {
 public:
  TruncationError(const std::string& what, PartialStatistics partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const PartialStatistics& partial() const { return partial_; }

 private:
  PartialStatistics partial_;
};

/// Size of an allelic family and its number of mutant children.
struct FamilyDraw {
  std::uint64_t size;
  std::uint64_t mutants;
};

/// Runs the clone Galton-Watson process from `seeds` individuals of one
/// type until extinction; returns (total clones, mutant children), i.e. one
/// draw of (T_0, M_1) under P_seeds. Throws TruncationError past
/// max_individuals.
FamilyDraw sample_family(const MarkedOffspringLaw& law, std::uint64_t seeds, Rng& rng,
                         std::uint64_t max_individuals = Caps{}.max_individuals);

struct AlleleSample {
  AlleleTree tree;
  TypedCensus census;
};

/// Full tree of alleles for `ancestors` ancestors. Sibling families are
/// i.i.d. copies of (T_0, M_1) under P_1 ranked by decreasing size with
/// uniformly random tie-breaking.
AlleleSample simulate_allele_tree(const MarkedOffspringLaw& law, std::uint64_t ancestors, Rng& rng,
                                  const Caps& caps = {});

/// Same law as simulate_allele_tree restricted to levels 0..depth. Vertices
/// on the last level keep their outer degree but are not expanded.
AlleleTree simulate_allele_levels(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t depth, Rng& rng,
                                  const Caps& caps = {});

/// One step of the chain ((T_k, M_{k+1}))_k.
struct CensusStep {
  std::uint64_t T;
  std::uint64_t M_next;

  bool operator==(const CensusStep&) const = default;
};

/// (T_k, M_{k+1}) for k < levels (fewer if the mutants die out). All
/// type-k individuals are run together from the M_k type-k mutants.
std::vector<CensusStep> simulate_census(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t levels,
                                        Rng& rng, const Caps& caps = {});

/// Census read off a tree; the tree must not be depth-limited.
TypedCensus census_of(const AlleleTree& tree, std::uint64_t ancestors);

/// Individual of an explicit genealogy. Ancestors have parent == npos and
/// all carry the ancestral allele.
struct Individual {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t parent = npos;
  bool mutant = false;
};

/// Allelic family with its parent family (npos for the root family) and its
/// number of mutant children.
struct FamilyRecord {
  std::uint64_t size;
  std::size_t parent;
  std::uint64_t mutants;
};

/// Ranks each sibling block by decreasing size (uniform tie-breaking) and
/// lays the family forest out as a tree of alleles. families[0] is the root
/// family and every parent index precedes its children. With a depth limit,
/// families on that level keep their mutant count as outer degree and must
/// have no recorded children; elsewhere the mutant count must match the
/// number of child families.
AlleleTree rank_family_forest(std::span<const FamilyRecord> families, Rng& rng,
                              std::optional<std::size_t> depth_limit = std::nullopt);

/// Extracts the tree of alleles of an explicit genealogy. Parents must
/// precede children in `individuals`.
AlleleSample allele_tree_from_genealogy(std::span<const Individual> individuals, Rng& rng);

/// Per-conditioning-cell outcome of the branching check.
struct ResampleCell {
  std::uint64_t m;
  std::uint64_t samples;
  ChiSquareResult test;
  bool skipped;
};

struct BranchingReport {
  std::vector<ResampleCell> cells;
  std::size_t samples;
  bool passed;
};

/// Compares the law of M_2 given M_1 = m with the m-fold convolution of the
/// law of M_1 under P_1, for m = 1..max_m. The convolution side is an
/// independent empirical sample (sums of m fresh M_1 draws, one per pair in
/// the cell) and each cell gets a two-sample chi-square. Cells with fewer
/// than min_cell samples are skipped.
BranchingReport branching_resample_check(const MarkedOffspringLaw& law, std::size_t samples, std::uint64_t seed,
                                         unsigned threads = 1, std::size_t min_cell = 500, std::uint64_t max_m = 20,
                                         double alpha = 0.01);

}  // namespace alleles
