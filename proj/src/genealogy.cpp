#include "alleles/genealogy.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace alleles {

namespace {

using Child = AlleleTree::Child;

// Decreasing order of size, ties in uniformly random order.
template <class T, class SizeOf>
void rank_decreasing(std::vector<T>& items, Rng& rng, SizeOf size_of) {
  std::shuffle(items.begin(), items.end(), rng);
  std::stable_sort(items.begin(), items.end(), [&](const T& a, const T& b) { return size_of(a) > size_of(b); });
}

TypedCensus census_from_levels(const AlleleTree& tree, std::uint64_t ancestors) {
  TypedCensus c;
  c.T = tree.level_sums();
  c.M.assign(c.T.size(), 0);
  if (!c.M.empty()) c.M[0] = ancestors;
  for (const auto& n : tree.nodes()) {
    if (n.level + 1 < c.M.size()) c.M[n.level + 1] += n.degree;
  }
  return c;
}

// Level-by-level expansion shared by the full and depth-limited simulators.
AlleleTree grow_levels(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t depth, bool depth_limited,
                       Rng& rng, const Caps& caps) {
  if (ancestors == 0) throw DomainError("simulate_allele_tree: need at least one ancestor");
  AlleleTree tree;
  std::uint64_t individuals = 0;
  auto partial = [&](std::size_t levels_done) {
    PartialStatistics p;
    p.individuals = individuals;
    p.levels_completed = levels_done;
    if (!tree.empty()) p.census = census_from_levels(tree, ancestors);
    return p;
  };
  auto draw = [&](std::uint64_t seeds, std::size_t level) {
    const std::uint64_t budget = caps.max_individuals - std::min(individuals, caps.max_individuals);
    try {
      auto f = sample_family(law, seeds, rng, budget);
      individuals += f.size;
      return f;
    } catch (const TruncationError&) {
      throw TruncationError("individual cap exceeded", partial(level));
    }
  };

  const auto root = draw(ancestors, 0);
  tree.add_root(root.size, root.mutants);

  std::size_t level_begin = 0, level_end = 1, level = 0;
  std::vector<FamilyDraw> block;
  std::vector<Child> children;
  while (level_begin < level_end) {
    if (depth_limited && level == depth) {
      tree.depth_limit = depth;
      break;
    }
    bool any = false;
    for (std::size_t i = level_begin; i < level_end; ++i) any = any || tree.node(i).degree > 0;
    if (!any) break;
    if (level + 1 > caps.max_level) throw TruncationError("level cap exceeded", partial(level + 1));
    for (std::size_t i = level_begin; i < level_end; ++i) {
      const std::uint64_t d = tree.node(i).degree;
      if (d == 0) continue;
      block.clear();
      for (std::uint64_t j = 0; j < d; ++j) block.push_back(draw(1, level + 1));
      rank_decreasing(block, rng, [](const FamilyDraw& f) { return f.size; });
      children.clear();
      for (const auto& f : block) children.push_back({f.size, f.mutants});
      tree.append_children(i, children);
    }
    level_begin = level_end;
    level_end = tree.size();
    ++level;
  }
  return tree;
}

}  // namespace

FamilyDraw sample_family(const MarkedOffspringLaw& law, std::uint64_t seeds, Rng& rng, std::uint64_t max_individuals) {
  FamilyDraw out{0, 0};
  std::uint64_t current = seeds;
  std::size_t generation = 0;
  while (current > 0) {
    out.size += current;
    if (out.size > max_individuals) {
      PartialStatistics p;
      p.individuals = out.size;
      throw TruncationError("individual cap exceeded after " + std::to_string(generation) + " generations", p);
    }
    const auto next = sample_offspring_total(law, current, rng);
    out.mutants += next.mutants;
    current = next.clones;
    ++generation;
  }
  return out;
}

AlleleSample simulate_allele_tree(const MarkedOffspringLaw& law, std::uint64_t ancestors, Rng& rng, const Caps& caps) {
  AlleleSample s;
  s.tree = grow_levels(law, ancestors, 0, false, rng, caps);
  s.census = census_from_levels(s.tree, ancestors);
  return s;
}

AlleleTree simulate_allele_levels(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t depth, Rng& rng,
                                  const Caps& caps) {
  return grow_levels(law, ancestors, depth, true, rng, caps);
}

std::vector<CensusStep> simulate_census(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t levels,
                                        Rng& rng, const Caps& caps) {
  if (ancestors == 0) throw DomainError("simulate_census: need at least one ancestor");
  std::vector<CensusStep> out;
  std::uint64_t seeds = ancestors;
  std::uint64_t individuals = 0;
  for (std::size_t k = 0; k < levels && seeds > 0; ++k) {
    if (k > caps.max_level) {
      PartialStatistics p;
      p.individuals = individuals;
      p.levels_completed = k;
      throw TruncationError("level cap exceeded", p);
    }
    const std::uint64_t budget = caps.max_individuals - std::min(individuals, caps.max_individuals);
    FamilyDraw f{};
    try {
      f = sample_family(law, seeds, rng, budget);
    } catch (const TruncationError&) {
      PartialStatistics p;
      p.individuals = individuals;
      p.levels_completed = k;
      p.census.M.push_back(ancestors);
      for (const auto& step : out) {
        p.census.T.push_back(step.T);
        p.census.M.push_back(step.M_next);
      }
      throw TruncationError("individual cap exceeded", p);
    }
    individuals += f.size;
    out.push_back({f.size, f.mutants});
    seeds = f.mutants;
  }
  return out;
}

TypedCensus census_of(const AlleleTree& tree, std::uint64_t ancestors) {
  if (tree.depth_limit) throw std::logic_error("census_of: depth-limited tree");
  return census_from_levels(tree, ancestors);
}

AlleleTree rank_family_forest(std::span<const FamilyRecord> families, Rng& rng, std::optional<std::size_t> depth_limit) {
  AlleleTree tree;
  tree.depth_limit = depth_limit;
  if (families.empty()) return tree;
  std::vector<std::vector<std::size_t>> kids(families.size());
  for (std::size_t f = 1; f < families.size(); ++f) {
    const std::size_t p = families[f].parent;
    if (p >= f) throw std::logic_error("rank_family_forest: parent must precede child");
    kids[p].push_back(f);
  }
  tree.add_root(families[0].size, families[0].mutants);
  // order[i] = family stored at tree node i.
  std::vector<std::size_t> order{0};
  std::vector<Child> children;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t f = order[i];
    auto& block = kids[f];
    const bool frontier = depth_limit && tree.node(i).level == *depth_limit;
    if (frontier ? !block.empty() : block.size() != families[f].mutants) {
      throw std::logic_error("rank_family_forest: mutant count does not match child families");
    }
    if (block.empty()) continue;
    rank_decreasing(block, rng, [&](std::size_t g) { return families[g].size; });
    children.clear();
    for (std::size_t g : block) {
      children.push_back({families[g].size, families[g].mutants});
      order.push_back(g);
    }
    tree.append_children(i, children);
  }
  return tree;
}

AlleleSample allele_tree_from_genealogy(std::span<const Individual> individuals, Rng& rng) {
  if (individuals.empty()) throw DomainError("allele_tree_from_genealogy: empty genealogy");
  // family[i]: allelic family of individual i. Family 0 holds the ancestors.
  std::vector<std::size_t> family(individuals.size());
  std::vector<FamilyRecord> families{{0, Individual::npos, 0}};
  std::uint64_t ancestors = 0;
  for (std::size_t i = 0; i < individuals.size(); ++i) {
    const auto& ind = individuals[i];
    if (ind.parent == Individual::npos) {
      if (ind.mutant) throw DomainError("allele_tree_from_genealogy: an ancestor cannot be a mutant");
      family[i] = 0;
      ++ancestors;
    } else {
      if (ind.parent >= i) throw DomainError("allele_tree_from_genealogy: parent must precede child");
      if (ind.mutant) {
        family[i] = families.size();
        ++families[family[ind.parent]].mutants;
        families.push_back({0, family[ind.parent], 0});
      } else {
        family[i] = family[ind.parent];
      }
    }
    ++families[family[i]].size;
  }
  if (ancestors == 0) throw DomainError("allele_tree_from_genealogy: no ancestors");
  AlleleSample s;
  s.tree = rank_family_forest(families, rng);
  s.census = census_from_levels(s.tree, ancestors);
  return s;
}

BranchingReport branching_resample_check(const MarkedOffspringLaw& law, std::size_t samples, std::uint64_t seed,
                                         unsigned threads, std::size_t min_cell, std::uint64_t max_m, double alpha) {
  if (classify(law).clone_regime != Regime::subcritical) {
    throw DomainError("branching_resample_check: clone process must be subcritical");
  }
  struct Pair {
    std::uint64_t m1, m2;
  };
  auto pairs = run_replicates(samples, seed, threads, [&](Rng& rng, std::size_t) {
    auto chain = simulate_census(law, 1, 2, rng);
    Pair p{0, 0};
    if (!chain.empty()) p.m1 = chain[0].M_next;
    if (chain.size() > 1) p.m2 = chain[1].M_next;
    return p;
  });

  // The reference side is a fresh sample: for each cell, as many sums of m
  // independent M_1 draws as the cell has pairs. Estimating the M_1 law from
  // the tested pairs themselves makes the statistic anticonservative when a
  // cell holds a large share of the data.
  std::vector<std::uint64_t> cell_size(max_m + 1, 0);
  for (const auto& p : pairs) {
    if (p.m1 >= 1 && p.m1 <= max_m) ++cell_size[p.m1];
  }
  std::size_t draws = 0;
  for (std::uint64_t m = 1; m <= max_m; ++m) {
    if (cell_size[m] >= min_cell) draws += m * cell_size[m];
  }
  const auto fresh = run_replicates(draws, derive_seed(seed, 1), threads, [&](Rng& rng, std::size_t) {
    const auto chain = simulate_census(law, 1, 1, rng);
    return chain.empty() ? std::uint64_t{0} : chain[0].M_next;
  });

  BranchingReport report{{}, samples, true};
  std::size_t next = 0;
  for (std::uint64_t m = 1; m <= max_m; ++m) {
    ResampleCell cell{m, cell_size[m], {}, cell_size[m] < min_cell};
    if (!cell.skipped) {
      std::map<std::uint64_t, std::uint64_t> observed, reference;
      for (const auto& p : pairs) {
        if (p.m1 == m) ++observed[p.m2];
      }
      for (std::uint64_t i = 0; i < cell_size[m]; ++i) {
        std::uint64_t sum = 0;
        for (std::uint64_t j = 0; j < m; ++j) sum += fresh[next++];
        ++reference[sum];
      }
      cell.test = chi_square_homogeneity(observed, reference, alpha);
      report.passed = report.passed && cell.test.passed;
    }
    report.cells.push_back(cell);
  }
  return report;
}

}  // namespace alleles
