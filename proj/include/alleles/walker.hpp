#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "alleles/genealogy.hpp"
#include "alleles/offspring.hpp"
#include "alleles/random.hpp"

namespace alleles {

/// State of the clone walk S_n = a + xi^c_1 + ... + xi^c_n - n.
struct WalkState {
  std::int64_t position;
  std::uint64_t steps_taken;
  std::uint64_t mutant_accumulator;  // xi^m_1 + ... + xi^m_n
};

struct TraceRow {
  std::uint64_t step;
  std::int64_t position;
  std::uint64_t mutant_mark;
};

/// Draws steps from a law with a caller-owned stream.
class LawSteps {
 public:
  LawSteps(const MarkedOffspringLaw& law, Rng& rng) : law_(&law), rng_(&rng) {}
  OffspringDraw next() { return sample_offspring(*law_, *rng_); }

 private:
  const MarkedOffspringLaw* law_;
  Rng* rng_;
};

/// Replays a fixed step sequence; running past its end is a logic error.
class FixedSteps {
 public:
  explicit FixedSteps(std::span<const OffspringDraw> steps) : steps_(steps) {}
  OffspringDraw next() {
    if (at_ == steps_.size()) throw std::logic_error("FixedSteps: step sequence exhausted");
    return steps_[at_++];
  }
  std::size_t consumed() const { return at_; }

 private:
  std::span<const OffspringDraw> steps_;
  std::size_t at_ = 0;
};

/// Walk with first-passage bookkeeping. passage(j) returns (varsigma(j),
/// Sigma(j)): the first time the walk hits -j and the accumulated mutant
/// marks at that time. Passage levels must be requested in nondecreasing
/// order since the walk only moves forward.
template <class Steps>
class CloneWalk {
 public:
  struct Passage {
    std::uint64_t time;
    std::uint64_t mutants;
  };

  CloneWalk(Steps& steps, std::uint64_t ancestors, std::uint64_t max_steps = Caps{}.max_individuals,
            std::vector<TraceRow>* trace = nullptr)
      : steps_(steps), max_steps_(max_steps), trace_(trace) {
    if (ancestors == 0) throw DomainError("CloneWalk: need at least one ancestor");
    state_ = {static_cast<std::int64_t>(ancestors), 0, 0};
  }

  const WalkState& state() const { return state_; }

  Passage passage(std::uint64_t j) {
    const std::int64_t target = -static_cast<std::int64_t>(j);
    if (state_.position < target) throw std::logic_error("CloneWalk: passage levels must be nondecreasing");
    while (state_.position > target) {
      if (state_.steps_taken == max_steps_) {
        PartialStatistics p;
        p.individuals = state_.steps_taken;
        throw TruncationError("walk step cap exceeded", p);
      }
      const OffspringDraw d = steps_.next();
      state_.position += static_cast<std::int64_t>(d.clones) - 1;
      ++state_.steps_taken;
      state_.mutant_accumulator += d.mutants;
      if (trace_) trace_->push_back({state_.steps_taken, state_.position, d.mutants});
    }
    return {state_.steps_taken, state_.mutant_accumulator};
  }

 private:
  Steps& steps_;
  WalkState state_{};
  std::uint64_t max_steps_;
  std::vector<TraceRow>* trace_;
};

/// (varsigma(0), Sigma(0)), distributed as (T_0, M_1) under P_ancestors.
template <class Steps>
FamilyDraw walk_root_pair(Steps& steps, std::uint64_t ancestors, const Caps& caps = {},
                          std::vector<TraceRow>* trace = nullptr) {
  CloneWalk<Steps> walk(steps, ancestors, caps.max_individuals, trace);
  const auto p = walk.passage(0);
  return {p.time, p.mutants};
}

/// (T~_k, M~_{k+1}) for k < levels, stopping early once M~ = 0; same layout
/// as simulate_census.
template <class Steps>
std::vector<CensusStep> walk_chain(Steps& steps, std::uint64_t ancestors, std::size_t levels, const Caps& caps = {},
                                   std::vector<TraceRow>* trace = nullptr) {
  CloneWalk<Steps> walk(steps, ancestors, caps.max_individuals, trace);
  std::vector<CensusStep> out;
  std::uint64_t cumulative = 0;  // M~_1 + ... + M~_k
  std::uint64_t prev_time = 0, prev_mutants = 0, seeds = ancestors;
  for (std::size_t k = 0; k < levels && seeds > 0; ++k) {
    if (k > caps.max_level) {
      PartialStatistics p;
      p.individuals = walk.state().steps_taken;
      p.levels_completed = k;
      throw TruncationError("level cap exceeded", p);
    }
    const auto p = walk.passage(cumulative);
    if (p.mutants < prev_mutants || (k > 0 && p.time <= prev_time)) {
      throw std::logic_error("walk_chain: passage bookkeeping out of order");
    }
    const CensusStep step{p.time - prev_time, p.mutants - prev_mutants};
    out.push_back(step);
    cumulative += step.M_next;
    seeds = step.M_next;
    prev_time = p.time;
    prev_mutants = p.mutants;
  }
  std::uint64_t total_T = 0, total_M = 0;
  for (const auto& s : out) {
    total_T += s.T;
    total_M += s.M_next;
  }
  if (total_T != walk.state().steps_taken || total_M != walk.state().mutant_accumulator) {
    throw std::logic_error("walk_chain: census does not match the consumed walk");
  }
  return out;
}

/// Family sequence read off the walk: family 0 is the ancestral family of
/// size varsigma(0); family j >= 1 is the excursion lambda(j) with delta(j)
/// mutant children, attached to the parent recorded for the j-th pending
/// mutant (first in, first out). Pending mutants are met in breadth-first
/// order, so with a depth limit the walk stops once every family up to that
/// level has been read.
template <class Steps>
std::vector<FamilyRecord> walk_families(Steps& steps, std::uint64_t ancestors, const Caps& caps = {},
                                        std::vector<TraceRow>* trace = nullptr,
                                        std::optional<std::size_t> depth_limit = std::nullopt) {
  CloneWalk<Steps> walk(steps, ancestors, caps.max_individuals, trace);
  std::vector<FamilyRecord> families;
  std::vector<std::size_t> pending;  // parent family of each pending mutant, in passage order
  std::vector<std::size_t> family_level;
  std::size_t next_pending = 0;

  auto p = walk.passage(0);
  families.push_back({p.time, Individual::npos, p.mutants});
  family_level.push_back(0);
  pending.insert(pending.end(), p.mutants, 0);
  std::uint64_t prev_time = p.time, prev_mutants = p.mutants;

  for (std::uint64_t j = 1; next_pending < pending.size(); ++j) {
    const std::size_t parent = pending[next_pending++];
    const std::size_t level = family_level[parent] + 1;
    if (depth_limit && level > *depth_limit) break;
    if (level > caps.max_level) {
      PartialStatistics partial;
      partial.individuals = walk.state().steps_taken;
      partial.levels_completed = level;
      throw TruncationError("level cap exceeded", partial);
    }
    p = walk.passage(j);
    if (p.mutants < prev_mutants || p.time <= prev_time) {
      throw std::logic_error("walk_families: passage bookkeeping out of order");
    }
    const std::size_t id = families.size();
    families.push_back({p.time - prev_time, parent, p.mutants - prev_mutants});
    family_level.push_back(level);
    pending.insert(pending.end(), p.mutants - prev_mutants, id);
    prev_time = p.time;
    prev_mutants = p.mutants;
  }
  return families;
}

template <class Steps>
AlleleSample walk_allele_tree(Steps& steps, std::uint64_t ancestors, Rng& tie_rng, const Caps& caps = {},
                              std::vector<TraceRow>* trace = nullptr) {
  const auto families = walk_families(steps, ancestors, caps, trace);
  AlleleSample s;
  s.tree = rank_family_forest(families, tie_rng);
  s.census = census_of(s.tree, ancestors);
  return s;
}

/// Walk analogue of simulate_allele_levels.
template <class Steps>
AlleleTree walk_allele_levels(Steps& steps, std::uint64_t ancestors, std::size_t depth, Rng& tie_rng,
                              const Caps& caps = {}) {
  const auto families = walk_families(steps, ancestors, caps, nullptr, depth);
  return rank_family_forest(families, tie_rng, depth);
}

// Convenience overloads drawing steps from `law` with `rng`.
FamilyDraw walk_root_pair(const MarkedOffspringLaw& law, std::uint64_t ancestors, Rng& rng, const Caps& caps = {});
std::vector<CensusStep> walk_chain(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t levels, Rng& rng,
                                   const Caps& caps = {});
AlleleSample walk_allele_tree(const MarkedOffspringLaw& law, std::uint64_t ancestors, Rng& rng, const Caps& caps = {});
AlleleTree walk_allele_levels(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t depth, Rng& rng,
                              const Caps& caps = {});

/// CSV with header "step,position,mutant_mark"; row 0 is the start.
void write_trace_csv(std::ostream& out, std::uint64_t ancestors, std::span<const TraceRow> trace);

}  // namespace alleles
