#include "alleles/walker.hpp"

#include <ostream>

namespace alleles {

FamilyDraw walk_root_pair(const MarkedOffspringLaw& law, std::uint64_t ancestors, Rng& rng, const Caps& caps) {
  LawSteps steps(law, rng);
  return walk_root_pair(steps, ancestors, caps);
}

std::vector<CensusStep> walk_chain(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t levels, Rng& rng,
                                   const Caps& caps) {
  LawSteps steps(law, rng);
  return walk_chain(steps, ancestors, levels, caps);
}

AlleleSample walk_allele_tree(const MarkedOffspringLaw& law, std::uint64_t ancestors, Rng& rng, const Caps& caps) {
  LawSteps steps(law, rng);
  return walk_allele_tree(steps, ancestors, rng, caps);
}

AlleleTree walk_allele_levels(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::size_t depth, Rng& rng,
                              const Caps& caps) {
  LawSteps steps(law, rng);
  return walk_allele_levels(steps, ancestors, depth, rng, caps);
}

void write_trace_csv(std::ostream& out, std::uint64_t ancestors, std::span<const TraceRow> trace) {
  out << "step,position,mutant_mark\n";
  out << 0 << ',' << ancestors << ',' << 0 << '\n';
  for (const auto& r : trace) out << r.step << ',' << r.position << ',' << r.mutant_mark << '\n';
}

}  // namespace alleles
