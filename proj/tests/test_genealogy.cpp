#include <map>
#include <tuple>

#include "alleles/exact.hpp"
#include "alleles/genealogy.hpp"
#include "doctest.h"

using namespace alleles;

namespace {

MarkedOffspringLaw half_marked_binary() { return binomial_mark(binary_critical_law(), Rational(1, 2)); }

// Every fixture law is critical in total, so whole trees have heavy-tailed
// size and depth. Tests that need many whole trees use this mean-3/4 law.
OffspringLaw subcritical_base() { return OffspringLaw(std::vector<Rational>{Rational(1, 2), Rational(1, 4), Rational(1, 4)}); }

// Structural checks every simulated tree must pass.
void check_tree(const AlleleSample& s, std::uint64_t ancestors) {
  s.tree.validate();
  REQUIRE(!s.tree.empty());
  const auto& nodes = s.tree.nodes();
  std::vector<std::uint64_t> T(s.census.T.size(), 0), M(s.census.M.size(), 0);
  REQUIRE(!M.empty());
  M[0] = ancestors;
  for (const auto& n : nodes) {
    REQUIRE(n.size > 0);
    T.at(n.level) += n.size;
    if (n.level + 1 < M.size()) M[n.level + 1] += n.degree;
    else REQUIRE(n.degree == 0);
  }
  CHECK(T == s.census.T);
  CHECK(M == s.census.M);
  CHECK(s.census.M[0] == ancestors);
}

}  // namespace

TEST_CASE("childless law: the root holds the ancestors") {
  const MarkedOffspringLaw law(0, 0, std::vector<double>{1.0});
  Rng rng = make_stream(1, 0);
  const auto s = simulate_allele_tree(law, 5, rng);
  CHECK(s.tree.size() == 1);
  CHECK(s.tree.mass(UVertex::root()) == 5);
  CHECK(s.tree.degree(UVertex::root()) == 0);
  CHECK(s.census.T == std::vector<std::uint64_t>{5});
  CHECK(s.census.M == std::vector<std::uint64_t>{5});
}

TEST_CASE("worked genealogy: family sizes and census") {
  // One ancestor (0) with clone descendants 1, 2, 3 and mutant children 4, 5, 6.
  // Families: root {0,1,2,3}; {4,7,8}; {5,9}; {6}; then {10} under {4,7,8}, {11} under {6}.
  const std::size_t np = Individual::npos;
  const std::vector<Individual> g{{np, false}, {0, false}, {0, false}, {1, false}, {0, true}, {1, true},
                                  {2, true},   {4, false}, {4, false}, {5, false}, {7, true}, {6, true}};
  Rng rng = make_stream(3, 0);
  const auto s = allele_tree_from_genealogy(g, rng);
  check_tree(s, 1);
  CHECK(s.tree.mass(UVertex::parse("/")) == 4);
  CHECK(s.tree.mass(UVertex::parse("/1")) == 3);
  CHECK(s.tree.mass(UVertex::parse("/2")) == 2);
  CHECK(s.tree.mass(UVertex::parse("/3")) == 1);
  CHECK(s.tree.mass(UVertex::parse("/1/1")) == 1);
  CHECK(s.tree.mass(UVertex::parse("/3/1")) == 1);
  CHECK(s.tree.mass(UVertex::parse("/2/1")) == 0);
  CHECK(s.tree.mass(UVertex::parse("/4")) == 0);
  CHECK(s.census.T == std::vector<std::uint64_t>{4, 6, 2});
  CHECK(s.census.M == std::vector<std::uint64_t>{1, 3, 2});
}

TEST_CASE("tied siblings are ranked uniformly at random") {
  // Root family of size 1 with two singleton mutant families; only the first
  // listed one has a child, so its rank reveals the tie-break.
  const std::size_t np = Individual::npos;
  const std::vector<Individual> g{{np, false}, {0, true}, {0, true}, {1, true}};
  Rng rng = make_stream(8, 0);
  const int n = 20'000;
  int first = 0;
  for (int i = 0; i < n; ++i) {
    const auto s = allele_tree_from_genealogy(g, rng);
    if (s.tree.degree(UVertex::parse("/1")) == 1) ++first;
  }
  CHECK(std::abs(first / static_cast<double>(n) - 0.5) <= 3 * std::sqrt(0.25 / n));
}

TEST_CASE("root pair at size one matches the enumerated probabilities") {
  const auto law = half_marked_binary();
  const auto table = enumerate_genealogies<Rational>(law, 1, 1);
  CHECK(table.get(1, 0) == Rational(1, 2));
  CHECK(table.get(1, 2) == Rational(1, 8));
  CHECK(joint_law_T0_M1<Rational>(law, 1, 1).get(1, 2) == Rational(1, 8));

  Rng rng = make_stream(4, 0);
  const int n = 200'000;
  int c0 = 0, c2 = 0;
  for (int i = 0; i < n; ++i) {
    const auto t = simulate_allele_levels(law, 1, 0, rng);
    const auto a = t.mass(UVertex::root());
    const auto d = t.degree(UVertex::root());
    c0 += a == 1 && d == 0;
    c2 += a == 1 && d == 2;
  }
  CHECK(std::abs(c0 / double(n) - 0.5) <= 3 * std::sqrt(0.25 / n));
  CHECK(std::abs(c2 / double(n) - 0.125) <= 3 * std::sqrt(0.125 * 0.875 / n));
}

TEST_CASE("structural invariants hold on every simulated tree") {
  const std::vector<MarkedOffspringLaw> laws{binomial_mark(subcritical_base(), 0.5), binomial_mark(subcritical_base(), 0.3),
                                             binomial_mark(subcritical_base(), 0.05)};
  Rng rng = make_stream(5, 0);
  for (const auto& law : laws) {
    for (std::uint64_t a : {1u, 2u, 3u}) {
      for (int r = 0; r < 1000; ++r) check_tree(simulate_allele_tree(law, a, rng), a);
    }
  }
  // Critical laws under tight caps: trees that finish must still be consistent.
  const std::vector<MarkedOffspringLaw> critical{half_marked_binary(), binomial_mark(geometric_truncated_law(), 0.3)};
  std::size_t finished = 0;
  for (const auto& law : critical) {
    for (int r = 0; r < 1000; ++r) {
      try {
        check_tree(simulate_allele_tree(law, 2, rng, Caps{20'000, 200}), 2);
        ++finished;
      } catch (const TruncationError&) {
      }
    }
  }
  CHECK(finished >= 1800);
}

TEST_CASE("root pair law matches the exact table") {
  const std::vector<MarkedOffspringLaw> laws{half_marked_binary(),
                                             binomial_mark(geometric_truncated_law(), Rational(1, 2))};
  for (std::size_t li = 0; li < laws.size(); ++li) {
    for (std::uint64_t a = 1; a <= 3; ++a) {
      const auto& law = laws[li];
      const std::uint64_t n_max = 40;
      const auto table = joint_law_T0_M1<double>(law, a, n_max);
      std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
      auto pairs = run_replicates(1'000'000, 100 * li + a, 1, [&](Rng& rng, std::size_t) {
        const auto f = sample_family(law, a, rng);
        return std::make_pair(f.size, f.mutants);
      });
      // Cells in table order; everything outside the table is one tail cell.
      std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> index;
      std::vector<double> probs;
      for (const auto& [key, p] : table.entries) {
        index[key] = probs.size();
        probs.push_back(p);
      }
      std::vector<std::uint64_t> observed(probs.size() + 1, 0);
      for (const auto& p : pairs) {
        auto it = index.find(p);
        ++observed[it == index.end() ? probs.size() : it->second];
      }
      probs.push_back(std::max(0.0, table.truncation_bound));
      const auto r = chi_square_gof(observed, probs, 0.01);
      CAPTURE(li);
      CAPTURE(a);
      CAPTURE(r.p_value);
      CHECK(r.passed);
    }
  }
}

TEST_CASE("direct tree root agrees with the family sampler") {
  const auto law = binomial_mark(subcritical_base(), Rational(1, 2));
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> tree_side, family_side;
  Rng a = make_stream(6, 0), b = make_stream(6, 1);
  for (int i = 0; i < 100'000; ++i) {
    const auto s = simulate_allele_tree(law, 2, a);
    ++tree_side[{std::min<std::uint64_t>(s.tree.mass(UVertex::root()), 15),
                 std::min<std::uint64_t>(s.tree.degree(UVertex::root()), 15)}];
    const auto f = sample_family(law, 2, b);
    ++family_side[{std::min<std::uint64_t>(f.size, 15), std::min<std::uint64_t>(f.mutants, 15)}];
  }
  CHECK(chi_square_homogeneity(tree_side, family_side, 0.01).passed);
}

TEST_CASE("census simulator agrees with the tree census") {
  const auto law = binomial_mark(OffspringLaw(std::vector<double>{0.5, 0.2, 0.2, 0.1}), 0.4);
  Rng a = make_stream(9, 0), b = make_stream(9, 1);
  std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>, std::uint64_t> x, y;
  for (int i = 0; i < 100'000; ++i) {
    const auto s = simulate_allele_tree(law, 1, a);
    const std::uint64_t t1 = s.census.T.size() > 1 ? s.census.T[1] : 0;
    const std::uint64_t tm1 = s.census.M.size() > 1 ? s.census.M[1] : 0;
    ++x[{std::min<std::uint64_t>(s.census.T[0], 12), std::min<std::uint64_t>(tm1, 12), std::min<std::uint64_t>(t1, 12)}];
    const auto c = simulate_census(law, 1, 2, b);
    const std::uint64_t m1 = c[0].M_next;
    const std::uint64_t ct1 = c.size() > 1 ? c[1].T : 0;
    ++y[{std::min<std::uint64_t>(c[0].T, 12), std::min<std::uint64_t>(m1, 12), std::min<std::uint64_t>(ct1, 12)}];
  }
  CHECK(chi_square_homogeneity(x, y, 0.01).passed);
}

TEST_CASE("depth-limited tree census agrees with the census simulator on a critical law") {
  const auto law = binomial_mark(geometric_truncated_law(), 0.4);
  Rng a = make_stream(13, 0), b = make_stream(13, 1);
  std::map<std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>, std::uint64_t> x, y;
  for (int i = 0; i < 100'000; ++i) {
    const auto t = simulate_allele_levels(law, 1, 1, a);
    std::uint64_t t1 = 0;
    for (const auto& n : t.nodes()) {
      if (n.level == 1) t1 += n.size;
    }
    ++x[{std::min<std::uint64_t>(t.mass(UVertex::root()), 12), std::min<std::uint64_t>(t.degree(UVertex::root()), 12),
         std::min<std::uint64_t>(t1, 12)}];
    const auto c = simulate_census(law, 1, 2, b);
    const std::uint64_t ct1 = c.size() > 1 ? c[1].T : 0;
    ++y[{std::min<std::uint64_t>(c[0].T, 12), std::min<std::uint64_t>(c[0].M_next, 12), std::min<std::uint64_t>(ct1, 12)}];
  }
  CHECK(chi_square_homogeneity(x, y, 0.01).passed);
}

TEST_CASE("depth-limited simulation stops at the requested level") {
  const auto law = binomial_mark(geometric_truncated_law(), 0.4);
  Rng rng = make_stream(10, 0);
  for (int i = 0; i < 500; ++i) {
    const auto t = simulate_allele_levels(law, 3, 1, rng);
    t.validate();
    for (const auto& n : t.nodes()) CHECK(n.level <= 1);
  }
}

TEST_CASE("caps raise truncation errors with partial statistics") {
  const auto law = binomial_mark(binary_critical_law(), 0.0);
  Rng rng = make_stream(12, 0);
  bool hit = false;
  for (int i = 0; i < 200 && !hit; ++i) {
    try {
      simulate_allele_tree(law, 50, rng, Caps{100, 10});
    } catch (const TruncationError& e) {
      hit = true;
      CHECK(e.partial().individuals <= 100);
    }
  }
  CHECK(hit);
  const auto chatty = binomial_mark(binary_critical_law(), 0.5);
  bool level_hit = false;
  for (int i = 0; i < 200 && !level_hit; ++i) {
    try {
      simulate_allele_tree(chatty, 20, rng, Caps{1'000'000, 1});
    } catch (const TruncationError& e) {
      level_hit = true;
      CHECK(e.partial().levels_completed >= 1);
    }
  }
  CHECK(level_hit);
}

TEST_CASE("simulation is a pure function of the stream") {
  const auto law = binomial_mark(geometric_truncated_law(), 0.3);
  Rng a = make_stream(77, 3), b = make_stream(77, 3);
  for (int i = 0; i < 200; ++i) {
    const auto x = simulate_allele_tree(law, 2, a);
    const auto y = simulate_allele_tree(law, 2, b);
    REQUIRE(x.census == y.census);
    REQUIRE(x.tree.size() == y.tree.size());
    for (std::size_t k = 0; k < x.tree.size(); ++k) REQUIRE(x.tree.node(k).size == y.tree.node(k).size);
  }
}

TEST_CASE("allele chain is a branching chain") {
  SUBCASE("no mutants: trivially passes") {
    const MarkedOffspringLaw law(1, 0, std::vector<double>{0.6, 0.4});
    const auto r = branching_resample_check(law, 10'000, 1);
    CHECK(r.passed);
    for (const auto& c : r.cells) CHECK(c.skipped);
  }
  SUBCASE("binary law at p = 1/2") {
    const auto r = branching_resample_check(half_marked_binary(), 1'000'000, 2);
    CHECK(r.passed);
    std::size_t tested = 0;
    for (const auto& c : r.cells) {
      if (!c.skipped) {
        ++tested;
        CHECK(c.samples >= 500);
        CHECK(c.test.p_value > 0.01);
      }
    }
    CHECK(tested >= 3);
  }
  SUBCASE("deterministic chain") {
    const MarkedOffspringLaw law(0, 1, std::vector<double>{0.0, 1.0});
    const auto r = branching_resample_check(law, 2'000, 3);
    CHECK(r.passed);
    REQUIRE(!r.cells.empty());
    CHECK(!r.cells[0].skipped);
    CHECK(r.cells[0].samples == 2'000);
  }
  SUBCASE("critical clones are rejected") {
    CHECK_THROWS_AS(branching_resample_check(binomial_mark(binary_critical_law(), 0.0), 100, 1), DomainError);
  }
}

TEST_CASE("vertex paths") {
  CHECK(UVertex::parse("/").is_root());
  CHECK(UVertex::parse("/1/2").to_string() == "/1/2");
  CHECK(UVertex::root().to_string() == "/");
  CHECK(UVertex::parse("/3/1").level() == 2);
  CHECK_THROWS(UVertex::parse("/0"));
  CHECK_THROWS(UVertex::parse("/a"));
}
