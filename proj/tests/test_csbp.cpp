#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "alleles/csbp.hpp"
#include "alleles/limitcheck.hpp"
#include "alleles/stats.hpp"
#include "csbp_oracles.hpp"
#include "doctest.h"

using namespace alleles;

namespace {

std::vector<double> tau_draws(const LevyMeasure& m, double x, std::size_t n, std::uint64_t seed) {
  return run_replicates(n, seed, 1, [&](Rng& rng, std::size_t) { return sample_tau(m, x, rng); });
}

}  // namespace

TEST_CASE("measure parameters are validated") {
  CHECK_THROWS_AS(LevyMeasure(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(LevyMeasure(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(LevyMeasure(std::nan(""), 1.0), DomainError);
  const LevyMeasure m(1.0, 1.0);
  CHECK_THROWS_AS(m.tail(0.0), DomainError);
  CHECK_THROWS_AS(m.cumulant(-1.0), DomainError);
  CHECK(m.beta() == doctest::Approx(0.5));
}

TEST_CASE("cumulant closed form") {
  const LevyMeasure m(1.0, 1.0);
  CHECK(m.cumulant(0.0) == 0.0);
  CHECK(m.cumulant(4.0) == doctest::Approx(2.0).epsilon(1e-14));
  for (auto [c, s2] : {std::pair{1.0, 1.0}, std::pair{0.5, 2.0}, std::pair{3.0, 0.25}}) {
    const LevyMeasure k(c, s2);
    const double h = 1e-6;
    CHECK(k.cumulant(h) / h == doctest::Approx(1.0 / c).epsilon(1e-5));
    for (double q : {0.1, 1.0, 4.0, 10.0, 100.0}) {
      CAPTURE(q);
      CHECK(std::abs(k.cumulant(q) - oracle::cumulant(c, s2, q)) <= 1e-6);
      CHECK(std::abs(k.cumulant(q) - cumulant_by_quadrature(k, q)) <= 1e-6);
    }
    // Concave and increasing on a grid.
    double prev = 0.0, prev_slope = 1e300;
    for (double q = 0.5; q < 50; q += 0.5) {
      const double v = k.cumulant(q);
      CHECK(v > prev);
      CHECK((v - prev) <= prev_slope * (1 + 1e-12));
      prev_slope = v - prev;
      prev = v;
    }
  }
}

TEST_CASE("tail closed form") {
  const LevyMeasure m(1.0, 1.0);
  CHECK(std::abs(m.tail(1.0) - oracle::tail(1.0, 1.0, 1.0)) <= 1e-9);
  CHECK(std::abs(m.tail(1.0) - tail_by_quadrature(m, 1.0)) <= 1e-9);
  for (auto [c, s2] : {std::pair{0.5, 2.0}, std::pair{2.0, 0.5}}) {
    const LevyMeasure k(c, s2);
    for (double y : {1e-3, 0.1, 1.0, 5.0}) {
      CAPTURE(y);
      CHECK(k.tail(y) == doctest::Approx(oracle::tail(c, s2, y)).epsilon(1e-8));
    }
  }
  double prev = m.tail(1e-6);
  for (double y = 1e-6 * 1.5; y <= 1e3; y *= 1.5) {
    const double v = m.tail(y);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(m.tail(1e6) == 0.0);
}

TEST_CASE("small-jump mass and inverse tail") {
  const LevyMeasure m(1.3, 0.7);
  for (double eps : {1e-4, 1e-2, 1.0}) {
    boost::math::quadrature::tanh_sinh<double> rule;
    const double direct =
        rule.integrate([&](double y) {
          if (y <= 0.0) return 0.0;
          return std::exp(std::log(1.3) - 0.5 * std::log(2 * std::numbers::pi * 0.7) - 0.5 * std::log(y) -
                          1.3 * 1.3 * y / (2 * 0.7));
        }, 0.0, eps);
    CHECK(m.small_jump_mass(eps) == doctest::Approx(direct).epsilon(1e-8));
  }
  const double eps = 1e-3;
  for (double frac : {1.0, 0.5, 1e-3, 1e-8}) {
    const double target = frac * m.tail(eps);
    const double y = m.inverse_tail(target, eps);
    CHECK(y >= eps);
    CHECK(m.tail(y) == doctest::Approx(target).epsilon(1e-8));
  }
  CHECK_THROWS_AS(m.inverse_tail(2 * m.tail(eps), eps), DomainError);
}

TEST_CASE("first-passage density integrates to one") {
  for (double c : {0.5, 1.0, 2.0}) {
    for (double s2 : {0.5, 1.0, 2.0}) {
      const LevyMeasure m(c, s2);
      for (double x : {0.5, 1.0, 2.0}) {
        CAPTURE(c);
        CAPTURE(s2);
        CAPTURE(x);
        CHECK(std::abs(tau_density_integral(m, x) - 1.0) <= 1e-8);
        CHECK(m.tau_density(x, 0.7) == doctest::Approx(oracle::tau_density(c, s2, x, 0.7)).epsilon(1e-12));
        for (double y : {0.1, x / c, 3.0}) CHECK(std::abs(m.tau_cdf(x, y) - oracle::tau_cdf(c, s2, x, y)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("first-passage sampler") {
  const LevyMeasure m(1.0, 1.0);
  SUBCASE("mean") {
    const auto v = tau_draws(m, 1.0, 1'000'000, 1);
    const auto e = estimate_mean(v);
    CHECK(std::abs(e.mean - 1.0) <= 3 * std::sqrt(e.variance) / 1e3);
  }
  SUBCASE("distribution") {
    for (auto [c, s2, x] : {std::tuple{1.0, 1.0, 1.0}, std::tuple{0.5, 2.0, 0.3}, std::tuple{2.0, 0.5, 3.0}}) {
      const LevyMeasure k(c, s2);
      const auto r = ks_one_sample(tau_draws(k, x, 100'000, 2), [&](double y) { return k.tau_cdf(x, y); }, 0.01);
      CAPTURE(c);
      CHECK(r.statistic <= 0.006);
    }
  }
  SUBCASE("additivity") {
    auto sum = tau_draws(m, 0.5, 100'000, 4);
    const auto other = tau_draws(m, 1.0, 100'000, 5);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += other[i];
    CHECK(ks_two_sample(sum, tau_draws(m, 1.5, 100'000, 6), 0.01).passed);
  }
}

TEST_CASE("atoms of the Poisson measure") {
  const LevyMeasure m(1.0, 1.0);
  const double eps = 0.01, mass = 1.0;
  Rng rng = make_stream(7, 0);
  CHECK(sample_atoms(m, mass, eps, 0, rng).atoms.empty());
  CHECK_THROWS_AS(sample_atoms(m, mass, 0.0, 4, rng), DomainError);

  const std::size_t n = 100'000;
  const auto draws = run_replicates(n, 8, 1, [&](Rng& r, std::size_t) { return sample_atoms(m, mass, eps, 4, r); });

  SUBCASE("count is Poisson") {
    const double mean = mass * m.tail(eps);
    boost::math::poisson_distribution<double> law(mean);
    std::vector<std::uint64_t> counts;
    for (const auto& d : draws) {
      if (d.count >= counts.size()) counts.resize(d.count + 1, 0);
      ++counts[d.count];
    }
    std::vector<double> probs(counts.size());
    for (std::size_t k = 0; k < probs.size(); ++k) probs[k] = boost::math::pdf(law, static_cast<double>(k));
    const auto r = chi_square_gof(counts, probs, 0.01);
    CAPTURE(r.p_value);
    CHECK(r.passed);
  }
  SUBCASE("largest atom") {
    std::vector<double> largest;
    for (const auto& d : draws) largest.push_back(d.atoms.empty() ? eps : d.atoms.front());
    const auto r = ks_one_sample(largest, [&](double t) { return std::exp(-mass * m.tail(std::max(t, eps))); }, 0.01, eps);
    CHECK(r.passed);
  }
  SUBCASE("first moment with the small-jump correction") {
    std::vector<double> total;
    for (const auto& d : draws) total.push_back(d.sum + mass * m.small_jump_mass(eps));
    const auto e = estimate_mean(total);
    // int y nu(dy) = c * (1/c) = 1 per unit mass.
    CHECK(std::abs(e.mean - mass) <= 3 * e.standard_error);
  }
  SUBCASE("atoms are sorted, above eps, and consistent with count and sum") {
    for (const auto& d : draws) {
      REQUIRE(d.atoms.size() == std::min<std::uint64_t>(d.count, 4));
      REQUIRE(std::is_sorted(d.atoms.rbegin(), d.atoms.rend()));
      double s = 0.0;
      for (double a : d.atoms) {
        REQUIRE(a > eps);
        s += a;
      }
      REQUIRE(s <= d.sum * (1 + 1e-12));
    }
  }
}

TEST_CASE("atom sum matches the first-passage mean and variance") {
  // Atoms with intensity z nu: sum + z m_eps ~ tau_{cz} has mean z and
  // variance c z sigma^2 / c^3; dropping atoms below eps lowers the variance
  // by z int_0^eps y^2 nu(dy), which we keep small by taking eps tiny.
  const LevyMeasure m(1.0, 1.0);
  const double eps = 1e-4, z = 0.7;
  const auto totals = run_replicates(100'000, 9, 1, [&](Rng& r, std::size_t) {
    const auto d = sample_atoms(m, z, eps, 1, r);
    return d.sum + z * m.small_jump_mass(eps);
  });
  const auto e = estimate_mean(totals);
  CHECK(std::abs(e.mean - z) <= 3 * e.standard_error);
  const double var = m.tau_variance(m.c() * z);
  // Standard error of the sample variance, from the fourth central moment.
  double m4 = 0.0;
  for (double v : totals) m4 += std::pow(v - e.mean, 4);
  m4 /= static_cast<double>(totals.size());
  const double se_var = std::sqrt((m4 - e.variance * e.variance) / static_cast<double>(totals.size()));
  CHECK(std::abs(e.variance - var) <= 3 * se_var);
}

TEST_CASE("chain transitions") {
  const LevyMeasure m(1.0, 1.0);
  Rng rng = make_stream(10, 0);
  CHECK(sample_csbp_chain(m, 2.5, 0, rng) == std::vector<double>{2.5});
  CHECK_THROWS_AS(sample_csbp_chain(m, 0.0, 1, rng), DomainError);

  const LevyMeasure k(2.0, 0.5);
  const double x = 1.2;
  const auto one = run_replicates(100'000, 11, 1, [&](Rng& r, std::size_t) { return sample_csbp_chain(k, x / 2.0, 1, r)[1]; });
  CHECK(ks_two_sample(one, tau_draws(k, x, 100'000, 12), 0.01).passed);

  const auto third = run_replicates(100'000, 13, 1, [&](Rng& r, std::size_t) { return sample_csbp_chain(k, 0.8, 3, r)[3]; });
  const auto e = estimate_mean(third);
  CHECK(std::abs(e.mean - 0.8) <= 3 * e.standard_error);
}

TEST_CASE("definition-based tree") {
  const LevyMeasure m(1.0, 1.0);
  Rng rng = make_stream(14, 0);
  const auto single = sample_tree(m, FixedRoot{1.5}, 0, 1e-3, 8, rng);
  CHECK(single.tree.size() == 1);
  CHECK(single.tree.mass(UVertex::root()) == 1.5);
  CHECK(single.m_eps == doctest::Approx(m.small_jump_mass(1e-3)));

  for (int r = 0; r < 300; ++r) {
    const auto t = sample_tree(m, TauRoot{1.0}, 3, 1e-3, 8, rng);
    t.tree.validate();
    REQUIRE(t.atom_count.size() == t.tree.size());
    for (std::size_t i = 0; i < t.tree.size(); ++i) {
      const auto& node = t.tree.node(i);
      REQUIRE(node.size > 0.0);
      REQUIRE(node.child_count <= 8);
      const auto kids = t.tree.children(i);
      for (std::size_t j = 1; j < kids.size(); ++j) REQUIRE(kids[j - 1].size >= kids[j].size);
      double s = 0.0;
      for (const auto& kid : kids) s += kid.size;
      REQUIRE(s <= t.atom_sum[i] * (1 + 1e-12));
    }
  }
  CHECK_THROWS_AS(sample_tree(m, FixedRoot{50.0}, 6, 1e-4, 64, rng, 1000), std::length_error);
  CHECK_THROWS_AS(sample_tree(m, FixedRoot{1.0}, 1, 0.0, 8, rng), DomainError);
}

TEST_CASE("definition-based level sum against the chain") {
  const LevyMeasure m(1.0, 1.0);
  const auto outcome = check_tree_level_sum(m, 1.0, 1e-4, kDefaultTopJ, RunOptions{10'000, 15, 1, 0.01, Caps{}});
  CHECK(all_passed(outcome.reports));
}

TEST_CASE("subordinator construction") {
  const LevyMeasure m(1.0, 1.0);
  SUBCASE("depth zero gives a first-passage root") {
    const auto roots = run_replicates(20'000, 16, 1, [&](Rng& r, std::size_t) {
      const auto t = sample_tree_via_subordinator(m, 1.0, 0, 1e-4, 8, r);
      return t.tree.mass(UVertex::root());
    });
    CHECK(ks_one_sample(roots, [&](double y) { return m.tau_cdf(1.0, y); }, 0.01).passed);
  }
  SUBCASE("agrees with the definition-based sampler") {
    const auto outcome = check_csbp_equivalence(m, 1.0, 1e-3, kDefaultTopJ, RunOptions{10'000, 17, 1, 0.01, Caps{}});
    CHECK(all_passed(outcome.reports));
  }
  SUBCASE("trees are valid and reproducible") {
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng a = make_stream(18, s), b = make_stream(18, s);
      const auto x = sample_tree_via_subordinator(m, 0.8, 2, 1e-3, 8, a);
      const auto y = sample_tree_via_subordinator(m, 0.8, 2, 1e-3, 8, b);
      x.tree.validate();
      REQUIRE(x.tree.size() == y.tree.size());
      for (std::size_t i = 0; i < x.tree.size(); ++i) REQUIRE(x.tree.node(i).size == y.tree.node(i).size);
    }
  }
}
