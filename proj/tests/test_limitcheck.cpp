#include <cmath>

#include "alleles/csbp.hpp"
#include "alleles/limitcheck.hpp"
#include "doctest.h"

using namespace alleles;

namespace {

RunOptions small_run(std::size_t replicates, std::uint64_t seed, unsigned threads = 1) {
  RunOptions r;
  r.replicates = replicates;
  r.seed = seed;
  r.threads = threads;
  return r;
}

nlohmann::json as_json(const CheckOutcome& o) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : o.reports) j.push_back(to_json(r));
  for (const auto& c : o.columns) j.push_back({{"name", c.name}, {"values", c.values}});
  return j;
}

const FitReport* find_report(const CheckOutcome& o, const std::string& fragment) {
  for (const auto& r : o.reports) {
    if (r.name.find(fragment) != std::string::npos) return &r;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("scaling regime instantiation") {
  const ScalingRegime r(256, 1.0, 1.0);
  CHECK(r.ancestors() == 256);
  CHECK(r.mutation_p() == doctest::Approx(1.0 / 256));
  const ScalingRegime s(100, 0.333, 2.5);
  CHECK(s.ancestors() == 33);
  CHECK(s.mutation_p() == doctest::Approx(0.025));
  CHECK(ScalingRegime(1, 1.0, 5.0).mutation_p() == 1.0);
  CHECK_THROWS_AS(ScalingRegime(256, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(ScalingRegime(256, 1.0, -1.0), DomainError);
  CHECK_THROWS_AS(ScalingRegime(256, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(ScalingRegime(0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(ScalingRegime(1, 0.4, 1.0), DomainError);
  // The ratios approach the regime constants.
  for (std::uint64_t n : {10u, 1000u, 100000u}) {
    const ScalingRegime t(n, 0.37, 1.7);
    CHECK(std::abs(static_cast<double>(t.ancestors()) / n - 0.37) <= 0.5 / n);
    CHECK(t.mutation_p() * n == doctest::Approx(1.7));
  }
}

TEST_CASE("checks require a critical base law") {
  const ScalingRegime r(16, 1.0, 1.0);
  const OffspringLaw sub(std::vector<double>{0.5, 0.3, 0.2});
  CHECK_THROWS_AS(check_root_convergence(r, sub, small_run(100, 1)), DomainError);
  CHECK_THROWS_AS(check_census_chain(r, binary_critical_law(), 0, small_run(100, 1)), DomainError);
  CHECK_THROWS_AS(check_census_chain(r, binary_critical_law(), 5, small_run(100, 1)), DomainError);
  CHECK_THROWS_AS(check_tail_limit(r, binary_critical_law(), {{0.0, 1.0}}, small_run(100, 1)), DomainError);
  CHECK_THROWS(check_tree_convergence(r, binary_critical_law(), {UVertex::parse("/1/1/1")}, small_run(100, 1)));
}

TEST_CASE("tail prediction takes the smaller threshold") {
  const ScalingRegime r(16, 1.0, 1.0);
  const LevyMeasure m(1.0, 1.0);
  const std::vector<TailPoint> grid{{2.0, 0.5}, {0.5, 2.0}, {10.0, 0.5}, {0.5, 1e9}};
  const auto o = check_tail_limit(r, binary_critical_law(), grid, small_run(2000, 2));
  REQUIRE(o.reports.size() == 4);
  auto predicted = [&](std::size_t i) { return o.reports[i].metadata.at("predicted").get<double>(); };
  CHECK(predicted(0) == predicted(1));
  CHECK(predicted(0) == doctest::Approx(m.tail(0.5)));
  // m / c < t: the prediction is the m-only tail.
  CHECK(predicted(2) == doctest::Approx(m.tail(0.5)));
  // m -> infinity reduces to the t-only tail.
  CHECK(predicted(3) == doctest::Approx(m.tail(0.5)));

  const ScalingRegime r2(16, 1.0, 2.0);
  const auto o2 = check_tail_limit(r2, binary_critical_law(), {{3.0, 2.0}}, small_run(2000, 2));
  CHECK(o2.reports[0].metadata.at("predicted").get<double>() == doctest::Approx(LevyMeasure(2.0, 1.0).tail(1.0) / 2.0));
}

TEST_CASE("tail points with few hits are inconclusive") {
  const ScalingRegime r(64, 1.0, 1.0);
  const auto o = check_tail_limit(r, binary_critical_law(), {{50.0, 50.0}}, small_run(1000, 3));
  REQUIRE(o.reports.size() == 1);
  CHECK(o.reports[0].inconclusive);
  CHECK_FALSE(o.reports[0].passed);
  CHECK(all_passed(o.reports));
}

TEST_CASE("unoccupied pattern vertices are inconclusive") {
  const ScalingRegime r(4, 0.25, 1.0);
  const auto o = check_tree_convergence(r, binary_critical_law(), {UVertex::parse("/4/4")}, small_run(100, 4),
                                        TreeCheckOptions{1e-2, 8, 0.03, 0.1, 0.05, false, 100});
  const auto* ks = find_report(o, "vs Z_u u=/4/4");
  REQUIRE(ks);
  REQUIRE(ks->metadata.at("occupied").get<std::size_t>() == 0);
  CHECK(ks->inconclusive);
  CHECK_FALSE(ks->passed);
}

TEST_CASE("root check at small n produces both reports") {
  const ScalingRegime r(32, 1.0, 1.0);
  const auto o = check_root_convergence(r, binary_critical_law(), small_run(2000, 5));
  const auto* ks = find_report(o, "root KS");
  const auto* col = find_report(o, "collapse");
  REQUIRE(ks);
  REQUIRE(col);
  CHECK(ks->threshold == 0.03);
  CHECK(ks->statistic > 0.0);
  CHECK(col->statistic >= 0.0);
  CHECK(col->statistic <= 1.0);
  REQUIRE(!o.columns.empty());
  CHECK(o.columns[0].values.size() == 2000);
}

TEST_CASE("root trend report over several n") {
  const auto o = check_root_trend(binary_critical_law(), 1.0, 1.0, {8, 16, 32}, small_run(2000, 6));
  const auto* trend = find_report(o, "trend");
  REQUIRE(trend);
  CHECK(trend->metadata.at("ks_distances").size() == 3);
}

TEST_CASE("census and tree reports at small n") {
  const ScalingRegime r(32, 1.0, 1.0);
  const auto census = check_census_chain(r, binary_critical_law(), 2, small_run(2000, 7));
  for (const auto& rep : census.reports) {
    if (rep.name.find("extinction") != std::string::npos) CHECK(rep.informational);
  }
  const auto tree = check_tree_convergence(r, binary_critical_law(), {UVertex::root(), UVertex::parse("/1")},
                                           small_run(2000, 8));
  CHECK(find_report(tree, "root KS"));
  CHECK(find_report(tree, "u=/1"));
}

TEST_CASE("reports are reproducible and independent of the thread count") {
  const ScalingRegime r(32, 1.0, 1.0);
  const auto base = binary_critical_law();
  const auto a = as_json(check_root_convergence(r, base, small_run(5000, 9, 1)));
  const auto b = as_json(check_root_convergence(r, base, small_run(5000, 9, 1)));
  const auto c = as_json(check_root_convergence(r, base, small_run(5000, 9, 4)));
  CHECK(a == b);
  CHECK(a == c);
  const auto d = as_json(check_root_convergence(r, base, small_run(5000, 10, 1)));
  CHECK(a != d);

  const std::vector<UVertex> pattern{UVertex::root(), UVertex::parse("/1")};
  CHECK(as_json(check_tree_convergence(r, base, pattern, small_run(1000, 11, 1))) ==
        as_json(check_tree_convergence(r, base, pattern, small_run(1000, 11, 3))));
  const LevyMeasure m(1.0, 1.0);
  CHECK(as_json(check_csbp_equivalence(m, 1.0, 1e-2, 16, small_run(1000, 12, 1))) ==
        as_json(check_csbp_equivalence(m, 1.0, 1e-2, 16, small_run(1000, 12, 2))));
}
