#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/chi_squared.hpp>

#include "alleles/random.hpp"
#include "alleles/stats.hpp"
#include "doctest.h"

using namespace alleles;

namespace {

std::vector<double> uniforms(std::size_t n, std::uint64_t seed, double shift = 0.0) {
  Rng rng = make_stream(seed, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng) + shift;
  return v;
}

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

TEST_CASE("Kolmogorov distribution") {
  // Tabulated asymptotic critical values.
  CHECK(kolmogorov_quantile(0.05) == doctest::Approx(1.35810).epsilon(1e-5));
  CHECK(kolmogorov_quantile(0.01) == doctest::Approx(1.62762).epsilon(1e-5));
  CHECK(kolmogorov_survival(kolmogorov_quantile(0.2)) == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(5.0) < 1e-20);
  CHECK(ks_scale(100.0) == doctest::Approx(10.0 + 0.12 + 0.011));
}

TEST_CASE("one-sample KS on synthetic data") {
  const std::size_t n = 10'000;
  const auto same = ks_one_sample(uniforms(n, 1), uniform_cdf, 0.01);
  CHECK(same.passed);
  CHECK(same.critical_value == doctest::Approx(kolmogorov_quantile(0.01) / ks_scale(n)));
  const auto shifted = ks_one_sample(uniforms(n, 2, 0.05), uniform_cdf, 0.01);
  CHECK_FALSE(shifted.passed);
  CHECK(shifted.statistic == doctest::Approx(0.05).epsilon(0.2));
}

TEST_CASE("one-sample KS is exact on small and lattice samples") {
  // Sample {0.5}: sup |F_n - F| = 0.5 at both sides of the jump.
  CHECK(ks_statistic({0.5}, uniform_cdf) == doctest::Approx(0.5));
  // Sample {0.2, 0.4}: right limits 0.5 - 0.2 and 1 - 0.4, left limits 0.2 and 0.4 - 0.5.
  CHECK(ks_statistic({0.4, 0.2}, uniform_cdf) == doctest::Approx(0.6));
  // Tied lattice data: F_n jumps 1/3, 1/2, 1/6 at 0, 1/2, 1; the largest gap
  // is 1/3, on the right of 0 and of 1/2.
  const std::vector<double> lattice{0, 0, 0.5, 0.5, 0.5, 1};
  CHECK(ks_statistic(lattice, uniform_cdf) == doctest::Approx(1.0 / 3));
  CHECK(ks_statistic({0.5, 0.5}, uniform_cdf) == doctest::Approx(0.5));
  // Floor censoring: samples at the floor carry only the right limit.
  CHECK(ks_statistic({0.0, 0.0}, [](double x) { return x < 0 ? 0.0 : 0.9 + 0.1 * std::min(x, 1.0); }, 0.0) ==
        doctest::Approx(0.1));
}

TEST_CASE("two-sample KS") {
  CHECK(ks_statistic(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}) == 1.0);
  CHECK(ks_statistic(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  // Ties across samples are resolved before comparing.
  CHECK(ks_statistic(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 2}) == doctest::Approx(1.0 / 3));

  const auto a = uniforms(5000, 3), b = uniforms(7000, 4), c = uniforms(7000, 5, 0.1);
  CHECK(ks_statistic(a, b) == ks_statistic(b, a));
  CHECK(ks_statistic(a, c) == ks_statistic(c, a));
  const auto same = ks_two_sample(a, b, 0.01);
  CHECK(same.passed);
  CHECK(same.n_eff == doctest::Approx(5000.0 * 7000 / 12000));
  CHECK_FALSE(ks_two_sample(a, c, 0.01).passed);
}

TEST_CASE("chi-square survival agrees with the chi-square distribution") {
  for (std::size_t df : {1u, 3u, 10u, 57u}) {
    boost::math::chi_squared_distribution<double> d(static_cast<double>(df));
    for (double x : {0.5, 2.0, 10.0, 80.0}) {
      CAPTURE(df);
      CAPTURE(x);
      CHECK(chi_square_survival(x, df) == doctest::Approx(boost::math::cdf(boost::math::complement(d, x))).epsilon(1e-9));
    }
  }
}

TEST_CASE("chi-square goodness of fit") {
  SUBCASE("hand example") {
    // Expected 25 each; statistic (30-25)^2/25 + (20-25)^2/25 + 0 + 0 = 2 on 3 df.
    const std::vector<std::uint64_t> obs{30, 20, 25, 25};
    const std::vector<double> p{0.25, 0.25, 0.25, 0.25};
    const auto r = chi_square_gof(obs, p, 0.01);
    CHECK(r.statistic == doctest::Approx(2.0));
    CHECK(r.df == 3);
    CHECK(r.passed);
  }
  SUBCASE("small cells pool left to right") {
    const std::vector<std::uint64_t> obs{500, 490, 6, 2, 2};
    const std::vector<double> p{0.5, 0.49, 0.006, 0.002, 0.002};
    const auto r = chi_square_gof(obs, p, 0.01);
    CHECK(r.cells < 5);
    CHECK(r.passed);
  }
  SUBCASE("uncovered mass becomes an extra cell") {
    const std::vector<std::uint64_t> obs{400, 400, 200};
    const std::vector<double> p{0.4, 0.4};
    CHECK(chi_square_gof(obs, p, 0.01).passed);
    CHECK_FALSE(chi_square_gof(std::vector<std::uint64_t>{300, 600, 100}, p, 0.01).passed);
  }
}

TEST_CASE("chi-square homogeneity") {
  std::map<int, std::uint64_t> a{{0, 100}, {1, 200}, {2, 300}}, b{{0, 200}, {1, 400}, {2, 600}};
  const auto same = chi_square_homogeneity(a, b, 0.01);
  CHECK(same.statistic == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(same.df == 2);
  std::map<int, std::uint64_t> c{{0, 300}, {1, 200}, {2, 100}};
  CHECK_FALSE(chi_square_homogeneity(a, c, 0.01).passed);
  // A category present in one sample only still counts.
  std::map<int, std::uint64_t> d{{0, 100}, {1, 200}, {2, 300}, {7, 50}};
  CHECK_FALSE(chi_square_homogeneity(a, d, 0.01).passed);
}

TEST_CASE("mean estimate") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto e = estimate_mean(v);
  CHECK(e.mean == 2.5);
  CHECK(e.variance == doctest::Approx(5.0 / 3));
  CHECK(e.standard_error == doctest::Approx(std::sqrt(5.0 / 3 / 4)));
  CHECK(e.n == 4);
}

TEST_CASE("report aggregation") {
  FitReport ok;
  ok.statistic = 0.01;
  ok.threshold = 0.02;
  ok.decide();
  CHECK(ok.passed);
  FitReport bad = ok;
  bad.statistic = 0.03;
  bad.decide();
  CHECK_FALSE(bad.passed);
  FitReport info = bad;
  info.informational = true;
  FitReport unknown = bad;
  unknown.inconclusive = true;
  unknown.decide();
  CHECK_FALSE(unknown.passed);
  CHECK(all_passed(std::vector<FitReport>{ok, info, unknown}));
  CHECK_FALSE(all_passed(std::vector<FitReport>{ok, bad}));
  const auto j = to_json(ok);
  CHECK(j.at("passed") == true);
  CHECK(j.at("p_value").is_null());
}

TEST_CASE("replicate streams do not depend on the thread count") {
  auto draw = [](Rng& rng, std::size_t i) { return static_cast<double>(rng() % 1000) + static_cast<double>(i); };
  const auto one = run_replicates(5000, 42, 1, draw);
  const auto many = run_replicates(5000, 42, 8, draw);
  CHECK(one == many);
  CHECK(run_replicates(5000, 43, 1, draw) != one);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}
