#include "alleles/limitcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include "alleles/numeric.hpp"
#include "alleles/walker.hpp"

namespace alleles {

ScalingRegime::ScalingRegime(std::uint64_t n, double x, double c) : n_(n), x_(x), c_(c) {
  if (n == 0) throw DomainError("regime: n must be at least 1");
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("regime: x must be positive");
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("regime: c must be positive");
  const double a = std::round(static_cast<double>(n) * x);
  if (a < 1.0) throw DomainError("regime: round(n x) must be at least 1");
  a_ = static_cast<std::uint64_t>(a);
  p_ = std::min(1.0, c / static_cast<double>(n));
}

MarkedOffspringLaw ScalingRegime::marked(const OffspringLaw& base) const { return binomial_mark(base, p_); }

namespace {

// Sub-experiment tags for derive_seed.
enum SeedTag : std::uint64_t {
  kPrelimitSide = 1,
  kLimitSide = 2,
  kWalkSide = 3,
  kDirectSide = 4,
  kDefinitionSide = 5,
  kSubordinatorSide = 6,
  kTrendBase = 1000,
};

nlohmann::json regime_json(const ScalingRegime& r) {
  return {{"n", r.n()}, {"x", r.x()}, {"c", r.c()}, {"a_n", r.ancestors()}, {"p_n", r.mutation_p()}};
}

LevyMeasure limit_measure(const ScalingRegime& r, const OffspringLaw& base) {
  const auto s = classify(binomial_mark(base, 0.0));
  if (s.clone_regime != Regime::critical) throw DomainError("base law must be critical");
  const double var = base.variance();
  if (!(var > 0.0)) throw DomainError("base law must have positive variance");
  return LevyMeasure(r.c(), var);
}

FitReport ks_report(std::string name, const KsResult& ks, std::vector<std::size_t> sizes, double alpha) {
  FitReport f;
  f.name = std::move(name);
  f.sample_sizes = std::move(sizes);
  f.statistic = ks.statistic;
  f.threshold = ks.critical_value;
  f.alpha = alpha;
  f.p_value = ks.p_value;
  f.decide();
  return f;
}

double frequency(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::string tag(const std::string& base, const ScalingRegime& r) { return base + " n=" + std::to_string(r.n()); }

}  // namespace

CheckOutcome check_root_convergence(const ScalingRegime& regime, const OffspringLaw& base, const RunOptions& run,
                                    const RootCheckOptions& opts) {
  const auto law = regime.marked(base);
  const auto measure = limit_measure(regime, base);
  const double n = static_cast<double>(regime.n());
  const auto draws = run_replicates(run.replicates, run.seed, run.threads, [&](Rng& rng, std::size_t) {
    return sample_family(law, regime.ancestors(), rng, run.caps.max_individuals);
  });

  CheckOutcome out;
  SampleColumn t0{tag("n^-2 T0", regime), {}}, m1{tag("n^-1 M1", regime), {}};
  std::size_t off = 0;
  for (const auto& d : draws) {
    const double t = static_cast<double>(d.size) / (n * n);
    const double m = static_cast<double>(d.mutants) / n;
    t0.values.push_back(t);
    m1.values.push_back(m);
    if (std::abs(m - regime.c() * t) > opts.collapse_delta) ++off;
  }

  const auto ks = ks_one_sample(t0.values, [&](double y) { return measure.tau_cdf(regime.x(), y); }, run.alpha);
  FitReport root;
  root.name = tag("root KS n^-2 T0 vs tau_x", regime);
  root.sample_sizes = {run.replicates};
  root.statistic = ks.statistic;
  root.threshold = opts.ks_threshold;
  root.alpha = run.alpha;
  root.p_value = ks.p_value;
  root.metadata = {{"regime", regime_json(regime)}, {"seed", run.seed}, {"ks_critical_value", ks.critical_value},
                   {"sigma2", base.variance()}};
  root.decide();

  FitReport collapse;
  collapse.name = tag("root collapse P(|n^-1 M1 - c n^-2 T0| > delta)", regime);
  collapse.sample_sizes = {run.replicates};
  collapse.statistic = frequency(off, draws.size());
  collapse.threshold = opts.collapse_threshold;
  collapse.alpha = run.alpha;
  collapse.informational = !opts.collapse_verdict;
  collapse.metadata = {{"regime", regime_json(regime)}, {"seed", run.seed}, {"delta", opts.collapse_delta}};
  collapse.decide();

  out.reports = {root, collapse};
  out.columns = {std::move(t0), std::move(m1)};
  return out;
}

CheckOutcome check_root_trend(const OffspringLaw& base, double x, double c, const std::vector<std::uint64_t>& n_list,
                              const RunOptions& run, const RootCheckOptions& opts) {
  if (n_list.empty()) throw DomainError("check_root_trend: empty n list");
  CheckOutcome out;
  std::vector<double> distances;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    RunOptions sub = run;
    sub.seed = derive_seed(run.seed, kTrendBase + n_list[i]);
    RootCheckOptions o = opts;
    o.collapse_verdict = opts.collapse_verdict && i + 1 == n_list.size();
    auto r = check_root_convergence(ScalingRegime(n_list[i], x, c), base, sub, o);
    distances.push_back(r.reports.front().statistic);
    for (auto& f : r.reports) out.reports.push_back(std::move(f));
    for (auto& col : r.columns) out.columns.push_back(std::move(col));
  }
  const double band = kolmogorov_quantile(run.alpha) / std::sqrt(static_cast<double>(run.replicates));
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < distances.size(); ++i) worst = std::max(worst, distances[i] - distances[i - 1]);
  FitReport trend;
  trend.name = "root KS trend across n";
  trend.sample_sizes = std::vector<std::size_t>(n_list.size(), run.replicates);
  trend.statistic = distances.size() > 1 ? worst : 0.0;
  trend.threshold = band;
  trend.alpha = run.alpha;
  trend.metadata = {{"n_list", n_list}, {"ks_distances", distances}, {"seed", run.seed}};
  trend.decide();
  out.reports.push_back(trend);
  return out;
}

CheckOutcome check_tail_limit(const ScalingRegime& regime, const OffspringLaw& base, const std::vector<TailPoint>& grid,
                              const RunOptions& run, const TailCheckOptions& opts) {
  for (const auto& g : grid) {
    if (!(g.t > 0.0) || !(g.m > 0.0)) throw DomainError("check_tail_limit: grid points must be positive");
  }
  const auto law = regime.marked(base);
  const auto measure = limit_measure(regime, base);
  const double n = static_cast<double>(regime.n());
  // Integer thresholds: T0 > t n^2  <=>  T0 > floor(t n^2), likewise for M1.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> cut;
  for (const auto& g : grid) {
    cut.emplace_back(static_cast<std::uint64_t>(std::floor(g.t * n * n)), static_cast<std::uint64_t>(std::floor(g.m * n)));
  }
  const auto blocks = run_blocks(run.replicates, run.seed, run.threads, [&](Rng& rng, std::size_t lo, std::size_t hi) {
    std::vector<std::uint64_t> hits(grid.size(), 0);
    for (std::size_t i = lo; i < hi; ++i) {
      const auto f = sample_family(law, 1, rng, run.caps.max_individuals);
      for (std::size_t g = 0; g < grid.size(); ++g) {
        if (f.size > cut[g].first || f.mutants > cut[g].second) ++hits[g];
      }
    }
    return hits;
  });
  std::vector<std::uint64_t> hits(grid.size(), 0);
  for (const auto& b : blocks) {
    for (std::size_t g = 0; g < grid.size(); ++g) hits[g] += b[g];
  }

  CheckOutcome out;
  const double N = static_cast<double>(run.replicates);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double level = std::min(grid[g].t, grid[g].m / regime.c());
    const double predicted = measure.tail(level) / regime.c();
    const double q = std::min(1.0, predicted / n);  // predicted P_1 frequency
    const double se = n * std::sqrt(q * (1.0 - q) / N);
    const double empirical = n * static_cast<double>(hits[g]) / N;
    FitReport f;
    f.name = tag("tail n P1(T0 > t n^2 or M1 > m n) at t=" + std::to_string(grid[g].t) + " m=" +
                     std::to_string(grid[g].m),
                 regime);
    f.sample_sizes = {run.replicates};
    f.statistic = se > 0.0 ? std::abs(empirical - predicted) / se : std::numeric_limits<double>::infinity();
    f.threshold = opts.max_standard_errors;
    f.alpha = run.alpha;
    f.p_value = std::erfc(f.statistic / std::sqrt(2.0));
    f.inconclusive = hits[g] < opts.min_hits;
    f.metadata = {{"regime", regime_json(regime)},
                  {"seed", run.seed},
                  {"hits", hits[g]},
                  {"empirical", empirical},
                  {"predicted", predicted},
                  {"standard_error", se},
                  {"note", "pointwise evaluation of a limit stated in L1_loc"}};
    f.decide();
    out.reports.push_back(f);
  }
  return out;
}

CheckOutcome check_census_chain(const ScalingRegime& regime, const OffspringLaw& base, std::size_t levels,
                                const RunOptions& run, const CensusCheckOptions& opts) {
  if (levels == 0 || levels > 4) throw DomainError("check_census_chain: levels must lie in 1..4");
  const auto law = regime.marked(base);
  const auto measure = limit_measure(regime, base);
  const double n = static_cast<double>(regime.n());

  const auto chains = run_replicates(run.replicates, derive_seed(run.seed, kPrelimitSide), run.threads,
                                     [&](Rng& rng, std::size_t) {
                                       auto steps = simulate_census(law, regime.ancestors(), levels, rng, run.caps);
                                       steps.resize(levels, CensusStep{0, 0});
                                       return steps;
                                     });
  const auto limits = run_replicates(run.replicates, derive_seed(run.seed, kLimitSide), run.threads,
                                     [&](Rng& rng, std::size_t) {
                                       return sample_csbp_chain(measure, regime.x() / regime.c(), levels, rng);
                                     });

  CheckOutcome out;
  for (std::size_t k = 0; k < levels; ++k) {
    SampleColumn t{tag("n^-2 T" + std::to_string(k), regime), {}};
    SampleColumn z{"Z" + std::to_string(k + 1), {}};
    std::size_t extinct = 0, below = 0, considered = 0, off = 0;
    for (std::size_t i = 0; i < chains.size(); ++i) {
      const double tk = static_cast<double>(chains[i][k].T) / (n * n);
      const double mk = static_cast<double>(chains[i][k].M_next) / n;
      t.values.push_back(tk);
      z.values.push_back(limits[i][k + 1]);
      if (chains[i][k].T == 0) ++extinct;
      if (limits[i][k + 1] < 1.0 / (n * n)) ++below;
      if (tk > opts.delta) {
        ++considered;
        if (std::abs(mk / (regime.c() * tk) - 1.0) > opts.collapse_delta) ++off;
      }
    }
    const std::string level = " k=" + std::to_string(k);
    auto two = ks_two_sample(t.values, z.values, run.alpha);
    auto f = ks_report(tag("census KS n^-2 T_k vs chain Z_{k+1}" + level, regime), two,
                       {run.replicates, run.replicates}, run.alpha);
    f.metadata = {{"regime", regime_json(regime)}, {"seed", run.seed}, {"level", k}};
    out.reports.push_back(f);
    if (k == 0) {
      const auto one =
          ks_one_sample(t.values, [&](double y) { return measure.tau_cdf(regime.x(), y); }, run.alpha);
      FitReport r;
      r.name = tag("census KS n^-2 T_0 vs tau_x", regime);
      r.sample_sizes = {run.replicates};
      r.statistic = one.statistic;
      r.threshold = RootCheckOptions{}.ks_threshold;
      r.alpha = run.alpha;
      r.p_value = one.p_value;
      r.metadata = {{"regime", regime_json(regime)}, {"seed", run.seed}, {"ks_critical_value", one.critical_value}};
      r.decide();
      out.reports.push_back(r);
    }
    FitReport ext;
    ext.name = tag("census extinction P(T_k = 0) vs P(Z_{k+1} < n^-2)" + level, regime);
    ext.sample_sizes = {run.replicates, run.replicates};
    ext.statistic = frequency(extinct, chains.size());
    ext.threshold = frequency(below, limits.size());
    ext.informational = true;
    ext.metadata = {{"note", "the limit chain is strictly positive; reported without verdict"}};
    out.reports.push_back(ext);
    FitReport col;
    col.name = tag("census collapse |n^-1 M_{k+1} / (c n^-2 T_k) - 1| > delta" + level, regime);
    col.sample_sizes = {considered};
    col.statistic = frequency(off, considered);
    col.threshold = 0.0;
    col.informational = true;
    col.metadata = {{"delta", opts.delta}, {"collapse_delta", opts.collapse_delta}};
    out.reports.push_back(col);
    out.columns.push_back(std::move(t));
    out.columns.push_back(std::move(z));
  }
  return out;
}

namespace {

// (size, degree) at each pattern vertex of a tree of alleles, expanding only
// the ancestors of pattern vertices. Sibling families are i.i.d. so leaving
// the others unexpanded does not change the joint law at the pattern.
std::vector<FamilyDraw> sample_pattern(const MarkedOffspringLaw& law, std::uint64_t ancestors,
                                       const std::vector<UVertex>& pattern, Rng& rng, const Caps& caps) {
  std::set<UVertex> expand;
  for (const auto& v : pattern) {
    for (UVertex u = v; !u.is_root();) {
      u = u.parent();
      expand.insert(u);
    }
  }
  std::map<UVertex, FamilyDraw> known;
  known[UVertex::root()] = sample_family(law, ancestors, rng, caps.max_individuals);
  // std::set orders shorter paths with the same prefix first; process by level.
  std::vector<UVertex> order(expand.begin(), expand.end());
  std::stable_sort(order.begin(), order.end(), [](const UVertex& a, const UVertex& b) { return a.level() < b.level(); });
  std::vector<FamilyDraw> block;
  for (const auto& u : order) {
    auto it = known.find(u);
    if (it == known.end() || it->second.mutants == 0) continue;
    block.clear();
    for (std::uint64_t j = 0; j < it->second.mutants; ++j) block.push_back(sample_family(law, 1, rng, caps.max_individuals));
    std::shuffle(block.begin(), block.end(), rng);
    std::stable_sort(block.begin(), block.end(), [](const FamilyDraw& a, const FamilyDraw& b) { return a.size > b.size; });
    for (std::size_t j = 0; j < block.size(); ++j) {
      UVertex child = u.child(static_cast<std::uint32_t>(j + 1));
      if (expand.count(child) || std::find(pattern.begin(), pattern.end(), child) != pattern.end()) {
        known[child] = block[j];
      }
    }
  }
  std::vector<FamilyDraw> out;
  for (const auto& v : pattern) {
    auto it = known.find(v);
    out.push_back(it == known.end() ? FamilyDraw{0, 0} : it->second);
  }
  return out;
}

}  // namespace

CheckOutcome check_tree_convergence(const ScalingRegime& regime, const OffspringLaw& base,
                                    const std::vector<UVertex>& pattern, const RunOptions& run,
                                    const TreeCheckOptions& opts) {
  if (pattern.empty()) throw DomainError("check_tree_convergence: empty pattern");
  std::size_t depth = 0;
  for (const auto& v : pattern) {
    if (v.level() > 2) throw DomainError("check_tree_convergence: pattern vertices must have level <= 2");
    for (auto j : v.path()) {
      if (j > 4) throw DomainError("check_tree_convergence: pattern indices must be <= 4");
    }
    depth = std::max(depth, v.level());
  }
  const auto law = regime.marked(base);
  const auto measure = limit_measure(regime, base);
  const double n = static_cast<double>(regime.n());
  const std::size_t limit_reps = opts.limit_replicates ? opts.limit_replicates : run.replicates;

  const auto prelimit = run_replicates(run.replicates, derive_seed(run.seed, kPrelimitSide), run.threads,
                                       [&](Rng& rng, std::size_t) {
                                         return sample_pattern(law, regime.ancestors(), pattern, rng, run.caps);
                                       });
  const auto limit = run_replicates(limit_reps, derive_seed(run.seed, kLimitSide), run.threads,
                                    [&](Rng& rng, std::size_t) {
                                      const auto tree =
                                          sample_tree(measure, TauRoot{regime.x()}, depth, opts.epsilon, opts.top_j, rng);
                                      std::vector<double> masses;
                                      for (const auto& v : pattern) masses.push_back(tree.tree.mass(v));
                                      return masses;
                                    });

  CheckOutcome out;
  for (std::size_t p = 0; p < pattern.size(); ++p) {
    const std::string where = " u=" + pattern[p].to_string();
    SampleColumn a{tag("n^-2 A" + where, regime), {}}, z{"Z" + where, {}};
    std::size_t occupied = 0, off = 0;
    for (const auto& draw : prelimit) {
      const double size = static_cast<double>(draw[p].size) / (n * n);
      const double degree = static_cast<double>(draw[p].mutants) / n;
      a.values.push_back(size);
      if (draw[p].size > 0) ++occupied;
      if (std::abs(degree - regime.c() * size) > opts.collapse_delta) ++off;
    }
    for (const auto& m : limit) z.values.push_back(m[p]);

    auto two = ks_two_sample(a.values, z.values, run.alpha);
    auto f = ks_report(tag("tree KS n^-2 A_u vs Z_u" + where, regime), two, {run.replicates, limit_reps}, run.alpha);
    f.inconclusive = occupied == 0;
    f.metadata = {{"regime", regime_json(regime)}, {"seed", run.seed},          {"epsilon", opts.epsilon},
                  {"top_j", opts.top_j},            {"occupied", occupied},     {"m_eps", measure.small_jump_mass(opts.epsilon)}};
    f.decide();
    out.reports.push_back(f);

    if (pattern[p].is_root()) {
      const auto one =
          ks_one_sample(a.values, [&](double y) { return measure.tau_cdf(regime.x(), y); }, run.alpha);
      FitReport r;
      r.name = tag("tree root KS n^-2 A_root vs inverse Gaussian", regime);
      r.sample_sizes = {run.replicates};
      r.statistic = one.statistic;
      r.threshold = opts.root_ks_threshold;
      r.alpha = run.alpha;
      r.p_value = one.p_value;
      r.metadata = {{"regime", regime_json(regime)}, {"seed", run.seed}, {"ks_critical_value", one.critical_value}};
      r.decide();
      out.reports.push_back(r);
    }

    FitReport col;
    col.name = tag("tree degree collapse P(|n^-1 d_u - c n^-2 A_u| > delta)" + where, regime);
    col.sample_sizes = {run.replicates};
    col.statistic = frequency(off, prelimit.size());
    col.threshold = opts.collapse_threshold;
    col.alpha = run.alpha;
    col.informational = !(opts.collapse_verdict && pattern[p].is_root());
    col.metadata = {{"delta", opts.collapse_delta}};
    col.decide();
    out.reports.push_back(col);
    out.columns.push_back(std::move(a));
    out.columns.push_back(std::move(z));
  }
  return out;
}

CheckOutcome check_construction_equivalence(const MarkedOffspringLaw& law, std::uint64_t ancestors,
                                            const RunOptions& run, std::uint64_t cap) {
  using Key = std::array<std::uint64_t, 4>;
  auto capped = [&](std::uint64_t v) { return std::min(v, cap); };
  auto census_key = [&](const std::vector<CensusStep>& s) {
    Key k{0, 0, 0, 0};
    if (!s.empty()) k[0] = capped(s[0].T), k[1] = capped(s[0].M_next);
    if (s.size() > 1) k[2] = capped(s[1].T), k[3] = capped(s[1].M_next);
    return k;
  };
  auto tree_key = [&](const AlleleTree& t) {
    return Key{capped(t.node(0).size), capped(t.node(0).degree), capped(t.mass(UVertex({1}))),
               capped(t.mass(UVertex({2})))};
  };
  auto tally = [&](std::uint64_t seed, auto&& draw) {
    const auto blocks = run_blocks(run.replicates, seed, run.threads, [&](Rng& rng, std::size_t lo, std::size_t hi) {
      std::map<Key, std::uint64_t> census, tree;
      for (std::size_t i = lo; i < hi; ++i) {
        const auto [c, t] = draw(rng);
        ++census[c];
        ++tree[t];
      }
      return std::make_pair(census, tree);
    });
    std::map<Key, std::uint64_t> census, tree;
    for (const auto& [c, t] : blocks) {
      for (const auto& [k, v] : c) census[k] += v;
      for (const auto& [k, v] : t) tree[k] += v;
    }
    return std::make_pair(census, tree);
  };

  const auto walk = tally(derive_seed(run.seed, kWalkSide), [&](Rng& rng) {
    const Key c = census_key(walk_chain(law, ancestors, 2, rng, run.caps));
    const Key t = tree_key(walk_allele_levels(law, ancestors, 1, rng, run.caps));
    return std::make_pair(c, t);
  });
  const auto direct = tally(derive_seed(run.seed, kDirectSide), [&](Rng& rng) {
    const Key c = census_key(simulate_census(law, ancestors, 2, rng, run.caps));
    const Key t = tree_key(simulate_allele_levels(law, ancestors, 1, rng, run.caps));
    return std::make_pair(c, t);
  });

  CheckOutcome out;
  const std::string a = " a=" + std::to_string(ancestors);
  auto report = [&](std::string name, const std::map<Key, std::uint64_t>& x, const std::map<Key, std::uint64_t>& y) {
    const auto chi = chi_square_homogeneity(x, y, run.alpha);
    FitReport f;
    f.name = std::move(name);
    f.sample_sizes = {run.replicates, run.replicates};
    f.statistic = chi.p_value;
    f.threshold = run.alpha;
    f.alpha = run.alpha;
    f.p_value = chi.p_value;
    f.passed = chi.passed;
    f.metadata = {{"chi_square", chi.statistic}, {"df", chi.df}, {"cells", chi.cells}, {"cap", cap}, {"seed", run.seed}};
    out.reports.push_back(f);
  };
  report("equivalence walk vs direct (T0, M1, T1, M2)" + a, walk.first, direct.first);
  report("equivalence walk vs direct (A_root, d_root, A_1, A_2)" + a, walk.second, direct.second);
  return out;
}

CheckOutcome check_csbp_equivalence(const LevyMeasure& measure, double x, double eps, std::size_t top_j,
                                    const RunOptions& run) {
  struct Stats {
    double root, largest, level_sum;
    std::uint64_t count;
  };
  auto stats_of = [](const CsbpTree& t) {
    const auto kids = t.tree.children(0);
    return Stats{t.tree.node(0).size, kids.empty() ? 0.0 : kids.front().size, t.atom_sum[0], t.atom_count[0]};
  };
  const auto def = run_replicates(run.replicates, derive_seed(run.seed, kDefinitionSide), run.threads,
                                  [&](Rng& rng, std::size_t) {
                                    return stats_of(sample_tree(measure, TauRoot{x}, 1, eps, top_j, rng));
                                  });
  const auto sub = run_replicates(run.replicates, derive_seed(run.seed, kSubordinatorSide), run.threads,
                                  [&](Rng& rng, std::size_t) {
                                    return stats_of(sample_tree_via_subordinator(measure, x, 1, eps, top_j, rng));
                                  });
  CheckOutcome out;
  auto column = [](const std::vector<Stats>& v, auto field) {
    std::vector<double> out;
    for (const auto& s : v) out.push_back(static_cast<double>(field(s)));
    return out;
  };
  auto ks = [&](std::string name, auto field) {
    auto a = column(def, field), b = column(sub, field);
    auto r = ks_report("csbp-equiv " + name, ks_two_sample(a, b, run.alpha), {run.replicates, run.replicates}, run.alpha);
    r.metadata = {{"x", x}, {"epsilon", eps}, {"top_j", top_j}, {"seed", run.seed}};
    out.reports.push_back(r);
    out.columns.push_back({"definition " + name, std::move(a)});
    out.columns.push_back({"subordinator " + name, std::move(b)});
  };
  ks("root mass", [](const Stats& s) { return s.root; });
  ks("largest level-1 atom", [](const Stats& s) { return s.largest; });
  ks("level-1 atom sum", [](const Stats& s) { return s.level_sum; });

  std::map<std::uint64_t, std::uint64_t> ca, cb;
  for (const auto& s : def) ++ca[s.count];
  for (const auto& s : sub) ++cb[s.count];
  const auto chi = chi_square_homogeneity(ca, cb, run.alpha);
  FitReport f;
  f.name = "csbp-equiv level-1 atom count";
  f.sample_sizes = {run.replicates, run.replicates};
  f.statistic = chi.p_value;
  f.threshold = run.alpha;
  f.alpha = run.alpha;
  f.p_value = chi.p_value;
  f.passed = chi.passed;
  f.metadata = {{"chi_square", chi.statistic}, {"df", chi.df}};
  out.reports.push_back(f);
  return out;
}

CheckOutcome check_tree_level_sum(const LevyMeasure& measure, double root_mass, double eps, std::size_t top_j,
                                  const RunOptions& run) {
  const auto sums = run_replicates(run.replicates, derive_seed(run.seed, kDefinitionSide), run.threads,
                                   [&](Rng& rng, std::size_t) {
                                     const auto t = sample_tree(measure, FixedRoot{root_mass}, 1, eps, top_j, rng);
                                     return t.atom_sum[0] + t.m_eps * root_mass;
                                   });
  const auto chain = run_replicates(run.replicates, derive_seed(run.seed, kLimitSide), run.threads,
                                    [&](Rng& rng, std::size_t) { return sample_csbp_chain(measure, root_mass, 1, rng)[1]; });
  CheckOutcome out;
  auto r = ks_report("tree level-1 sum + m_eps Z_root vs chain Z_1", ks_two_sample(sums, chain, run.alpha),
                     {run.replicates, run.replicates}, run.alpha);
  r.metadata = {{"root_mass", root_mass}, {"epsilon", eps}, {"seed", run.seed}};
  out.reports.push_back(r);
  out.columns.push_back({"tree level-1 sum", sums});
  out.columns.push_back({"chain Z1", chain});
  return out;
}

}  // namespace alleles
