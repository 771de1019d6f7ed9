#include "alleles/exact.hpp"

#include <algorithm>
#include <cmath>

namespace alleles {

template <>
std::vector<std::tuple<std::size_t, std::size_t, double>> law_cells<double>(const MarkedOffspringLaw& law) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> out;
  for (const auto& c : law.support()) out.emplace_back(c.clones, c.mutants, c.prob);
  return out;
}

template <>
std::vector<std::tuple<std::size_t, std::size_t, Rational>> law_cells<Rational>(const MarkedOffspringLaw& law) {
  if (!law.exact_probs()) throw DomainError("exact arithmetic requested for a law without exact probabilities");
  std::vector<std::tuple<std::size_t, std::size_t, Rational>> out;
  for (std::size_t k = 0; k <= law.max_clones(); ++k) {
    for (std::size_t l = 0; l <= law.max_mutants(); ++l) {
      Rational p = *law.exact_prob(k, l);
      if (p != 0) out.emplace_back(k, l, std::move(p));
    }
  }
  return out;
}

namespace {

template <class T>
JointPmf<T> first_power(const std::vector<std::tuple<std::size_t, std::size_t, T>>& cells, std::size_t cap) {
  JointPmf<T> out;
  for (const auto& [k, l, p] : cells) {
    if (k <= cap) {
      out.max_k = std::max(out.max_k, k);
      out.max_l = std::max(out.max_l, l);
    }
  }
  out.cells.assign((out.max_k + 1) * (out.max_l + 1), T(0));
  for (const auto& [k, l, p] : cells) {
    if (k <= cap) {
      out.cells[k * (out.max_l + 1) + l] += p;
    } else {
      out.discarded += p;
    }
  }
  return out;
}

// acc * law, dropping clone indices above cap. Direct double loop over both supports.
template <class T>
JointPmf<T> convolve(const JointPmf<T>& acc, const std::vector<std::tuple<std::size_t, std::size_t, T>>& cells,
                     std::size_t cap) {
  std::size_t law_k = 0, law_l = 0;
  for (const auto& [k, l, p] : cells) {
    law_k = std::max(law_k, k);
    law_l = std::max(law_l, l);
  }
  JointPmf<T> out;
  out.max_k = std::min(cap, acc.max_k + law_k);
  out.max_l = acc.max_l + law_l;
  out.cells.assign((out.max_k + 1) * (out.max_l + 1), T(0));
  for (std::size_t k = 0; k <= acc.max_k; ++k) {
    for (std::size_t l = 0; l <= acc.max_l; ++l) {
      const T& a = acc.at(k, l);
      if (a == 0) continue;
      for (const auto& [dk, dl, p] : cells) {
        if (k + dk > cap) {
          out.discarded += a * p;
        } else {
          out.cells[(k + dk) * (out.max_l + 1) + l + dl] += a * p;
        }
      }
    }
  }
  // Whatever was already discarded stays discarded (clone counts only grow).
  out.discarded += acc.discarded;
  return out;
}

}  // namespace

template <class T>
JointPmf<T> convolution_power(const MarkedOffspringLaw& law, std::uint64_t n, std::size_t support_cap) {
  if (n == 0) throw DomainError("convolution_power: n must be at least 1");
  const auto cells = law_cells<T>(law);
  JointPmf<T> acc = first_power<T>(cells, support_cap);
  for (std::uint64_t i = 1; i < n; ++i) acc = convolve<T>(acc, cells, support_cap);
  return acc;
}

template <class T>
JointPmfTable<T> joint_law_T0_M1(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::uint64_t n_max) {
  if (ancestors == 0) throw DomainError("joint_law_T0_M1: need at least one ancestor");
  JointPmfTable<T> table;
  table.ancestors = ancestors;
  if (n_max < ancestors) return table;
  const auto cells = law_cells<T>(law);
  const std::size_t cap = n_max - ancestors;
  JointPmf<T> power = first_power<T>(cells, cap);
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    if (n > 1) power = convolve<T>(power, cells, cap);
    if (n < ancestors) continue;
    const std::size_t k = n - ancestors;
    if (k > power.max_k) continue;
    for (std::size_t l = 0; l <= power.max_l; ++l) {
      const T& p = power.at(k, l);
      if (p == 0) continue;
      table.entries[{n, l}] = T(ancestors) * p / T(n);
    }
  }
  table.truncation_bound = T(1) - table.total();
  return table;
}

namespace {

template <class T>
struct Enumerator {
  std::uint64_t ancestors;
  std::uint64_t cap;
  // Mutant-count polynomial sum_l pi_{k,l} y^l for each clone count k.
  std::vector<std::vector<T>> mutant_poly;
  std::vector<std::vector<T>> by_size;  // by_size[n][l]
  std::uint64_t visited = 0;

  static std::vector<T> multiply(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> out(a.size() + b.size() - 1, T(0));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0) continue;
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
  }

  // `processed` individuals have their clone count fixed; `born` have been created so far.
  void visit(std::uint64_t processed, std::uint64_t born, const std::vector<T>& weight) {
    if (++visited > kEnumerationNodeLimit) throw NumericError("enumerate_genealogies: search limit exceeded");
    if (processed == born) {
      auto& row = by_size[born];
      if (row.size() < weight.size()) row.resize(weight.size(), T(0));
      for (std::size_t l = 0; l < weight.size(); ++l) row[l] += weight[l];
      return;
    }
    for (std::size_t k = 0; k < mutant_poly.size(); ++k) {
      if (mutant_poly[k].empty() || born + k > cap) continue;
      visit(processed + 1, born + k, multiply(weight, mutant_poly[k]));
    }
  }
};

}  // namespace

template <class T>
JointPmfTable<T> enumerate_genealogies(const MarkedOffspringLaw& law, std::uint64_t ancestors, std::uint64_t size_cap) {
  if (ancestors == 0) throw DomainError("enumerate_genealogies: need at least one ancestor");
  if (size_cap > kEnumerationSizeLimit) {
    throw DomainError("enumerate_genealogies: size cap " + std::to_string(size_cap) + " above limit " +
                      std::to_string(kEnumerationSizeLimit));
  }
  JointPmfTable<T> table;
  table.ancestors = ancestors;
  if (size_cap < ancestors) return table;

  Enumerator<T> e{ancestors, size_cap, {}, {}, 0};
  e.mutant_poly.resize(law.max_clones() + 1);
  for (const auto& [k, l, p] : law_cells<T>(law)) {
    auto& poly = e.mutant_poly[k];
    if (poly.size() <= l) poly.resize(l + 1, T(0));
    poly[l] += p;
  }
  e.by_size.resize(size_cap + 1);
  e.visit(0, ancestors, std::vector<T>{T(1)});

  for (std::uint64_t n = ancestors; n <= size_cap; ++n) {
    for (std::size_t l = 0; l < e.by_size[n].size(); ++l) {
      if (e.by_size[n][l] != 0) table.entries[{n, l}] = e.by_size[n][l];
    }
  }
  table.truncation_bound = T(1) - table.total();
  return table;
}

double joint_pgf(const MarkedOffspringLaw& law, double s, double y) {
  double g = 0.0;
  for (const auto& c : law.support()) g += c.prob * std::pow(s, c.clones) * std::pow(y, c.mutants);
  return g;
}

FixedPointResult phi_fixed_point(const MarkedOffspringLaw& law, double x, double y, double tol,
                                 std::size_t max_iterations) {
  if (!(x > 0.0 && x <= 1.0) || !(y > 0.0 && y <= 1.0)) throw DomainError("phi_fixed_point: x and y must lie in (0, 1]");
  if (!(tol > 0.0)) throw DomainError("phi_fixed_point: tol must be positive");
  const auto summary = classify(law);
  if (summary.clone_regime == Regime::supercritical) throw DomainError("phi_fixed_point: clone law is supercritical");

  double z = 0.0, prev_step = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    const double next = x * joint_pgf(law, z, y);
    if (next < z - 1e-15 || next > 1.0 + 1e-12) throw std::logic_error("phi_fixed_point: iterates left [previous, 1]");
    const double step = std::max(0.0, next - z);
    z = std::min(next, 1.0);
    if (step == 0.0) return {z, it};
    // The iteration contracts near the root at rate ~ step / prev_step; bound the remaining distance.
    if (prev_step > 0.0) {
      const double rate = step / prev_step;
      if (rate < 1.0 && step * rate / (1.0 - rate) <= tol && step <= tol) return {z, it};
    }
    prev_step = step;
  }
  throw NumericError("phi_fixed_point: no convergence within " + std::to_string(max_iterations) + " iterations");
}

template <class T>
T max_abs_difference(const JointPmfTable<T>& a, const JointPmfTable<T>& b, std::uint64_t n_cap) {
  T worst = T(0);
  auto consider = [&](const auto& key) {
    if (key.first > n_cap) return;
    T d = a.get(key.first, key.second) - b.get(key.first, key.second);
    if (d < 0) d = -d;
    if (d > worst) worst = d;
  };
  for (const auto& [key, p] : a.entries) consider(key);
  for (const auto& [key, p] : b.entries) consider(key);
  return worst;
}

template JointPmf<double> convolution_power<double>(const MarkedOffspringLaw&, std::uint64_t, std::size_t);
template JointPmf<Rational> convolution_power<Rational>(const MarkedOffspringLaw&, std::uint64_t, std::size_t);
template JointPmfTable<double> joint_law_T0_M1<double>(const MarkedOffspringLaw&, std::uint64_t, std::uint64_t);
template JointPmfTable<Rational> joint_law_T0_M1<Rational>(const MarkedOffspringLaw&, std::uint64_t, std::uint64_t);
template JointPmfTable<double> enumerate_genealogies<double>(const MarkedOffspringLaw&, std::uint64_t, std::uint64_t);
template JointPmfTable<Rational> enumerate_genealogies<Rational>(const MarkedOffspringLaw&, std::uint64_t,
                                                                 std::uint64_t);
template double max_abs_difference<double>(const JointPmfTable<double>&, const JointPmfTable<double>&, std::uint64_t);
template Rational max_abs_difference<Rational>(const JointPmfTable<Rational>&, const JointPmfTable<Rational>&,
                                               std::uint64_t);

}  // namespace alleles
