#include "alleles/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

namespace alleles {

nlohmann::json parse_json_text(std::string_view text) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line and column.
    const std::size_t at = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < at; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column), "invalid JSON");
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError(path, "file is empty");
  try {
    return parse_json_text(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ", " + e.where(), "invalid JSON");
  }
}

Rational parse_probability(const nlohmann::json& value, const std::string& key) {
  std::string text;
  if (value.is_string()) {
    text = value.get<std::string>();
  } else if (value.is_number()) {
    text = value.dump();
  } else {
    throw ConfigError(key, "expected a number or a \"num/den\" string");
  }
  Rational r;
  try {
    r = parse_rational(text);
  } catch (const std::exception&) {
    throw ConfigError(key, "cannot read probability '" + text + "'");
  }
  if (r < 0 || r > 1) throw ConfigError(key, "probability '" + text + "' outside [0, 1]");
  return r;
}

OffspringLaw parse_base_pmf(const nlohmann::json& pmf, const std::string& key) {
  if (!pmf.is_array()) throw ConfigError(key, "expected a list of [index, probability] pairs");
  if (pmf.empty()) throw ConfigError(key, "pmf is empty");
  std::vector<Rational> exact;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    const std::string where = key + "[" + std::to_string(i) + "]";
    const auto& pair = pmf[i];
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned()) {
      throw ConfigError(where, "expected [index, probability] with a nonnegative integer index");
    }
    const auto k = pair[0].get<std::uint64_t>();
    if (k > 10'000) throw ConfigError(where, "index too large");
    if (exact.size() <= k) exact.resize(k + 1, Rational(0));
    if (exact[k] != 0) throw ConfigError(where, "index listed twice");
    exact[k] = parse_probability(pair[1], where);
  }
  Rational total = 0;
  for (const auto& p : exact) total += p;
  try {
    if (total == 1) return OffspringLaw(exact);
    std::vector<double> approx;
    approx.reserve(exact.size());
    for (const auto& p : exact) approx.push_back(to_double(p));
    return OffspringLaw(std::move(approx));
  } catch (const DomainError& e) {
    throw ConfigError(key, e.what());
  }
}

nlohmann::json base_pmf_json(const OffspringLaw& law) {
  auto out = nlohmann::json::array();
  for (std::size_t k = 0; k <= law.max_children(); ++k) {
    if (law.exact_pmf()) {
      const auto& p = (*law.exact_pmf())[k];
      if (p != 0) out.push_back({k, to_string(p)});
    } else if (law[k] != 0.0) {
      out.push_back({k, law[k]});
    }
  }
  return out;
}

LawSpec parse_law(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("", "law file must be a JSON object");
  if (!doc.contains("base_pmf")) throw ConfigError("base_pmf", "missing key");
  LawSpec spec{parse_base_pmf(doc.at("base_pmf")), Rational(0)};
  if (doc.contains("mutation_p")) spec.mutation_p = parse_probability(doc.at("mutation_p"), "mutation_p");
  return spec;
}

MarkedOffspringLaw marked_law(const LawSpec& spec) { return binomial_mark(spec.base, spec.mutation_p); }

std::optional<OffspringLaw> named_law(std::string_view name) {
  if (name == "binary") return binary_critical_law();
  if (name == "geometric") return geometric_truncated_law();
  return std::nullopt;
}

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string law_hash(const MarkedOffspringLaw& law) {
  std::ostringstream s;
  for (const auto& cell : law.support()) {
    s << cell.clones << ',' << cell.mutants << ',';
    if (auto e = law.exact_prob(cell.clones, cell.mutants)) {
      s << to_string(*e);
    } else {
      s << format_double(cell.prob);
    }
    s << '\n';
  }
  return sha256_hex(s.str());
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), end);
}

void write_tree_csv_header(std::ostream& out) {
  out << "# schema=" << kSchemaVersion << " kind=allele_tree\n";
  out << "replicate,path,size,degree\n";
}

void write_tree_csv_rows(std::ostream& out, std::size_t replicate, const AlleleTree& tree) {
  for (std::size_t i : tree.depth_first_order()) {
    const auto& n = tree.node(i);
    out << replicate << ',' << tree.path(i).to_string() << ',' << n.size << ',' << n.degree << '\n';
  }
}

nlohmann::json tree_json(const AlleleTree& tree) {
  auto rows = nlohmann::json::array();
  for (std::size_t i : tree.depth_first_order()) {
    const auto& n = tree.node(i);
    rows.push_back({{"path", tree.path(i).to_string()}, {"size", n.size}, {"degree", n.degree}});
  }
  return rows;
}

void write_census_csv_header(std::ostream& out) {
  out << "# schema=" << kSchemaVersion << " kind=census\n";
  out << "replicate,k,T_k,M_k\n";
}

void write_census_csv_rows(std::ostream& out, std::size_t replicate, const TypedCensus& census) {
  for (std::size_t k = 0; k < census.T.size(); ++k) {
    out << replicate << ',' << k << ',' << census.T[k] << ',' << census.M[k] << '\n';
  }
}

void write_csbp_tree_csv_header(std::ostream& out, double epsilon, std::size_t top_j, double m_eps) {
  out << "# schema=" << kSchemaVersion << " kind=csbp_tree epsilon=" << format_double(epsilon) << " top_j=" << top_j
      << " m_eps=" << format_double(m_eps) << '\n';
  out << "replicate,path,size\n";
}

void write_csbp_tree_csv_rows(std::ostream& out, std::size_t replicate, const CsbpTree& tree) {
  for (std::size_t i : tree.tree.depth_first_order()) {
    out << replicate << ',' << tree.tree.path(i).to_string() << ',' << format_double(tree.tree.node(i).size) << '\n';
  }
}

nlohmann::json csbp_tree_json(const CsbpTree& tree) {
  auto rows = nlohmann::json::array();
  for (std::size_t i : tree.tree.depth_first_order()) {
    rows.push_back({{"path", tree.tree.path(i).to_string()}, {"size", tree.tree.node(i).size}});
  }
  return {{"metadata", {{"epsilon", tree.epsilon}, {"top_j", tree.top_j}, {"m_eps", tree.m_eps}}},
          {"vertices", std::move(rows)}};
}

void write_chain_csv_header(std::ostream& out) {
  out << "# schema=" << kSchemaVersion << " kind=csbp_chain\n";
  out << "replicate,k,Z_k\n";
}

void write_chain_csv_rows(std::ostream& out, std::size_t replicate, std::span<const double> chain) {
  for (std::size_t k = 0; k < chain.size(); ++k) out << replicate << ',' << k << ',' << format_double(chain[k]) << '\n';
}

namespace {

std::string cell_text(double v) { return format_double(v); }
std::string cell_text(const Rational& v) { return to_string(v); }

}  // namespace

template <class T>
void write_joint_table_csv(std::ostream& out, const JointPmfTable<T>& table, const std::string& law_digest) {
  out << "# schema=" << kSchemaVersion << " kind=joint_law_T0_M1 ancestors=" << table.ancestors
      << " law_sha256=" << law_digest << " truncation_mass=" << cell_text(table.truncation_bound) << '\n';
  out << "n,l,probability\n";
  for (const auto& [key, p] : table.entries) out << key.first << ',' << key.second << ',' << cell_text(p) << '\n';
}

template void write_joint_table_csv<double>(std::ostream&, const JointPmfTable<double>&, const std::string&);
template void write_joint_table_csv<Rational>(std::ostream&, const JointPmfTable<Rational>&, const std::string&);

}  // namespace alleles
