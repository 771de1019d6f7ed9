#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "alleles/csbp.hpp"
#include "alleles/exact.hpp"
#include "alleles/genealogy.hpp"
#include "alleles/offspring.hpp"
#include "alleles/rational.hpp"
#include "json.hpp"

namespace alleles {

/// Every exported file carries this schema number.
inline constexpr int kSchemaVersion = 1;

/// Malformed or inconsistent configuration. `where` names the offending key
/// or the "line L, column C" position of a syntax error.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& message)
      : std::runtime_error(where.empty() ? message : where + ": " + message), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

/// Parses JSON text; syntax errors become ConfigError with a line/column.
nlohmann::json parse_json_text(std::string_view text);
nlohmann::json read_json_file(const std::string& path);

/// A probability given as a JSON number, a decimal string or "num/den".
/// Decimals are read exactly from their literal text.
Rational parse_probability(const nlohmann::json& value, const std::string& key);

/// `base_pmf` as a list of [index, probability] pairs. The law is exact
/// when the listed probabilities sum to exactly 1, otherwise it is a double
/// law (which must still sum to 1 within the pmf tolerance).
OffspringLaw parse_base_pmf(const nlohmann::json& pmf, const std::string& key = "base_pmf");

/// Inverse of parse_base_pmf; exact laws are written as fractions.
nlohmann::json base_pmf_json(const OffspringLaw& law);

struct LawSpec {
  OffspringLaw base;
  Rational mutation_p;  // exact reading of the configured value
};

/// Reads `base_pmf` and `mutation_p` from a law file object.
LawSpec parse_law(const nlohmann::json& doc);

/// Marked law; exact when both the base law and p are exact.
MarkedOffspringLaw marked_law(const LawSpec& spec);

/// "binary" or "geometric".
std::optional<OffspringLaw> named_law(std::string_view name);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

/// Digest of a canonical text rendering of the marked law's support.
std::string law_hash(const MarkedOffspringLaw& law);

// ---------------------------------------------------------------------------
// Exports. CSV files open with a "# schema=1 ..." comment line.
// ---------------------------------------------------------------------------

/// Vertex rows (path, size, degree) in depth-first order, prefixed by a
/// replicate column. Paths are "/" for the root and "/i/j" below it.
void write_tree_csv_header(std::ostream& out);
void write_tree_csv_rows(std::ostream& out, std::size_t replicate, const AlleleTree& tree);
nlohmann::json tree_json(const AlleleTree& tree);

/// Rows (replicate, k, T_k, M_k).
void write_census_csv_header(std::ostream& out);
void write_census_csv_rows(std::ostream& out, std::size_t replicate, const TypedCensus& census);

/// Limit trees use the same layout without the degree column; the header
/// comment records epsilon, top_j and m_eps.
void write_csbp_tree_csv_header(std::ostream& out, double epsilon, std::size_t top_j, double m_eps);
void write_csbp_tree_csv_rows(std::ostream& out, std::size_t replicate, const CsbpTree& tree);
nlohmann::json csbp_tree_json(const CsbpTree& tree);

/// Rows (replicate, k, Z_k).
void write_chain_csv_header(std::ostream& out);
void write_chain_csv_rows(std::ostream& out, std::size_t replicate, std::span<const double> chain);

/// Rows (n, l, probability), header comment with ancestors, law hash and
/// truncation mass. Rational tables print exact fractions.
template <class T>
void write_joint_table_csv(std::ostream& out, const JointPmfTable<T>& table, const std::string& law_digest);

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace alleles
