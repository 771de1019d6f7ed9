#include "alleles/cli.hpp"

#include <boost/version.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "alleles/csbp.hpp"
#include "alleles/exact.hpp"
#include "alleles/genealogy.hpp"
#include "alleles/io.hpp"
#include "alleles/limitcheck.hpp"
#include "alleles/walker.hpp"

namespace alleles::cli {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"root", "tail", "census", "tree", "equivalence", "csbp-equiv"};
  return names;
}

namespace {

// ---------------------------------------------------------------------------
// Configuration: defaults < config file (or manifest) < --law < flags.
// ---------------------------------------------------------------------------

enum class Kind { uint, real, text, flag, uint_list, text_list, named_law, law_file };

struct Override {
  std::string key;
  Kind kind;
  std::string text;
  bool flag = false;
  CLI::Option* option = nullptr;
};

struct Command {
  Command(std::string n, json d) : name(std::move(n)), defaults(std::move(d)) {}

  std::string name;
  json defaults;
  std::string config_path;
  std::string out_dir;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::deque<Override> overrides;  // stable addresses for CLI11 bindings
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::uint64_t text_to_uint(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 0) || v != std::floor(v) || v > 1.8e19) {
    throw ConfigError(key, "expected a nonnegative integer, got '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

double text_to_real(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(v)) throw ConfigError(key, "expected a number, got '" + text + "'");
  return v;
}

void apply_override(json& cfg, const Override& o) {
  switch (o.kind) {
    case Kind::uint:
      cfg[o.key] = text_to_uint(o.text, o.key);
      break;
    case Kind::real:
      cfg[o.key] = text_to_real(o.text, o.key);
      break;
    case Kind::text:
      cfg[o.key] = o.text;
      break;
    case Kind::flag:
      cfg[o.key] = o.flag;
      break;
    case Kind::uint_list: {
      auto list = json::array();
      for (const auto& part : split(o.text, ',')) list.push_back(text_to_uint(part, o.key));
      cfg[o.key] = list;
      break;
    }
    case Kind::text_list:
      cfg[o.key] = split(o.text, ',');
      break;
    case Kind::named_law: {
      auto law = named_law(o.text);
      if (!law) throw ConfigError("--base", "unknown law '" + o.text + "' (expected binary or geometric)");
      cfg["base_pmf"] = base_pmf_json(*law);
      break;
    }
    case Kind::law_file: {
      const json doc = read_json_file(o.text);
      parse_law(doc);  // validation only
      cfg["base_pmf"] = doc.at("base_pmf");
      if (doc.contains("mutation_p") && cfg.contains("mutation_p")) cfg["mutation_p"] = doc.at("mutation_p");
      break;
    }
  }
}

json merged_config(const Command& cmd) {
  json cfg = cmd.defaults;
  if (!cmd.config_path.empty()) {
    json doc = read_json_file(cmd.config_path);
    if (doc.is_object() && doc.contains("command") && doc.contains("config")) {
      if (doc.at("command") != cmd.name) {
        throw ConfigError(cmd.config_path, "manifest belongs to command " + doc.at("command").dump());
      }
      doc = doc.at("config");
    }
    if (!doc.is_object()) throw ConfigError(cmd.config_path, "expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (!cfg.contains(key)) throw ConfigError(key, "unknown key for '" + cmd.name + "'");
      cfg[key] = value;
    }
  }
  for (const auto& o : cmd.overrides) {
    if (o.option && o.option->count() > 0) apply_override(cfg, o);
  }
  return cfg;
}

std::uint64_t get_uint(const json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError(key, "expected a nonnegative integer");
}

std::uint64_t get_positive(const json& cfg, const std::string& key) {
  const auto v = get_uint(cfg, key);
  if (v == 0) throw ConfigError(key, "must be at least 1");
  return v;
}

double get_real(const json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  return v.get<double>();
}

double get_positive_real(const json& cfg, const std::string& key) {
  const double v = get_real(cfg, key);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be positive");
  return v;
}

std::string get_text(const json& cfg, const std::string& key, std::initializer_list<const char*> allowed = {}) {
  const auto& v = cfg.at(key);
  if (!v.is_string()) throw ConfigError(key, "expected a string");
  auto s = v.get<std::string>();
  if (allowed.size() == 0) return s;
  std::string list;
  for (const char* a : allowed) {
    if (s == a) return s;
    list += list.empty() ? a : std::string(", ") + a;
  }
  throw ConfigError(key, "'" + s + "' is not one of: " + list);
}

bool get_bool(const json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
  return v.get<bool>();
}

std::vector<std::uint64_t> get_uint_list(const json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(key, "expected a nonempty list of integers");
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    json one = {{key, v[i]}};
    out.push_back(get_positive(one, key));
  }
  return out;
}

Caps get_caps(const json& cfg) {
  return {get_positive(cfg, "max_individuals"), static_cast<std::size_t>(get_positive(cfg, "max_level"))};
}

OffspringLaw get_base(const json& cfg) { return parse_base_pmf(cfg.at("base_pmf")); }

Rational get_p(const json& cfg) { return parse_probability(cfg.at("mutation_p"), "mutation_p"); }

// ---------------------------------------------------------------------------
// Output files and the run manifest.
// ---------------------------------------------------------------------------

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "alleles-out";
}

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw ConfigError("--out", "cannot create directory " + dir_.string());
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    f << content;
    f.close();
    if (!f) throw ConfigError("--out", "cannot write " + (dir_ / name).string());
    files_.push_back({name, sha256_hex(content), content.size()});
  }

  json digests() const {
    auto out = json::array();
    for (const auto& f : files_) out.push_back({{"file", f.name}, {"sha256", f.digest}, {"bytes", f.bytes}});
    return out;
  }

  const fs::path& dir() const { return dir_; }

 private:
  struct File {
    std::string name;
    std::string digest;
    std::size_t bytes;
  };
  fs::path dir_;
  std::vector<File> files_;
};

struct ManifestInfo {
  std::string status = "ok";
  json extra = json::object();
};

class Session {
 public:
  Session(const Command& cmd, std::vector<std::string> argv)
      : cmd_(cmd), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

  void finish(OutputSet& outputs, const json& cfg, const ManifestInfo& info) const {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {{"schema", kSchemaVersion},
              {"command", cmd_.name},
              {"argv", argv_},
              {"version", kVersion},
              {"config", cfg},
              {"master_seed", cfg.value("master_seed", json())},
              {"threads", cmd_.threads},
              {"wall_time_seconds", wall},
              {"status", info.status},
              {"outputs", outputs.digests()}};
    for (const auto& [k, v] : info.extra.items()) m[k] = v;
    std::ofstream f(outputs.dir() / "manifest.json", std::ios::binary | std::ios::trunc);
    f << m.dump(2) << '\n';
    if (!f) throw ConfigError("--out", "cannot write manifest");
  }

 private:
  const Command& cmd_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
};

json environment_block() {
  return {{"version", kVersion},
          {"compiler", __VERSION__},
          {"cxx_standard", static_cast<long>(__cplusplus)},
          {"boost", BOOST_LIB_VERSION},
          {"schema", kSchemaVersion}};
}

// Per-replicate outcome of a sampler that may hit a resource cap.
template <class T>
struct Attempt {
  std::optional<T> value;
  std::string failure;
  PartialStatistics partial;
};

template <class T>
std::string truncation_csv(const std::vector<Attempt<T>>& attempts) {
  std::ostringstream s;
  s << "# schema=" << kSchemaVersion << " kind=truncations\n";
  s << "replicate,reason,individuals,levels_completed\n";
  for (std::size_t i = 0; i < attempts.size(); ++i) {
    if (attempts[i].value) continue;
    s << i << ",\"" << attempts[i].failure << "\"," << attempts[i].partial.individuals << ','
      << attempts[i].partial.levels_completed << '\n';
  }
  return s.str();
}

template <class T>
std::size_t failures(const std::vector<Attempt<T>>& attempts) {
  std::size_t n = 0;
  for (const auto& a : attempts) n += a.value ? 0 : 1;
  return n;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateResult {
  AlleleSample sample;
  std::vector<TraceRow> trace;
};

int cmd_simulate(const Command& cmd, const Session& session, std::ostream& out, std::ostream& err) {
  const json cfg = merged_config(cmd);
  const OffspringLaw base = get_base(cfg);
  const MarkedOffspringLaw law = binomial_mark(base, get_p(cfg));
  const std::uint64_t ancestors = get_positive(cfg, "ancestors");
  const std::size_t replicates = get_positive(cfg, "replicates");
  const std::uint64_t seed = get_uint(cfg, "master_seed");
  const bool walk = get_text(cfg, "construction", {"direct", "walk"}) == "walk";
  const bool as_json = get_text(cfg, "format", {"csv", "json"}) == "json";
  const bool trace = get_bool(cfg, "trace");
  const Caps caps = get_caps(cfg);
  if (trace && !walk) throw ConfigError("trace", "walk traces need construction = walk");
  if (trace && replicates > 100) throw ConfigError("trace", "traces are limited to 100 replicates");

  OutputSet outputs(output_dir(cmd.out_dir));
  const auto attempts =
      run_replicates(replicates, seed, cmd.threads, [&](Rng& rng, std::size_t) {
        Attempt<SimulateResult> a;
        try {
          SimulateResult r;
          if (walk) {
            LawSteps steps(law, rng);
            r.sample = walk_allele_tree(steps, ancestors, rng, caps, trace ? &r.trace : nullptr);
          } else {
            r.sample = simulate_allele_tree(law, ancestors, rng, caps);
          }
          a.value = std::move(r);
        } catch (const TruncationError& e) {
          a.failure = e.what();
          a.partial = e.partial();
        }
        return a;
      });

  std::ostringstream census;
  write_census_csv_header(census);
  if (as_json) {
    json trees = json::array();
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      if (!attempts[i].value) continue;
      trees.push_back({{"replicate", i}, {"vertices", tree_json(attempts[i].value->sample.tree)}});
      write_census_csv_rows(census, i, attempts[i].value->sample.census);
    }
    json doc = {{"schema", kSchemaVersion}, {"kind", "allele_tree"}, {"trees", std::move(trees)}};
    outputs.write("trees.json", doc.dump() + "\n");
  } else {
    std::ostringstream trees;
    write_tree_csv_header(trees);
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      if (!attempts[i].value) continue;
      write_tree_csv_rows(trees, i, attempts[i].value->sample.tree);
      write_census_csv_rows(census, i, attempts[i].value->sample.census);
    }
    outputs.write("trees.csv", trees.str());
  }
  outputs.write("census.csv", census.str());
  if (trace) {
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      if (!attempts[i].value) continue;
      std::ostringstream t;
      write_trace_csv(t, ancestors, attempts[i].value->trace);
      outputs.write("trace_" + std::to_string(i) + ".csv", t.str());
    }
  }

  ManifestInfo info;
  info.extra["law_sha256"] = law_hash(law);
  const std::size_t failed = failures(attempts);
  if (failed > 0) {
    outputs.write("truncated.csv", truncation_csv(attempts));
    info.status = "truncated";
    info.extra["truncated_replicates"] = failed;
  }
  session.finish(outputs, cfg, info);
  out << "simulate: " << replicates - failed << " of " << replicates << " replicates written to "
      << outputs.dir().string() << '\n';
  if (failed > 0) {
    err << "simulate: " << failed << " replicates hit a resource cap; see truncated.csv\n";
    return kResourceCap;
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// exact
// ---------------------------------------------------------------------------

template <class T>
std::string table_csv(const JointPmfTable<T>& table, const std::string& digest) {
  std::ostringstream s;
  write_joint_table_csv(s, table, digest);
  return s.str();
}

int cmd_exact(const Command& cmd, const Session& session, std::ostream& out, std::ostream& err) {
  const json cfg = merged_config(cmd);
  const OffspringLaw base = get_base(cfg);
  const MarkedOffspringLaw law = binomial_mark(base, get_p(cfg));
  const std::uint64_t ancestors = get_positive(cfg, "ancestors");
  const std::uint64_t n_max = get_uint(cfg, "n_max");
  const bool oracle = get_text(cfg, "oracle", {"none", "enumerate"}) == "enumerate";
  const bool rational = get_bool(cfg, "rational");
  if (rational && !law.exact_probs()) {
    throw ConfigError("rational", "the law has no exact representation (base_pmf must sum to exactly 1)");
  }
  if (oracle && n_max > kEnumerationSizeLimit) {
    throw ConfigError("n_max", "enumeration oracle is limited to n_max <= " + std::to_string(kEnumerationSizeLimit));
  }

  ManifestInfo info;
  const std::string digest = law_hash(law);
  info.extra["law_sha256"] = digest;
  if (n_max < ancestors) {
    err << "warning: n_max < ancestors, so the table is empty (T0 >= ancestors)\n";
    info.extra["warnings"] = json::array({"n_max < ancestors: empty table"});
  }

  OutputSet outputs(output_dir(cmd.out_dir));
  bool agree = true;
  if (rational) {
    const auto table = joint_law_T0_M1<Rational>(law, ancestors, n_max);
    outputs.write("table.csv", table_csv(table, digest));
    if (oracle) {
      const auto other = enumerate_genealogies<Rational>(law, ancestors, n_max);
      outputs.write("enumerate.csv", table_csv(other, digest));
      const Rational diff = max_abs_difference(table, other, n_max);
      agree = diff == 0;
      info.extra["max_abs_difference"] = to_string(diff);
      out << "max_abs_difference=" << to_string(diff) << '\n';
    }
  } else {
    const auto table = joint_law_T0_M1<double>(law, ancestors, n_max);
    outputs.write("table.csv", table_csv(table, digest));
    if (oracle) {
      const auto other = enumerate_genealogies<double>(law, ancestors, n_max);
      outputs.write("enumerate.csv", table_csv(other, digest));
      const double diff = max_abs_difference(table, other, n_max);
      agree = diff <= 1e-12;
      info.extra["max_abs_difference"] = diff;
      out << "max_abs_difference=" << format_double(diff) << '\n';
    }
  }
  if (!agree) info.status = "oracle_mismatch";
  session.finish(outputs, cfg, info);
  out << "exact: tables written to " << outputs.dir().string() << '\n';
  return agree ? kSuccess : kVerificationFailed;
}

// ---------------------------------------------------------------------------
// csbp
// ---------------------------------------------------------------------------

RootLaw parse_root(const std::string& text) {
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = text.substr(0, colon);
    const double v = text_to_real(text.substr(colon + 1), "root");
    if (!(v > 0.0)) throw ConfigError("root", "root parameter must be positive");
    if (kind == "fixed") return FixedRoot{v};
    if (kind == "tau") return TauRoot{v};
  }
  throw ConfigError("root", "expected fixed:<mass> or tau:<x>, got '" + text + "'");
}

struct CsbpResult {
  CsbpTree tree;
  std::vector<double> chain;
};

int cmd_csbp(const Command& cmd, const Session& session, std::ostream& out, std::ostream& err) {
  const json cfg = merged_config(cmd);
  const LevyMeasure measure(get_positive_real(cfg, "c"), get_positive_real(cfg, "sigma2"));
  const RootLaw root = parse_root(get_text(cfg, "root"));
  const std::size_t depth = get_uint(cfg, "depth");
  const bool subordinator = get_text(cfg, "method", {"definition", "subordinator"}) == "subordinator";
  const double eps = get_positive_real(cfg, "epsilon");
  const std::size_t top_j = get_uint(cfg, "top_j");
  const std::size_t replicates = get_positive(cfg, "replicates");
  const std::uint64_t seed = get_uint(cfg, "master_seed");
  const std::size_t node_cap = get_positive(cfg, "node_cap");
  const bool as_json = get_text(cfg, "format", {"csv", "json"}) == "json";
  if (subordinator && !std::holds_alternative<TauRoot>(root)) {
    throw ConfigError("method", "the subordinator construction needs a tau:<x> root");
  }
  // The chain starts from the root mass; with a tau_x root it starts at x / c
  // so that its first step has the law of tau_x.
  const double z0 = std::holds_alternative<FixedRoot>(root) ? std::get<FixedRoot>(root).mass
                                                             : std::get<TauRoot>(root).x / measure.c();

  OutputSet outputs(output_dir(cmd.out_dir));
  const auto attempts = run_replicates(replicates, seed, cmd.threads, [&](Rng& rng, std::size_t) {
    Attempt<CsbpResult> a;
    try {
      CsbpResult r;
      r.tree = subordinator
                   ? sample_tree_via_subordinator(measure, std::get<TauRoot>(root).x, depth, eps, top_j, rng, node_cap)
                   : sample_tree(measure, root, depth, eps, top_j, rng, node_cap);
      r.chain = sample_csbp_chain(measure, z0, depth, rng);
      a.value = std::move(r);
    } catch (const std::length_error& e) {
      a.failure = e.what();
    }
    return a;
  });

  std::ostringstream chain;
  write_chain_csv_header(chain);
  if (as_json) {
    json trees = json::array();
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      if (!attempts[i].value) continue;
      json t = csbp_tree_json(attempts[i].value->tree);
      t["replicate"] = i;
      trees.push_back(std::move(t));
      write_chain_csv_rows(chain, i, attempts[i].value->chain);
    }
    json doc = {{"schema", kSchemaVersion}, {"kind", "csbp_tree"}, {"trees", std::move(trees)}};
    outputs.write("tree.json", doc.dump() + "\n");
  } else {
    std::ostringstream trees;
    write_csbp_tree_csv_header(trees, eps, top_j, measure.small_jump_mass(eps));
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      if (!attempts[i].value) continue;
      write_csbp_tree_csv_rows(trees, i, attempts[i].value->tree);
      write_chain_csv_rows(chain, i, attempts[i].value->chain);
    }
    outputs.write("tree.csv", trees.str());
  }
  outputs.write("chain.csv", chain.str());

  ManifestInfo info;
  info.extra["m_eps"] = measure.small_jump_mass(eps);
  const std::size_t failed = failures(attempts);
  if (failed > 0) {
    outputs.write("truncated.csv", truncation_csv(attempts));
    info.status = "truncated";
    info.extra["truncated_replicates"] = failed;
  }
  session.finish(outputs, cfg, info);
  out << "csbp: " << replicates - failed << " of " << replicates << " replicates written to "
      << outputs.dir().string() << '\n';
  if (failed > 0) {
    err << "csbp: " << failed << " replicates hit the node or horizon cap; see truncated.csv\n";
    return kResourceCap;
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifySettings {
  OffspringLaw base;
  Rational mutation_p;
  double x, c, alpha, epsilon, level_sum_epsilon;
  std::vector<std::uint64_t> n_list;
  std::uint64_t n, tail_n;
  std::size_t replicates, tail_replicates, limit_replicates, equivalence_replicates, csbp_replicates;
  std::size_t census_levels, top_j;
  std::uint64_t seed;
  std::vector<UVertex> pattern;
  std::vector<TailPoint> tail_grid;
  std::vector<std::uint64_t> equivalence_ancestors;
  Caps caps;
  unsigned threads;
};

VerifySettings verify_settings(const json& cfg, unsigned threads) {
  VerifySettings s{get_base(cfg), get_p(cfg), get_positive_real(cfg, "x"), get_positive_real(cfg, "c"),
                   get_positive_real(cfg, "alpha"), get_positive_real(cfg, "epsilon"),
                   get_positive_real(cfg, "level_sum_epsilon"), get_uint_list(cfg, "n_list"),
                   get_positive(cfg, "n"), get_positive(cfg, "tail_n"), get_positive(cfg, "replicates"),
                   get_positive(cfg, "tail_replicates"), get_positive(cfg, "limit_replicates"),
                   get_positive(cfg, "equivalence_replicates"), get_positive(cfg, "csbp_replicates"),
                   get_positive(cfg, "census_levels"), get_uint(cfg, "top_j"), get_uint(cfg, "master_seed"),
                   {}, {}, get_uint_list(cfg, "equivalence_ancestors"), get_caps(cfg), threads};
  if (s.alpha >= 1.0) throw ConfigError("alpha", "must lie in (0, 1)");
  const auto& pattern = cfg.at("pattern");
  if (!pattern.is_array() || pattern.empty()) throw ConfigError("pattern", "expected a nonempty list of paths");
  for (const auto& p : pattern) {
    if (!p.is_string()) throw ConfigError("pattern", "expected paths such as \"/\" or \"/1/2\"");
    try {
      s.pattern.push_back(UVertex::parse(p.get<std::string>()));
    } catch (const std::exception& e) {
      throw ConfigError("pattern", e.what());
    }
  }
  const auto& grid = cfg.at("tail_grid");
  if (!grid.is_array() || grid.empty()) throw ConfigError("tail_grid", "expected a list of [t, m] pairs");
  for (const auto& g : grid) {
    if (!g.is_array() || g.size() != 2 || !g[0].is_number() || !g[1].is_number()) {
      throw ConfigError("tail_grid", "expected [t, m] pairs of numbers");
    }
    s.tail_grid.push_back({g[0].get<double>(), g[1].get<double>()});
  }
  return s;
}

RunOptions run_options(const VerifySettings& s, std::size_t replicates, std::size_t suite_index) {
  RunOptions run;
  run.replicates = replicates;
  run.seed = derive_seed(s.seed, suite_index + 1);
  run.threads = s.threads;
  run.alpha = s.alpha;
  run.caps = s.caps;
  return run;
}

void append(CheckOutcome& into, CheckOutcome part) {
  for (auto& r : part.reports) into.reports.push_back(std::move(r));
  for (auto& c : part.columns) into.columns.push_back(std::move(c));
}

CheckOutcome run_suite(const std::string& suite, std::size_t index, const VerifySettings& s) {
  CheckOutcome out;
  if (suite == "root") {
    append(out, check_root_trend(s.base, s.x, s.c, s.n_list, run_options(s, s.replicates, index)));
  } else if (suite == "tail") {
    append(out, check_tail_limit(ScalingRegime(s.tail_n, s.x, s.c), s.base, s.tail_grid,
                                 run_options(s, s.tail_replicates, index)));
  } else if (suite == "census") {
    append(out, check_census_chain(ScalingRegime(s.n, s.x, s.c), s.base, s.census_levels,
                                   run_options(s, s.replicates, index)));
  } else if (suite == "tree") {
    TreeCheckOptions opts;
    opts.epsilon = s.epsilon;
    opts.top_j = s.top_j;
    opts.limit_replicates = s.limit_replicates;
    opts.collapse_verdict = false;
    RunOptions run = run_options(s, s.replicates, index);
    append(out, check_tree_convergence(ScalingRegime(s.n, s.x, s.c), s.base, s.pattern, run, opts));
    // The degree collapse is judged at the largest scale only.
    const std::uint64_t n_max = *std::max_element(s.n_list.begin(), s.n_list.end());
    opts.collapse_verdict = true;
    run.seed = derive_seed(run.seed, n_max);
    append(out, check_tree_convergence(ScalingRegime(n_max, s.x, s.c), s.base, {UVertex::root()}, run, opts));
  } else if (suite == "equivalence") {
    const auto law = binomial_mark(s.base, s.mutation_p);
    for (std::uint64_t a : s.equivalence_ancestors) {
      RunOptions run = run_options(s, s.equivalence_replicates, index);
      run.seed = derive_seed(run.seed, a);
      append(out, check_construction_equivalence(law, a, run));
    }
  } else if (suite == "csbp-equiv") {
    const LevyMeasure measure(s.c, s.base.variance());
    const RunOptions run = run_options(s, s.csbp_replicates, index);
    append(out, check_csbp_equivalence(measure, s.x, s.epsilon, s.top_j, run));
    RunOptions sums = run;
    sums.seed = derive_seed(run.seed, 1);
    append(out, check_tree_level_sum(measure, s.x / s.c, s.level_sum_epsilon, s.top_j, sums));
  }
  return out;
}

// Single-thread seconds per replicate, calibrated on pilot runs of the
// default configuration; used only by --dry-run.
json plan_suite(const std::string& suite, const VerifySettings& s) {
  const double n = static_cast<double>(s.n);
  const double n_top = static_cast<double>(*std::max_element(s.n_list.begin(), s.n_list.end()));
  double seconds = 0.0;
  json checks = json::array();
  auto add = [&](std::string what, std::size_t reps, double cost) {
    checks.push_back({{"check", std::move(what)}, {"replicates", reps}});
    seconds += cost;
  };
  if (suite == "root") {
    for (auto k : s.n_list) add("root n=" + std::to_string(k), s.replicates, s.replicates * 8.6e-7 * k);
  } else if (suite == "tail") {
    add("tail n=" + std::to_string(s.tail_n), s.tail_replicates, s.tail_replicates * 7.8e-9 * s.tail_n);
  } else if (suite == "census") {
    add("census n=" + std::to_string(s.n), s.replicates, s.replicates * 6.8e-7 * n * s.census_levels);
  } else if (suite == "tree") {
    add("tree n=" + std::to_string(s.n), s.replicates, s.replicates * 1.5e-6 * n + s.limit_replicates * 2e-5);
    add("tree root n=" + std::to_string(static_cast<std::uint64_t>(n_top)), s.replicates,
        s.replicates * 7.5e-7 * n_top + s.limit_replicates * 2e-5);
  } else if (suite == "equivalence") {
    for (auto a : s.equivalence_ancestors) {
      add("equivalence a=" + std::to_string(a), 2 * s.equivalence_replicates,
          s.equivalence_replicates * 1.85e-6 * a);
    }
  } else if (suite == "csbp-equiv") {
    add("csbp-equiv", 2 * s.csbp_replicates, s.csbp_replicates * 1.1e-4);
    add("level sum", 2 * s.csbp_replicates, s.csbp_replicates * 1e-5);
  }
  return {{"suite", suite}, {"checks", checks}, {"estimated_seconds", seconds / std::max(1u, s.threads)}};
}

const char* verdict(const FitReport& r) {
  if (r.informational) return "INFO";
  if (r.inconclusive) return "INCONCLUSIVE";
  return r.passed ? "PASS" : "FAIL";
}

int cmd_verify(const Command& cmd, const Session& session, const std::string& suite, bool dry_run, std::ostream& out,
               std::ostream& err) {
  const auto& names = suite_names();
  std::vector<std::string> plan;
  if (suite == "all") {
    plan = names;
  } else if (std::find(names.begin(), names.end(), suite) != names.end()) {
    plan = {suite};
  } else {
    err << "unknown suite '" << suite << "'; available suites:";
    for (const auto& n : names) err << ' ' << n;
    err << " all\n";
    return kUsageError;
  }
  const json cfg = merged_config(cmd);
  const VerifySettings s = verify_settings(cfg, cmd.threads);

  if (dry_run) {
    json planned = json::array();
    double total = 0.0;
    for (const auto& name : plan) {
      planned.push_back(plan_suite(name, s));
      total += planned.back()["estimated_seconds"].get<double>();
    }
    out << json{{"suites", planned}, {"estimated_seconds", total}, {"threads", s.threads}}.dump(2) << '\n';
    return kSuccess;
  }

  OutputSet outputs(output_dir(cmd.out_dir));
  json reports = json::array();
  std::ostringstream samples;
  samples << "# schema=" << kSchemaVersion << " kind=samples\n";
  samples << "suite,series,index,value\n";
  bool passed = true;
  for (const auto& name : plan) {
    const std::size_t index = static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
    const CheckOutcome outcome = run_suite(name, index, s);
    for (const auto& r : outcome.reports) {
      json j = to_json(r);
      j["suite"] = name;
      reports.push_back(std::move(j));
      out << verdict(r) << "  [" << name << "] " << r.name << "  statistic=" << format_double(r.statistic)
          << " threshold=" << format_double(r.threshold) << '\n';
    }
    passed = passed && all_passed(outcome.reports);
    for (const auto& col : outcome.columns) {
      for (std::size_t i = 0; i < col.values.size(); ++i) {
        samples << name << ',' << col.name << ',' << i << ',' << format_double(col.values[i]) << '\n';
      }
    }
  }
  const json report = {{"schema", kSchemaVersion}, {"kind", "verify_report"}, {"suite", suite},
                       {"config", cfg},            {"passed", passed},        {"reports", reports},
                       {"environment", environment_block()}};
  outputs.write("report.json", report.dump(2) + "\n");
  outputs.write("samples.csv", samples.str());
  ManifestInfo info;
  info.status = passed ? "passed" : "failed";
  session.finish(outputs, cfg, info);
  out << "verify " << suite << ": " << (passed ? "passed" : "FAILED") << '\n';
  return passed ? kSuccess : kVerificationFailed;
}

// ---------------------------------------------------------------------------
// Command-line wiring
// ---------------------------------------------------------------------------

json law_defaults(const char* p) {
  return {{"base_pmf", base_pmf_json(binary_critical_law())}, {"mutation_p", p}};
}

void add_common(CLI::App* sub, Command& cmd) {
  sub->add_option("config", cmd.config_path, "JSON config file or a manifest.json from an earlier run");
  sub->add_option("--out", cmd.out_dir, std::string("Output directory (default: $") + kOutputDirEnv +
                                            " or ./alleles-out)");
  sub->add_option("--threads", cmd.threads, "Worker threads; outputs do not depend on it")
      ->check(CLI::Range(1u, 4096u));
}

void add_override(CLI::App* sub, Command& cmd, const std::string& flag, const std::string& key, Kind kind,
                  const std::string& help) {
  auto& o = cmd.overrides.emplace_back(Override{key, kind, {}, false, nullptr});
  o.option = kind == Kind::flag ? sub->add_flag(flag, o.flag, help) : sub->add_option(flag, o.text, help);
}

void add_law_options(CLI::App* sub, Command& cmd, bool with_p) {
  add_override(sub, cmd, "--law", "base_pmf", Kind::law_file, "Law file with base_pmf and mutation_p");
  add_override(sub, cmd, "--base", "base_pmf", Kind::named_law, "Named base law: binary or geometric");
  if (with_p) add_override(sub, cmd, "--p", "mutation_p", Kind::text, "Mutation probability, decimal or num/den");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Galton-Watson trees of alleles: simulation, exact laws, limit samplers and checks", "alleles"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const json caps_defaults = {{"max_individuals", Caps{}.max_individuals}, {"max_level", Caps{}.max_level}};

  Command simulate("simulate", law_defaults("1/2"));
  simulate.defaults.update({{"ancestors", 1},
                            {"replicates", 1},
                            {"master_seed", 1},
                            {"construction", "direct"},
                            {"format", "csv"},
                            {"trace", false}});
  simulate.defaults.update(caps_defaults);
  auto* sim = app.add_subcommand("simulate", "Sample trees of alleles and censuses");
  add_common(sim, simulate);
  add_law_options(sim, simulate, true);
  add_override(sim, simulate, "--ancestors", "ancestors", Kind::uint, "Number of ancestors a");
  add_override(sim, simulate, "--replicates", "replicates", Kind::uint, "Independent replicates");
  add_override(sim, simulate, "--seed", "master_seed", Kind::uint, "Master seed");
  add_override(sim, simulate, "--construction", "construction", Kind::text, "direct or walk");
  add_override(sim, simulate, "--format", "format", Kind::text, "Tree export: csv or json");
  add_override(sim, simulate, "--trace", "trace", Kind::flag, "Write walk traces (walk construction)");
  add_override(sim, simulate, "--max-individuals", "max_individuals", Kind::uint, "Individual cap per replicate");
  add_override(sim, simulate, "--max-level", "max_level", Kind::uint, "Level cap per replicate");

  Command exact("exact", law_defaults("1/2"));
  exact.defaults.update({{"ancestors", 1}, {"n_max", 8}, {"oracle", "none"}, {"rational", false}});
  auto* ex = app.add_subcommand("exact", "Tabulate the joint law of (T0, M1)");
  add_common(ex, exact);
  add_law_options(ex, exact, true);
  add_override(ex, exact, "--ancestors", "ancestors", Kind::uint, "Number of ancestors a");
  add_override(ex, exact, "--n-max", "n_max", Kind::uint, "Largest T0 tabulated");
  add_override(ex, exact, "--oracle", "oracle", Kind::text, "none or enumerate (brute-force cross-check)");
  add_override(ex, exact, "--rational", "rational", Kind::flag, "Exact rational arithmetic");

  Command csbp("csbp", json::object());
  csbp.defaults = {{"c", 1.0},         {"sigma2", 1.0},       {"root", "tau:1"},       {"depth", 1},
                   {"method", "definition"}, {"epsilon", 1e-3}, {"top_j", kDefaultTopJ}, {"replicates", 1},
                   {"master_seed", 1}, {"node_cap", kDefaultNodeCap}, {"format", "csv"}};
  auto* cs = app.add_subcommand("csbp", "Sample limit trees and CSBP chains");
  add_common(cs, csbp);
  add_override(cs, csbp, "--c", "c", Kind::real, "Mutation-rate constant c");
  add_override(cs, csbp, "--sigma2", "sigma2", Kind::real, "Offspring variance sigma^2");
  add_override(cs, csbp, "--root", "root", Kind::text, "fixed:<mass> or tau:<x>");
  add_override(cs, csbp, "--depth", "depth", Kind::uint, "Levels below the root");
  add_override(cs, csbp, "--method", "method", Kind::text, "definition or subordinator");
  add_override(cs, csbp, "--epsilon", "epsilon", Kind::real, "Smallest retained atom");
  add_override(cs, csbp, "--top-j", "top_j", Kind::uint, "Children kept per vertex");
  add_override(cs, csbp, "--replicates", "replicates", Kind::uint, "Independent replicates");
  add_override(cs, csbp, "--seed", "master_seed", Kind::uint, "Master seed");
  add_override(cs, csbp, "--format", "format", Kind::text, "Tree export: csv or json");

  Command verify("verify", law_defaults("1/2"));
  verify.defaults.update({{"x", 1.0},
                          {"c", 1.0},
                          {"n_list", {64, 256, 1024}},
                          {"n", 256},
                          {"replicates", 20'000},
                          {"alpha", 0.01},
                          {"epsilon", 1e-3},
                          {"level_sum_epsilon", 1e-4},
                          {"top_j", kDefaultTopJ},
                          {"master_seed", 20261019},
                          {"pattern", {"/", "/1"}},
                          {"census_levels", 2},
                          {"tail_n", 512},
                          {"tail_grid", {{1.0, 1.0}, {0.5, 2.0}, {2.0, 0.5}}},
                          {"tail_replicates", 10'000'000},
                          {"limit_replicates", 10'000},
                          {"equivalence_ancestors", {1, 2, 3}},
                          {"equivalence_replicates", 1'000'000},
                          {"csbp_replicates", 10'000}});
  verify.defaults.update(caps_defaults);
  std::string suite;
  bool dry_run = false;
  auto* ve = app.add_subcommand("verify", "Run verification suites and write a JSON report");
  ve->add_option("suite", suite, "root, tail, census, tree, equivalence, csbp-equiv or all")->required();
  add_common(ve, verify);
  add_law_options(ve, verify, true);
  ve->add_flag("--dry-run", dry_run, "Print planned replicate counts and estimated runtime, then exit");
  add_override(ve, verify, "--replicates", "replicates", Kind::uint, "Replicates for root, census and tree");
  add_override(ve, verify, "--seed", "master_seed", Kind::uint, "Master seed");
  add_override(ve, verify, "--n-list", "n_list", Kind::uint_list, "Comma-separated scales for the trend check");
  add_override(ve, verify, "--pattern", "pattern", Kind::text_list, "Comma-separated tree vertices, e.g. /,/1");

  std::vector<char*> argv;
  std::vector<std::string> storage(args);
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    const std::vector<std::string> echo(args.begin() + std::min<std::size_t>(1, args.size()), args.end());
    if (*sim) return cmd_simulate(simulate, Session(simulate, echo), out, err);
    if (*ex) return cmd_exact(exact, Session(exact, echo), out, err);
    if (*cs) return cmd_csbp(csbp, Session(csbp, echo), out, err);
    if (*ve) return cmd_verify(verify, Session(verify, echo), suite, dry_run, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DomainError& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kUsageError;
  } catch (const TruncationError& e) {
    err << "resource cap: " << e.what() << '\n';
    return kResourceCap;
  } catch (const std::length_error& e) {
    err << "resource cap: " << e.what() << '\n';
    return kResourceCap;
  } catch (const NumericError& e) {
    err << "resource cap: " << e.what() << '\n';
    return kResourceCap;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kVerificationFailed;
  }
  return kUsageError;
}

}  // namespace alleles::cli
