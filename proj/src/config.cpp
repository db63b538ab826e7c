#include "bandlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bandlab {

namespace {

struct Value {
  enum class Kind { scalar, string, list } kind = Kind::scalar;
  std::string text;
  std::vector<Value> items;
};

struct Entry {
  Value value;
  int line = 0;
};

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"theta", {"L", "xi_re", "xi_im", "K_max"}},
      {"kloop", {"W", "L", "E", "t", "sigma"}},
      {"ward", {"W", "L", "E", "t", "n_samples", "seed"}},
      {"local-law", {"W", "L", "E", "eta", "n_samples", "seed", "constant", "max_fraction"}},
      {"qdiff", {"W", "L", "E", "eta", "n_samples", "seed", "constant"}},
      {"deloc", {"W", "L", "kappa", "n_samples", "seed", "max_fraction", "ratio"}},
      {"que", {"W", "L", "E", "window", "n_samples", "seed", "blocks", "ratio"}},
      {"universality", {"W", "L", "kappa", "n_samples", "seed", "ou_times", "constant", "separation"}},
      {"decay", {"W", "L", "E", "t", "D", "n_samples", "seed", "constant"}},
      {"clt", {"W", "L", "E", "eta", "n_samples", "seed", "precision", "corr_far", "corr_near"}},
  };
  return keys;
}

class Parser {
 public:
  Parser(const std::string& origin, int line, const std::string& text) : origin_(origin), line_(line), s_(text) {}

  Value parse_value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    Value v;
    if (s_[pos_] == '"') {
      v.kind = Value::Kind::string;
      ++pos_;
      const auto end = s_.find('"', pos_);
      if (end == std::string::npos) fail("unterminated string");
      v.text = s_.substr(pos_, end - pos_);
      pos_ = end + 1;
    } else if (s_[pos_] == '[') {
      v.kind = Value::Kind::list;
      ++pos_;
      skip_ws();
      if (peek() == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(parse_value());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          break;
        }
        fail("expected ',' or ']' in list");
      }
    } else {
      const auto start = pos_;
      while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
      v.text = s_.substr(start, pos_ - start);
      if (v.text.empty()) fail("empty value");
    }
    return v;
  }

  void expect_end() {
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after value");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(origin_ + ":" + std::to_string(line_) + ": " + what);
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  std::string origin_;
  int line_;
  std::string s_;
  std::size_t pos_ = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty() || !(std::isalpha(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

class Reader {
 public:
  Reader(std::string origin, std::map<std::string, Entry> entries)
      : origin_(std::move(origin)), entries_(std::move(entries)) {}

  template <class Fn>
  void with(const std::string& key, Fn fn) const {
    const auto it = entries_.find(key);
    if (it != entries_.end()) fn(it->second);
  }

  [[noreturn]] void fail(const Entry& e, const std::string& key, const std::string& what) const {
    throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": " + key + ": " + what);
  }

  double real(const Entry& e, const std::string& key, const Value& v) const {
    if (v.kind != Value::Kind::scalar) fail(e, key, "expected a number");
    double out = 0.0;
    const auto* end = v.text.data() + v.text.size();
    const auto r = std::from_chars(v.text.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end || !std::isfinite(out)) fail(e, key, "not a number: " + v.text);
    return out;
  }

  template <class Int>
  Int integer(const Entry& e, const std::string& key, const Value& v) const {
    if (v.kind != Value::Kind::scalar) fail(e, key, "expected an integer");
    Int out = 0;
    const auto* end = v.text.data() + v.text.size();
    const auto r = std::from_chars(v.text.data(), end, out);
    if (r.ec != std::errc() || r.ptr != end) fail(e, key, "not an integer: " + v.text);
    return out;
  }

  std::string string(const Entry& e, const std::string& key) const {
    if (e.value.kind != Value::Kind::string) fail(e, key, "expected a quoted string");
    return e.value.text;
  }

  void set(const std::string& key, double& out) const {
    with(key, [&](const Entry& e) { out = real(e, key, e.value); });
  }
  void set(const std::string& key, std::optional<double>& out) const {
    with(key, [&](const Entry& e) { out = real(e, key, e.value); });
  }
  void set(const std::string& key, int& out) const {
    with(key, [&](const Entry& e) { out = integer<int>(e, key, e.value); });
  }
  void set(const std::string& key, std::uint64_t& out) const {
    with(key, [&](const Entry& e) { out = integer<std::uint64_t>(e, key, e.value); });
  }

 private:
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"theta", "kloop", "ward", "local-law", "deloc",
                                                 "que", "qdiff", "universality", "decay", "clt"};
  return names;
}

std::vector<std::string> config_keys(const std::string& experiment) {
  const auto it = allowed_keys().find(experiment);
  if (it == allowed_keys().end()) throw ConfigError("unknown experiment: " + experiment);
  return {it->second.begin(), it->second.end()};
}

double ExperimentConfig::threshold_constant() const {
  if (constant) return *constant;
  if (experiment == "universality") return 0.01;
  if (experiment == "decay") return 100.0;
  return 10.0;
}

ExperimentConfig parse_config(const std::string& experiment, const std::string& text, const std::string& origin) {
  const auto allowed = allowed_keys().find(experiment);
  if (allowed == allowed_keys().end()) throw ConfigError("unknown experiment: " + experiment);

  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(origin + ":" + std::to_string(line_no) + ": bad key '" + key + "'");
    Parser p(origin, line_no, trim(line.substr(eq + 1)));
    Entry entry{p.parse_value(), line_no};
    p.expect_end();
    if (key != "experiment" && key != "out" && !allowed->second.count(key))
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "' for experiment " +
                        experiment);
    if (!entries.emplace(key, std::move(entry)).second)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }

  Reader r(origin, entries);
  ExperimentConfig c;
  c.experiment = experiment;
  r.with("experiment", [&](const Entry& e) {
    if (r.string(e, "experiment") != experiment)
      r.fail(e, "experiment", "config is for '" + e.value.text + "', not '" + experiment + "'");
  });
  r.with("out", [&](const Entry& e) { c.out = r.string(e, "out"); });
  r.set("W", c.W);
  r.set("L", c.L);
  r.set("E", c.E);
  r.set("eta", c.eta);
  r.set("t", c.t);
  r.set("kappa", c.kappa);
  r.set("n_samples", c.n_samples);
  r.set("seed", c.seed);
  r.set("xi_re", c.xi_re);
  r.set("xi_im", c.xi_im);
  r.set("K_max", c.K_max);
  r.with("sigma", [&](const Entry& e) { c.sigma = r.string(e, "sigma"); });
  r.set("window", c.window);
  r.set("ratio", c.ratio);
  r.set("separation", c.separation);
  r.set("D", c.D);
  r.set("corr_far", c.corr_far);
  r.set("corr_near", c.corr_near);
  r.set("constant", c.constant);
  r.set("max_fraction", c.max_fraction);
  r.with("precision", [&](const Entry& e) {
    const auto p = r.string(e, "precision");
    if (p == "f32")
      c.precision = Precision::f32;
    else if (p == "f64")
      c.precision = Precision::f64;
    else
      r.fail(e, "precision", "expected \"f32\" or \"f64\"");
  });
  r.with("ou_times", [&](const Entry& e) {
    if (e.value.kind != Value::Kind::list) r.fail(e, "ou_times", "expected a list");
    c.ou_times.clear();
    for (const auto& v : e.value.items) c.ou_times.push_back(r.real(e, "ou_times", v));
  });
  r.with("blocks", [&](const Entry& e) {
    if (e.value.kind != Value::Kind::list) r.fail(e, "blocks", "expected a list of [a1, a2] pairs");
    for (const auto& v : e.value.items) {
      if (v.kind != Value::Kind::list || v.items.size() != 2) r.fail(e, "blocks", "expected [a1, a2]");
      c.blocks.push_back({r.integer<int>(e, "blocks", v.items[0]), r.integer<int>(e, "blocks", v.items[1])});
    }
  });
  return c;
}

ExperimentConfig load_config(const std::string& experiment, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(experiment, ss.str(), path.string());
}

void check_admissible(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("inadmissible config: " + what);
  };
  const std::string& x = c.experiment;
  require(c.W >= 1, "W must be >= 1");
  require(c.L >= 3, "L must be >= 3");
  require(std::abs(c.E) < 2.0, "|E| must be < 2");
  require(!(c.eta && c.t), "give one of eta or t, not both");
  const bool needs_t = x == "kloop" || x == "ward" || x == "decay";
  const bool needs_eta = x == "local-law" || x == "qdiff" || x == "clt";
  if (needs_t) {
    require(c.t.has_value(), "t is required");
    require(*c.t >= 0.0 && *c.t < 1.0, "t must lie in [0, 1)");
    if (x != "kloop") require(*c.t > 0.0, "t must be > 0");
  }
  if (needs_eta) require(c.eta.has_value() && *c.eta > 0.0, "eta > 0 is required");
  require(c.kappa > 0.0 && c.kappa < 2.0, "kappa must lie in (0, 2)");
  require(c.window >= 1, "window must be >= 1");
  require(c.ratio > 0.0, "ratio must be > 0");
  require(c.max_fraction >= 0.0 && c.max_fraction <= 1.0, "max_fraction must lie in [0, 1]");
  require(std::hypot(c.xi_re, c.xi_im) < 1.0, "|xi| must be < 1");
  require(c.K_max >= 0, "K_max must be >= 0");
  require(c.D > 0.0, "D must be > 0");
  require(!c.constant || *c.constant > 0.0, "constant must be > 0");
  require(!c.sigma.empty() && c.sigma.find_first_not_of("+-") == std::string::npos,
          "sigma must be a nonempty string over {+, -}");
  if (x == "kloop") require(c.sigma.size() >= 2 && c.sigma.size() <= 4, "kloop needs 2 <= n <= 4");
  for (double t : c.ou_times) require(t >= 0.0, "ou_times must be >= 0");
  for (const auto& b : c.blocks)
    require(b.a1 >= 0 && b.a2 >= 0 && b.a1 < c.L && b.a2 < c.L, "block outside the L x L torus");
  require(c.workers >= 1, "workers must be >= 1");
}

}  // namespace bandlab
