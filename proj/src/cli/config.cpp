#include "dirac/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dirac/errors.hpp"

namespace dirac::cli {

using nlohmann::json;

ConfigError::ConfigError(const std::string& what, int line, int column)
    : std::runtime_error(line > 0 ? "config:" + std::to_string(line) + ":" + std::to_string(column) + ": " + what
                                  : "config: " + what),
      line_(line),
      column_(column) {}

const char* to_string(Format f) {
  switch (f) {
    case Format::csv: return "csv";
    case Format::svg: return "svg";
    case Format::both: return "both";
  }
  return "?";
}

std::vector<double> EnergyGrid::expand() const {
  if (!values.empty()) return values;
  std::vector<double> out;
  if (count == 1) out.push_back(min);
  for (int i = 0; count > 1 && i < count; ++i) out.push_back(min + (max - min) * i / (count - 1));
  return out;
}

ConfigError ExperimentConfig::error_at(const std::string& pointer, const std::string& message) const {
  std::string p = pointer;
  while (true) {
    auto it = positions.find(p);
    if (it != positions.end()) return ConfigError(pointer + ": " + message, it->second.first, it->second.second);
    if (p.empty()) break;
    p = p.substr(0, p.rfind('/'));
  }
  return ConfigError(pointer + ": " + message);
}

namespace {

// Records the position of every value by JSON pointer. Runs on text nlohmann already accepted.
class PositionScanner {
 public:
  explicit PositionScanner(const std::string& t) : t_(t) {}

  std::map<std::string, std::pair<int, int>> run() {
    skip_ws();
    value("");
    return out_;
  }

 private:
  void mark(const std::string& ptr) { out_.emplace(ptr, std::make_pair(line_, col_)); }

  void advance() {
    if (t_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_ws() {
    while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) advance();
  }

  std::string string() {
    std::string s;
    advance();  // opening quote
    while (i_ < t_.size() && t_[i_] != '"') {
      if (t_[i_] == '\\') {
        advance();
        // keys with escapes are only compared for the simple escapes
        const char c = t_[i_];
        s += c == 'n' ? '\n' : c == 't' ? '\t' : c;
      } else {
        s += t_[i_];
      }
      advance();
    }
    advance();
    return s;
  }

  void value(const std::string& ptr) {
    mark(ptr);
    if (i_ >= t_.size()) return;
    const char c = t_[i_];
    if (c == '{') {
      advance();
      skip_ws();
      while (i_ < t_.size() && t_[i_] != '}') {
        const std::string key = string();
        skip_ws();
        advance();  // ':'
        skip_ws();
        value(ptr + "/" + key);
        skip_ws();
        if (t_[i_] == ',') advance();
        skip_ws();
      }
      advance();
    } else if (c == '[') {
      advance();
      skip_ws();
      int idx = 0;
      while (i_ < t_.size() && t_[i_] != ']') {
        value(ptr + "/" + std::to_string(idx++));
        skip_ws();
        if (t_[i_] == ',') advance();
        skip_ws();
      }
      advance();
    } else if (c == '"') {
      string();
    } else {
      while (i_ < t_.size() && !std::isspace(static_cast<unsigned char>(t_[i_])) && t_[i_] != ',' &&
             t_[i_] != '}' && t_[i_] != ']')
        advance();
    }
  }

  const std::string& t_;
  std::size_t i_ = 0;
  int line_ = 1, col_ = 1;
  std::map<std::string, std::pair<int, int>> out_;
};

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Typed reads against a section; unknown members are errors.
class Reader {
 public:
  Reader(const ExperimentConfig& cfg, const json& j, std::string ptr) : cfg_(cfg), j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) throw cfg_.error_at(ptr_, "expected an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw cfg_.error_at(ptr_ + "/" + it.key(), "unknown member");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + key; }

  void number(const std::string& key, double& out) {
    if (auto v = find(key)) out = as_number(*v, at(key));
  }

  template <class Int>
  void integer(const std::string& key, Int& out, long double lo, long double hi) {
    if (auto v = find(key)) out = as_integer<Int>(*v, at(key), lo, hi);
  }

  void boolean(const std::string& key, bool& out) {
    if (auto v = find(key)) {
      if (!v->is_boolean()) throw cfg_.error_at(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (auto v = find(key)) {
      if (!v->is_string()) throw cfg_.error_at(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (auto v = find(key)) {
      if (!v->is_array()) throw cfg_.error_at(at(key), "expected an array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) out.push_back(as_number((*v)[i], at(key) + "/" + std::to_string(i)));
    }
  }

  void integers(const std::string& key, std::vector<int>& out, long double lo, long double hi) {
    if (auto v = find(key)) {
      if (!v->is_array()) throw cfg_.error_at(at(key), "expected an array of integers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        out.push_back(as_integer<int>((*v)[i], at(key) + "/" + std::to_string(i), lo, hi));
    }
  }

 private:
  double as_number(const json& v, const std::string& p) const {
    if (!v.is_number()) throw cfg_.error_at(p, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw cfg_.error_at(p, "number is not finite");
    return x;
  }

  template <class Int>
  Int as_integer(const json& v, const std::string& p, long double lo, long double hi) const {
    if (!v.is_number_integer()) throw cfg_.error_at(p, "expected an integer");
    long double x = v.is_number_unsigned() ? static_cast<long double>(v.get<std::uint64_t>())
                                           : static_cast<long double>(v.get<std::int64_t>());
    if (x < lo || x > hi) {
      std::ostringstream os;
      os << "integer out of range [" << static_cast<double>(lo) << ", " << static_cast<double>(hi) << "]";
      throw cfg_.error_at(p, os.str());
    }
    return v.is_number_unsigned() ? static_cast<Int>(v.get<std::uint64_t>()) : static_cast<Int>(v.get<std::int64_t>());
  }

  const ExperimentConfig& cfg_;
  const json& j_;
  std::string ptr_;
  std::set<std::string> seen_;
};

constexpr long double big = 9.0e18L;

void read_model(ExperimentConfig& c, const json& j) {
  Reader r(c, j, "/model");
  r.number("m", c.model.m);
  r.number("lambda", c.model.lambda);
  if (auto v = r.find("alpha")) {
    try {
      if (v->is_string())
        c.model.alpha = DecayExponent::parse(v->get<std::string>());
      else if (v->is_number())
        c.model.alpha = DecayExponent::from_double(v->get<double>());
      else
        throw c.error_at(r.at("alpha"), "expected \"p/q\" or a number");
    } catch (const dirac::Error& e) {
      throw c.error_at(r.at("alpha"), e.what());
    }
  }
  std::string env = c.model.envelope.kind == Envelope::Kind::power           ? "power"
                    : c.model.envelope.kind == Envelope::Kind::shifted_power ? "shifted_power"
                                                                             : "constant";
  r.string("envelope", env);
  if (env == "power")
    c.model.envelope.kind = Envelope::Kind::power;
  else if (env == "shifted_power")
    c.model.envelope.kind = Envelope::Kind::shifted_power;
  else if (env == "constant")
    c.model.envelope.kind = Envelope::Kind::constant;
  else
    throw c.error_at(r.at("envelope"), "expected power, shifted_power or constant");
  r.number("shift", c.model.envelope.shift);
  try {
    c.model.validate();
  } catch (const dirac::Error& e) {
    throw c.error_at("/model", e.what());
  }
}

void read_distribution(ExperimentConfig& c, const json& j) {
  Reader r(c, j, "/distribution");
  std::string fam = to_string(c.distribution.family);
  r.string("family", fam);
  try {
    c.distribution.family = family_from_string(fam);
  } catch (const dirac::Error& e) {
    throw c.error_at(r.at("family"), e.what());
  }
  r.number("student_dof", c.distribution.student_dof);
  if (c.distribution.family == Family::student_like &&
      (c.distribution.student_dof < 5 || c.distribution.student_dof != std::floor(c.distribution.student_dof)))
    throw c.error_at(r.at("student_dof"), "student_dof must be an integer >= 5");
}

void read_energies(ExperimentConfig& c, const json& j) {
  Reader r(c, j, "/energies");
  r.numbers("values", c.energies.values);
  r.number("min", c.energies.min);
  r.number("max", c.energies.max);
  r.integer("count", c.energies.count, 0, 1e7);
  if (j.contains("values") && (j.contains("count") || j.contains("min") || j.contains("max")))
    throw c.error_at("/energies", "give either values or min/max/count, not both");
  if (c.energies.expand().empty()) throw c.error_at("/energies", "energy grid is empty");
}

void read_sizes(ExperimentConfig& c, const json& j) {
  Reader r(c, j, "/sizes");
  r.integer("N", c.N, 1, big);
  r.integer("L", c.L, 2, 1e6);
  r.integer("M", c.M, 1, big);
}

void read_seeds(ExperimentConfig& c, const json& j) {
  Reader r(c, j, "/seeds");
  r.integer("base", c.seed, 0, 18446744073709551615.0L);
}

void read_probes(ExperimentConfig& c, const json& j) {
  Reader r(c, j, "/probes");
  if (auto v = r.find("lyapunov")) {
    Reader q(c, *v, "/probes/lyapunov");
    q.boolean("product", c.lyapunov.product);
    q.number("theta0", c.lyapunov.theta0);
  }
  if (auto v = r.find("phase")) {
    Reader q(c, *v, "/probes/phase");
    auto& p = c.phase;
    q.number("lambda_min", p.lambda_min);
    q.number("lambda_max", p.lambda_max);
    q.integer("lambda_count", p.lambda_count, 1, 1e5);
    q.integer("energy_count", p.energy_count, 2, 1e5);
    q.numbers("masses", p.masses);
    if (!(p.lambda_min >= 0 && p.lambda_max >= p.lambda_min))
      throw c.error_at("/probes/phase", "need 0 <= lambda_min <= lambda_max");
    for (double m : p.masses)
      if (!(m >= 0)) throw c.error_at("/probes/phase/masses", "masses must be >= 0");
  }
  if (auto v = r.find("green")) {
    Reader q(c, *v, "/probes/green");
    auto& g = c.green;
    q.number("E", g.E);
    q.number("s", g.s);
    q.integer("u", g.u, 1, 1e6);
    q.string("sigma", g.sigma);
    q.string("sigma_p", g.sigma_p);
    q.integers("n_grid", g.n_grid, 1, 1e6);
    q.boolean("negative_moments", g.negative_moments);
    q.number("s_negative", g.s_negative);
    q.boolean("correlator", g.correlator);
    q.number("window_low", g.window_low);
    q.number("window_high", g.window_high);
    q.integer("bootstrap", g.bootstrap, 10, 1e6);
    for (auto [name, val] : {std::pair{"sigma", &g.sigma}, std::pair{"sigma_p", &g.sigma_p}})
      if (*val != "minus" && *val != "plus") throw c.error_at(q.at(name), "expected minus or plus");
    if (!(g.s > 0 && g.s < 1)) throw c.error_at(q.at("s"), "s must lie in (0, 1)");
    if (!(g.s_negative > 0)) throw c.error_at(q.at("s_negative"), "s_negative must be > 0");
    if (!(g.window_low < g.window_high)) throw c.error_at("/probes/green", "window_low must be below window_high");
  }
  if (auto v = r.find("dynamics")) {
    Reader q(c, *v, "/probes/dynamics");
    auto& d = c.dynamics;
    q.integer("replicas", d.replicas, 1, 1e6);
    q.integer("site", d.site, 1, 1e6);
    q.string("spin", d.spin);
    q.number("t_max", d.t_max);
    q.integer("steps", d.steps, 2, 1e7);
    q.numbers("moments", d.moments);
    q.number("truncated_p", d.truncated_p);
    q.integers("truncated_N", d.truncated_N, 1, 1e6);
    q.numbers("kappa", d.kappa);
    q.boolean("box_doubling", d.box_doubling);
    if (d.spin != "minus" && d.spin != "plus") throw c.error_at(q.at("spin"), "expected minus or plus");
    if (!(d.t_max >= 0)) throw c.error_at(q.at("t_max"), "t_max must be >= 0");
  }
  if (auto v = r.find("eigen")) {
    Reader q(c, *v, "/probes/eigen");
    auto& e = c.eigen;
    q.number("E_low", e.E_low);
    q.number("E_high", e.E_high);
    q.integer("seeds", e.seeds, 1, 1e6);
    q.number("centre_fraction", e.centre_fraction);
    q.integer("min_tail", e.min_tail, 3, 1e6);
    if (!(e.E_low < e.E_high)) throw c.error_at("/probes/eigen", "E_low must be below E_high");
  }
  if (auto v = r.find("diagnostics")) {
    Reader q(c, *v, "/probes/diagnostics");
    q.boolean("martingale", c.diagnostics.martingale);
    q.boolean("rn_ratio", c.diagnostics.rn_ratio);
    q.boolean("r4", c.diagnostics.r4);
  }
  if (auto v = r.find("validate_disorder")) {
    Reader q(c, *v, "/probes/validate_disorder");
    q.integer("samples", c.validate.samples, 1, big);
    q.integer("decades", c.validate.decades, 1, 15);
    q.integer("path_length", c.validate.path_length, 1, big);
  }
}

void read_output(ExperimentConfig& c, const json& j) {
  Reader r(c, j, "/output");
  r.string("dir", c.out_dir);
  std::string f = to_string(c.format);
  r.string("format", f);
  if (f == "csv")
    c.format = Format::csv;
  else if (f == "svg")
    c.format = Format::svg;
  else if (f == "both")
    c.format = Format::both;
  else
    throw c.error_at(r.at("format"), "expected csv, svg or both");
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  for (int i = 1; i <= 19; ++i) c.energies.values.push_back(i / 10.0);
  c.energies.values.push_back(1.95);
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string msg = e.what();
    // drop nlohmann's "[json.exception.parse_error.101] parse error at line x, column y: " prefix
    if (auto p = msg.find(": "); p != std::string::npos) msg = msg.substr(p + 2);
    throw ConfigError(msg, line, col);
  }
  ExperimentConfig c = ExperimentConfig::defaults();
  c.positions = PositionScanner(text).run();
  Reader top(c, j, "");
  if (auto v = top.find("model")) read_model(c, *v);
  if (auto v = top.find("distribution")) read_distribution(c, *v);
  if (auto v = top.find("energies")) {
    c.energies = {};
    read_energies(c, *v);
  }
  if (auto v = top.find("sizes")) read_sizes(c, *v);
  if (auto v = top.find("seeds")) read_seeds(c, *v);
  if (auto v = top.find("probes")) read_probes(c, *v);
  if (auto v = top.find("output")) read_output(c, *v);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json_text(const ExperimentConfig& c) {
  json j;
  const char* env = c.model.envelope.kind == Envelope::Kind::power           ? "power"
                    : c.model.envelope.kind == Envelope::Kind::shifted_power ? "shifted_power"
                                                                             : "constant";
  j["model"] = {{"m", c.model.m},
                {"lambda", c.model.lambda},
                {"alpha", c.model.alpha.str()},
                {"envelope", env},
                {"shift", c.model.envelope.shift}};
  j["distribution"] = {{"family", to_string(c.distribution.family)}, {"student_dof", c.distribution.student_dof}};
  if (!c.energies.values.empty())
    j["energies"] = {{"values", c.energies.values}};
  else
    j["energies"] = {{"min", c.energies.min}, {"max", c.energies.max}, {"count", c.energies.count}};
  j["sizes"] = {{"N", c.N}, {"L", c.L}, {"M", c.M}};
  j["seeds"] = {{"base", c.seed}};
  const auto& g = c.green;
  const auto& d = c.dynamics;
  j["probes"] = {
      {"lyapunov", {{"product", c.lyapunov.product}, {"theta0", c.lyapunov.theta0}}},
      {"phase",
       {{"lambda_min", c.phase.lambda_min},
        {"lambda_max", c.phase.lambda_max},
        {"lambda_count", c.phase.lambda_count},
        {"energy_count", c.phase.energy_count},
        {"masses", c.phase.masses}}},
      {"green",
       {{"E", g.E},
        {"s", g.s},
        {"u", g.u},
        {"sigma", g.sigma},
        {"sigma_p", g.sigma_p},
        {"n_grid", g.n_grid},
        {"negative_moments", g.negative_moments},
        {"s_negative", g.s_negative},
        {"correlator", g.correlator},
        {"window_low", g.window_low},
        {"window_high", g.window_high},
        {"bootstrap", g.bootstrap}}},
      {"dynamics",
       {{"replicas", d.replicas},
        {"site", d.site},
        {"spin", d.spin},
        {"t_max", d.t_max},
        {"steps", d.steps},
        {"moments", d.moments},
        {"truncated_p", d.truncated_p},
        {"truncated_N", d.truncated_N},
        {"kappa", d.kappa},
        {"box_doubling", d.box_doubling}}},
      {"eigen",
       {{"E_low", c.eigen.E_low},
        {"E_high", c.eigen.E_high},
        {"seeds", c.eigen.seeds},
        {"centre_fraction", c.eigen.centre_fraction},
        {"min_tail", c.eigen.min_tail}}},
      {"diagnostics",
       {{"martingale", c.diagnostics.martingale}, {"rn_ratio", c.diagnostics.rn_ratio}, {"r4", c.diagnostics.r4}}},
      {"validate_disorder",
       {{"samples", c.validate.samples}, {"decades", c.validate.decades}, {"path_length", c.validate.path_length}}}};
  j["output"] = {{"dir", c.out_dir}, {"format", to_string(c.format)}};
  return j.dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& c) {
  // where and in which format results land does not change them
  ExperimentConfig k = c;
  k.out_dir = ExperimentConfig{}.out_dir;
  k.format = ExperimentConfig{}.format;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json_text(k)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dirac::cli
