#include "spi/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "spi/graphs.hpp"

namespace spi::config {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

struct Entry {
  std::string value;
  int line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>> kKeys{
    {"problem", {"dimension", "lagrangian", "t0", "t1", "q0", "q1", "v0_guess"}},
    {"compute", {"loop_order", "quad_order", "quad_order_high", "grid"}},
    {"fubini", {"split_time", "fd_steps"}},
    {"coords", {"map"}},
    {"stphase", {"action", "dimension", "max_order", "hbars", "half_width"}},
};

class Reader {
 public:
  Reader(const std::map<std::string, Section>& sections, const std::string& origin) : s_(sections), origin_(origin) {}

  bool has(const std::string& sec) const { return s_.count(sec) > 0; }
  const Entry* find(const std::string& sec, const std::string& key) const {
    auto it = s_.find(sec);
    if (it == s_.end()) return nullptr;
    auto k = it->second.find(key);
    return k == it->second.end() ? nullptr : &k->second;
  }
  const Entry& need(const std::string& sec, const std::string& key) const {
    const Entry* e = find(sec, key);
    if (!e) throw ConfigError(origin_, 0, "missing required key '" + key + "' in [" + sec + "]");
    return *e;
  }

  double number(const Entry& e, const std::string& key) const {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(e.value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || trim(e.value.substr(used)).size() > 0 || !std::isfinite(v))
      throw ConfigError(origin_, e.line, "key '" + key + "': expected a number, got '" + e.value + "'");
    return v;
  }
  int integer(const Entry& e, const std::string& key) const {
    double v = number(e, key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(origin_, e.line, "key '" + key + "': expected an integer");
    return static_cast<int>(v);
  }
  std::vector<double> numbers(const Entry& e, const std::string& key) const {
    std::string s = e.value;
    for (char& c : s)
      if (c == ',') c = ' ';
    std::istringstream is(s);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(number(Entry{tok, e.line}, key));
    if (out.empty()) throw ConfigError(origin_, e.line, "key '" + key + "': expected at least one number");
    return out;
  }
  Eigen::VectorXd vector(const Entry& e, const std::string& key, int dim) const {
    auto xs = numbers(e, key);
    if (static_cast<int>(xs.size()) != dim)
      throw ConfigError(origin_, e.line, "key '" + key + "': expected " + std::to_string(dim) + " components, got " + std::to_string(xs.size()));
    return Eigen::Map<Eigen::VectorXd>(xs.data(), dim);
  }
  void parses(const Entry& e, const std::string& key, const std::string& text, int dim) const {
    try {
      expr::parse(text, dim);
    } catch (const expr::ParseError& err) {
      throw ConfigError(origin_, e.line, "key '" + key + "': " + err.what());
    }
  }

 private:
  const std::map<std::string, Section>& s_;
  const std::string& origin_;
};

std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace

classical::Problem RunConfig::problem() const {
  if (!has_problem) throw ConfigError(origin, 0, "missing section [problem]");
  classical::Problem p;
  p.dim = dimension;
  p.lagrangian = expr::parse(lagrangian, dimension);
  p.t0 = t0;
  p.t1 = t1;
  p.q0 = q0;
  p.q1 = q1;
  if (v0_guess) p.v0_guess = *v0_guess;
  return p;
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
  std::map<std::string, Section> sections;
  std::string current;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] == '#' || s[i] == ';') {
        s.resize(i);
        break;
      }
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(origin, line, "malformed section header");
      current = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!kKeys.count(current)) throw ConfigError(origin, line, "unknown section [" + current + "]");
      if (sections.count(current)) throw ConfigError(origin, line, "duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(origin, line, "expected 'key = value'");
    if (current.empty()) throw ConfigError(origin, line, "key outside of any section");
    std::string key = trim(std::string_view(s).substr(0, eq)), value = trim(std::string_view(s).substr(eq + 1));
    if (!kKeys.at(current).count(key)) throw ConfigError(origin, line, "unknown key '" + key + "' in [" + current + "]");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (value.empty()) throw ConfigError(origin, line, "empty value for key '" + key + "'");
    auto& sec = sections[current];
    if (sec.count(key)) throw ConfigError(origin, line, "duplicate key '" + key + "'");
    sec[key] = Entry{value, line};
  }

  Reader r(sections, origin);
  RunConfig c;
  c.origin = origin;
  for (const auto& [name, sec] : sections)
    for (const auto& [key, e] : sec) c.snapshot[name + "." + key] = e.value;

  if (r.has("problem")) {
    c.has_problem = true;
    const Entry& dim = r.need("problem", "dimension");
    c.dimension = r.integer(dim, "dimension");
    if (c.dimension < 1 || c.dimension > 8) throw ConfigError(origin, dim.line, "dimension must be between 1 and 8");
    const Entry& L = r.need("problem", "lagrangian");
    r.parses(L, "lagrangian", L.value, c.dimension);
    c.lagrangian = L.value;
    c.t0 = r.number(r.need("problem", "t0"), "t0");
    const Entry& t1 = r.need("problem", "t1");
    c.t1 = r.number(t1, "t1");
    if (!(c.t1 > c.t0)) throw ConfigError(origin, t1.line, "t1 must exceed t0");
    c.q0 = r.vector(r.need("problem", "q0"), "q0", c.dimension);
    c.q1 = r.vector(r.need("problem", "q1"), "q1", c.dimension);
    if (const Entry* e = r.find("problem", "v0_guess")) c.v0_guess = r.vector(*e, "v0_guess", c.dimension);
  } else if (!r.has("stphase")) {
    throw ConfigError(origin, 0, "missing section [problem]");
  }

  if (const Entry* e = r.find("compute", "loop_order")) {
    c.loop_order = r.integer(*e, "loop_order");
    if (c.loop_order < 0 || c.loop_order > graphs::kMaxOrder)
      throw ConfigError(origin, e->line, "loop_order must be between 0 and " + std::to_string(graphs::kMaxOrder));
  }
  if (const Entry* e = r.find("compute", "quad_order")) {
    c.quad.order = r.integer(*e, "quad_order");
    if (c.quad.order < 1 || c.quad.order > 128) throw ConfigError(origin, e->line, "quad_order must be between 1 and 128");
  }
  if (const Entry* e = r.find("compute", "quad_order_high")) {
    c.quad.order_high = r.integer(*e, "quad_order_high");
    if (c.quad.order_high < 1 || c.quad.order_high > 64) throw ConfigError(origin, e->line, "quad_order_high must be between 1 and 64");
  }
  if (const Entry* e = r.find("compute", "grid")) {
    c.grid = r.integer(*e, "grid");
    if (c.grid < 2) throw ConfigError(origin, e->line, "grid must be at least 2");
  }

  if (const Entry* e = r.find("fubini", "split_time")) {
    c.split_time = r.number(*e, "split_time");
    if (!(*c.split_time > c.t0 && *c.split_time < c.t1)) throw ConfigError(origin, e->line, "split_time must lie strictly between t0 and t1");
  }
  if (const Entry* e = r.find("fubini", "fd_steps")) {
    c.fd_steps = r.numbers(*e, "fd_steps");
    for (double h : c.fd_steps)
      if (!(h > 0)) throw ConfigError(origin, e->line, "fd_steps must be positive");
  }

  if (const Entry* e = r.find("coords", "map")) {
    c.coords_map = split_top_level(e->value);
    if (static_cast<int>(c.coords_map.size()) != c.dimension)
      throw ConfigError(origin, e->line, "map needs " + std::to_string(c.dimension) + " components, got " + std::to_string(c.coords_map.size()));
    for (const auto& m : c.coords_map) r.parses(*e, "map", m, c.dimension);
  }

  if (r.has("stphase")) {
    StphaseSettings st;
    if (const Entry* e = r.find("stphase", "dimension")) {
      st.dimension = r.integer(*e, "dimension");
      if (st.dimension < 1 || st.dimension > 2) throw ConfigError(origin, e->line, "stphase dimension must be 1 or 2");
    }
    const Entry& a = r.need("stphase", "action");
    r.parses(a, "action", a.value, st.dimension);
    st.action = a.value;
    if (const Entry* e = r.find("stphase", "max_order")) {
      st.max_order = r.integer(*e, "max_order");
      if (st.max_order < 0 || st.max_order > 3) throw ConfigError(origin, e->line, "stphase max_order must be between 0 and 3");
    }
    if (const Entry* e = r.find("stphase", "hbars")) {
      st.hbars = r.numbers(*e, "hbars");
      for (double h : st.hbars)
        if (!(h > 0)) throw ConfigError(origin, e->line, "hbars must be positive");
    }
    if (const Entry* e = r.find("stphase", "half_width")) {
      st.half_width = r.number(*e, "half_width");
      if (!(st.half_width > 0)) throw ConfigError(origin, e->line, "half_width must be positive");
    }
    c.stphase = st;
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path, 0, "cannot open file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace spi::config
