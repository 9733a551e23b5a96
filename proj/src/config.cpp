#include "pnrs/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace pnrs {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "experiment", "metric", "metric.rs",
      "metric.bump.component", "metric.bump.amp", "metric.bump.t", "metric.bump.r",
      "metric.bump.theta", "metric.bump.width",
      "metric.conformal.amp", "metric.conformal.width", "metric.conformal.r",
      "coeff.a", "coeff.d", "coeff.kappa",
      "grid.mode", "grid.n_r", "grid.n_theta", "grid.k_max", "grid.cfl",
      "grid.t_min", "grid.t_max", "grid.r_lo", "grid.r_hi",
      "budget.epsilon", "budget.blowup_guard", "schwartz.decay_order",
      "out", "seed", "threads",
      "geodesic.t", "geodesic.r", "geodesic.theta", "geodesic.phi",
      "geodesic.dir_r", "geodesic.dir_theta", "geodesic.dir_phi", "geodesic.max_param",
      "solve.amp", "solve.center_t", "solve.center_r", "solve.width",
      "huygens.cap", "huygens.modes",
      "scatter.t1", "scatter.q_t", "scatter.k", "scatter.amp",
      "scatter.support_lo", "scatter.support_hi",
      "region.n", "s2s.t_plus", "s2s.amp", "s2s.count",
      "interact.omega0", "interact.width", "interact.aperture", "interact.amplitude",
      "interact.eps", "interact.observers",
      "recon.accept", "recon.q_t", "recon.q_r", "recon.q_theta",
      "distinguish.tol", "distinguish.budget", "distinguish.amp",
      "energy.cases", "energy.k",
      "gronwall.u0", "gronwall.p", "gronwall.t_hi",
      "flrw.t", "flrw.family",
  };
  return keys;
}

int line_of_offset(const std::string& text, size_t off) {
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + off, '\n'));
}

// Minimal UTF-8 well-formedness scan; rejects stray continuation and
// truncated sequences.
void check_utf8(const std::string& text) {
  size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = text[i];
    int extra = 0;
    if (c < 0x80) extra = 0;
    else if ((c & 0xE0) == 0xC0) extra = 1;
    else if ((c & 0xF0) == 0xE0) extra = 2;
    else if ((c & 0xF8) == 0xF0) extra = 3;
    else throw ConfigError(line_of_offset(text, i), "invalid UTF-8 byte");
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= text.size() || (static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80)
        throw ConfigError(line_of_offset(text, i), "truncated UTF-8 sequence");
    }
    i += extra + 1;
  }
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const RunConfig::Entry& e, const std::string& key) {
  try {
    size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "value for '" << key << "' is not a number: '" << e.value << "'";
    throw ConfigError(e.line, msg.str());
  }
}

}  // namespace

std::string RunConfig::str(const std::string& key, const std::string& fallback) const {
  const auto it = entries.find(key);
  return it == entries.end() ? fallback : it->second.value;
}

double RunConfig::num(const std::string& key, double fallback) const {
  const auto it = entries.find(key);
  return it == entries.end() ? fallback : parse_number(it->second, key);
}

int RunConfig::integer(const std::string& key, int fallback) const {
  const double v = num(key, fallback);
  if (v != std::floor(v)) {
    std::ostringstream msg;
    msg << "value for '" << key << "' must be an integer";
    throw ConfigError(entries.at(key).line, msg.str());
  }
  return static_cast<int>(v);
}

RunConfig parse_config_text(const std::string& raw, const std::string& origin) {
  std::string text = raw;
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text = text.substr(3);
  check_utf8(text);

  RunConfig cfg;
  cfg.origin = origin;

  std::istringstream in(text);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(ln, "expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError(ln, "empty key");
    if (key.find_first_not_of(
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
        std::string::npos)
      throw ConfigError(ln, "key '" + key + "' has characters outside [A-Za-z0-9._-]");
    if (!known_keys().count(key)) throw ConfigError(ln, "unknown key '" + key + "'");
    const auto [it, inserted] = cfg.entries.emplace(key, RunConfig::Entry{value, ln});
    if (!inserted) {
      std::ostringstream msg;
      msg << "duplicate key '" << key << "' (first at line " << it->second.line << ")";
      throw ConfigError(ln, msg.str());
    }
  }

  if (!cfg.has("experiment")) throw ConfigError(0, "missing required key 'experiment'");
  cfg.experiment = cfg.entries.at("experiment").value;
  cfg.metric_key = cfg.str("metric", cfg.metric_key);
  cfg.a = cfg.num("coeff.a", cfg.a);
  cfg.d = cfg.num("coeff.d", cfg.d);
  cfg.kappa = cfg.integer("coeff.kappa", cfg.kappa);
  if (cfg.kappa < 4 || cfg.kappa > 6) {
    const int ln2 = cfg.has("coeff.kappa") ? cfg.entries.at("coeff.kappa").line : 0;
    throw ConfigError(ln2, "coeff.kappa must be 4, 5, or 6");
  }

  const std::string mode = cfg.str("grid.mode", "radial");
  if (mode == "radial") cfg.grid.mode = GridMode::Radial;
  else if (mode == "axisym") cfg.grid.mode = GridMode::Axisymmetric;
  else if (mode == "spectral") cfg.grid.mode = GridMode::SpectralRadial;
  else
    throw ConfigError(cfg.entries.at("grid.mode").line,
                      "grid.mode must be radial, axisym, or spectral");
  cfg.grid.n_r = cfg.integer("grid.n_r", cfg.grid.n_r);
  cfg.grid.n_theta = cfg.integer("grid.n_theta", mode == "axisym" ? 48 : 1);
  cfg.grid.k_max = cfg.integer("grid.k_max", cfg.grid.k_max);
  cfg.grid.cfl = cfg.num("grid.cfl", cfg.grid.cfl);
  cfg.grid.t_min = cfg.num("grid.t_min", cfg.grid.t_min);
  cfg.grid.t_max = cfg.num("grid.t_max", cfg.grid.t_max);
  cfg.grid.r_lo = cfg.num("grid.r_lo", cfg.grid.r_lo);
  cfg.grid.r_hi = cfg.num("grid.r_hi", cfg.grid.r_hi);
  auto bad_grid = [&](const std::string& key, const std::string& why) {
    const int ln2 = cfg.has(key) ? cfg.entries.at(key).line : 0;
    throw ConfigError(ln2, why);
  };
  if (cfg.grid.n_r < 8) bad_grid("grid.n_r", "grid.n_r must be at least 8");
  if (cfg.grid.n_theta < 1) bad_grid("grid.n_theta", "grid.n_theta must be at least 1");
  if (cfg.grid.cfl <= 0.0 || cfg.grid.cfl >= 1.0) bad_grid("grid.cfl", "grid.cfl must be in (0,1)");
  if (cfg.grid.t_min >= cfg.grid.t_max) bad_grid("grid.t_min", "grid.t_min must be below grid.t_max");
  if (cfg.grid.r_lo < 0.0 || cfg.grid.r_hi > pi || cfg.grid.r_lo >= cfg.grid.r_hi)
    bad_grid("grid.r_lo", "radial band must satisfy 0 <= r_lo < r_hi <= pi");

  cfg.epsilon = cfg.num("budget.epsilon", cfg.epsilon);
  cfg.blowup_guard = cfg.num("budget.blowup_guard", cfg.blowup_guard);
  cfg.schwartz_decay_order = cfg.integer("schwartz.decay_order", cfg.schwartz_decay_order);
  cfg.out_dir = cfg.str("out", "");
  if (cfg.has("seed")) {
    const auto& e = cfg.entries.at("seed");
    try {
      size_t used = 0;
      cfg.seed = std::stoull(e.value, &used);
      if (used != e.value.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(e.line, "value for 'seed' is not an unsigned integer");
    }
  }
  cfg.threads = cfg.integer("threads", cfg.threads);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (const unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [k, e] : cfg.entries) {  // std::map iterates sorted
    mix(k);
    mix("=");
    mix(e.value);
    mix("\n");
  }
  mix("seed=" + std::to_string(cfg.seed) + "\n");
  return h;
}

}  // namespace pnrs
