#include "modwave/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace modwave {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "inf" || t == "infinity") return inf;
  try {
    size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a number, got '" + text + "'");
  }
}

}  // namespace

FlatConfig FlatConfig::parse(const std::string& text) {
  FlatConfig cfg;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    if (cfg.values_.count(key)) throw ConfigError("duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

FlatConfig FlatConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string FlatConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double FlatConfig::get(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(key, it->second);
}

int FlatConfig::get(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const double v = to_double(key, it->second);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("key '" + key + "' expects an integer");
  return static_cast<int>(v);
}

bool FlatConfig::get(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw ConfigError("key '" + key + "' expects a boolean");
}

std::vector<double> FlatConfig::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& w : split(it->second, ',')) out.push_back(to_double(key, w));
  return out;
}

std::vector<std::string> FlatConfig::get_words(const std::string& key,
                                               const std::vector<std::string>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return split(it->second, ',');
}

std::string FlatConfig::subset(const std::vector<std::string>& prefixes) const {
  std::ostringstream out;
  for (const auto& [k, v] : values_)
    for (const auto& p : prefixes)
      if (k == p || k.rfind(p + ".", 0) == 0) {
        out << k << " = " << v << "\n";
        break;
      }
  return out.str();
}

double ExperimentConfig::tolerance(const std::string& name, double fallback) const {
  const auto it = tolerances.find(name);
  return it == tolerances.end() ? fallback : it->second;
}

Polynomial parse_polynomial(const std::string& text, int components) {
  Polynomial poly;
  for (const auto& entry : split(text, ';')) {
    const size_t colon = entry.find(':');
    Monomial m;
    m.powers.assign(components, 0);
    m.coef = to_double("polynomial coefficient", trim(entry.substr(0, colon)));
    if (colon != std::string::npos) {
      for (const auto& factor : split(entry.substr(colon + 1), '*')) {
        if (factor.size() < 2 || factor[0] != 'u') throw ConfigError("bad monomial factor '" + factor + "'");
        const size_t caret = factor.find('^');
        const int idx = std::stoi(factor.substr(1, caret == std::string::npos ? std::string::npos : caret - 1));
        const int power = caret == std::string::npos ? 1 : std::stoi(factor.substr(caret + 1));
        if (idx < 0 || idx >= components) throw ConfigError("monomial references component " + std::to_string(idx));
        if (power < 0) throw ConfigError("negative exponent in '" + factor + "'");
        m.powers[idx] += power;
      }
    }
    poly.terms.push_back(m);
  }
  if (poly.terms.empty()) throw ConfigError("empty polynomial");
  return poly;
}

namespace {

ShapeSpec read_shape(const FlatConfig& f, const std::string& prefix, const std::string& default_shape) {
  ShapeSpec s;
  s.shape = f.get(prefix + ".shape", default_shape);
  s.amplitude = f.get(prefix + ".amplitude", 0.0);
  s.width = f.get(prefix + ".width", 1.0);
  s.left = f.get(prefix + ".left", -1.0);
  s.right = f.get(prefix + ".right", -1.0);
  s.center = f.get(prefix + ".center", -1.0);
  s.samples = f.get(prefix + ".samples", std::string());
  static const std::vector<std::string> known{"step", "gaussian_integral", "custom", "gaussian", "none"};
  if (std::find(known.begin(), known.end(), s.shape) == known.end())
    throw ConfigError("unknown shape '" + s.shape + "' for " + prefix);
  if (s.shape == "custom" && s.samples.empty()) throw ConfigError(prefix + ".samples is required for custom shapes");
  if (s.amplitude < 0.0) throw ConfigError(prefix + ".amplitude must be nonnegative");
  if (!(s.width > 0.0)) throw ConfigError(prefix + ".width must be positive");
  return s;
}

}  // namespace

ExperimentConfig load_experiment_config(const FlatConfig& f) {
  ExperimentConfig c;
  c.raw = f;
  c.schema_version = f.get("schema_version", config_schema_version);
  if (c.schema_version != config_schema_version)
    throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));

  c.model.name = f.get("model.name", std::string("lambda_omega"));
  if (c.model.name == "lambda_omega") {
    c.model.lambda_omega.beta = f.get("model.beta", 0.03);
    c.model.lambda_omega.q = f.get("model.q", 0.35);
    try {
      c.model.system = make_lambda_omega(c.model.lambda_omega);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  } else if (c.model.name == "polynomial") {
    const int n = f.get("model.components", 0);
    if (n < 1) throw ConfigError("model.components must be >= 1");
    c.model.system.name = "polynomial";
    c.model.system.n = n;
    for (int i = 0; i < n; ++i) {
      const std::string key = "model.f." + std::to_string(i);
      if (!f.has(key)) throw ConfigError("missing " + key);
      c.model.system.f.push_back(parse_polynomial(f.get(key, std::string()), n));
    }
    c.model.system.smoothness_K = f.get("model.K", 3);
    try {
      c.model.system.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    if (!f.has("model.k_star")) throw ConfigError("polynomial models need model.k_star");
  } else {
    throw ConfigError("unknown model.name '" + c.model.name + "'");
  }
  c.model.k_star = f.get("model.k_star", 0.0);

  c.M = f.get("grid.M", 64);
  c.N = f.get("grid.N", 512);
  c.xi_count = f.get("grid.xi_count", 64);
  if (c.M < 8 || c.M % 2) throw ConfigError("grid.M must be even and >= 8");
  if (!is_power_of_two(c.N) || c.N < 64) throw ConfigError("grid.N must be a power of two >= 64");

  c.h0 = read_shape(f, "perturbation.h0", "gaussian_integral");
  c.v0 = read_shape(f, "perturbation.v0", "gaussian");
  if (c.h0.left < 0.0) c.h0.left = c.N / 2.0 - c.N / 8.0;
  if (c.h0.right < 0.0) c.h0.right = c.N / 2.0 + c.N / 16.0;
  if (c.v0.center < 0.0) c.v0.center = c.N / 2.0;
  if (c.v0.width == 1.0 && !f.has("perturbation.v0.width")) c.v0.width = 0.5;
  c.E0_list = f.get_list("perturbation.E0", c.E0_list);
  for (double e : c.E0_list)
    if (!(e > 0.0)) throw ConfigError("perturbation.E0 entries must be positive");

  c.t_end = f.get("time.t_end", c.t_end);
  c.dt = f.get("time.dt", c.dt);
  c.fit_min = f.get("time.fit_min", c.fit_min);
  c.fit_max = f.get("time.fit_max", std::min(c.t_end, c.fit_max));
  c.per_decade = f.get("time.per_decade", c.per_decade);
  if (!(c.dt > 0.0) || !(c.t_end > 0.0) || !(c.fit_max > c.fit_min)) throw ConfigError("inconsistent time settings");
  c.p_list = f.get_list("p_list", c.p_list);
  c.duhamel_horizon = f.get("duhamel.horizon", c.duhamel_horizon);
  c.duhamel_iterations = f.get("duhamel.iterations", c.duhamel_iterations);

  for (const auto& [k, v] : f.values())
    if (k.rfind("tolerance.", 0) == 0) c.tolerances[k.substr(10)] = f.get(k, 0.0);

  c.output_directory = f.get("output.directory", c.output_directory);
  c.cache_directory = f.get("output.cache", c.output_directory + "/cache");
  c.stages = f.get_words("stages", {});
  c.jobs = f.get("jobs", 0);
  c.seed = static_cast<std::uint64_t>(f.get("seed", 1.0));
  return c;
}

std::uint64_t content_hash(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace modwave
