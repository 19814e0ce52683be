#pragma once

#include "modwave/common.hpp"
#include "modwave/model.hpp"
#include "modwave/propagator.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace modwave {

inline constexpr int config_schema_version = 1;

// Flat `dotted.key = value` text; `#` starts a comment.
class FlatConfig {
 public:
  static FlatConfig parse(const std::string& text);
  static FlatConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  int get(const std::string& key, int fallback) const;
  bool get(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_words(const std::string& key, const std::vector<std::string>& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }
  // Keys under `prefix.` rendered back to text, sorted.
  std::string subset(const std::vector<std::string>& prefixes) const;

 private:
  std::map<std::string, std::string> values_;
};

struct ModelSpec {
  std::string name = "lambda_omega";
  LambdaOmegaParams lambda_omega{0.03, 0.35};
  ReactionSystem system;  // polynomial models
  double k_star = 0.0;    // 0: from the lambda-omega relation
};

struct ShapeSpec {
  std::string shape = "gaussian_integral";  // step | gaussian_integral | custom | gaussian | none
  double amplitude = 0.0;
  double width = 1.0;
  double left = 0.0;
  double right = 0.0;
  double center = 0.0;
  std::string samples;  // custom h0 samples, one value per line
};

struct ExperimentConfig {
  int schema_version = config_schema_version;
  ModelSpec model;
  int M = 64;
  int N = 512;
  int xi_count = 64;
  ShapeSpec h0;
  ShapeSpec v0;
  std::vector<double> E0_list{1e-3, 5e-3};
  double t_end = 1000.0;
  double dt = 0.0625;
  double fit_min = 10.0;
  double fit_max = 1000.0;
  int per_decade = 24;
  std::vector<double> p_list{2.0, inf};
  double duhamel_horizon = 20.0;
  int duhamel_iterations = 5;
  std::map<std::string, double> tolerances;
  std::string output_directory = "out";
  std::string cache_directory;
  std::vector<std::string> stages;
  int jobs = 0;
  std::uint64_t seed = 1;
  FlatConfig raw;

  double tolerance(const std::string& name, double fallback) const;
};

ExperimentConfig load_experiment_config(const FlatConfig& flat);
// Polynomial from `coef:u0^2*u1 ; coef:u1` entries.
Polynomial parse_polynomial(const std::string& text, int components);

// 64-bit FNV-1a.
std::uint64_t content_hash(const std::string& text);

}  // namespace modwave
