#pragma once

#include "modwave/bloch.hpp"
#include "modwave/config.hpp"
#include "modwave/dynamics.hpp"
#include "modwave/profile.hpp"
#include "modwave/propagator.hpp"
#include "modwave/whitham.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace modwave {

// --- shared experiment recipes ----------------------------------------------

// Gaussian envelope times u'/max|u'| (a bump along the translation direction).
Field localized_bump(const WaveProfile& profile, const Grid& grid, double center, double width);

// Smooth localized field with seeded random periodic content.
Field random_localized(const WaveProfile& profile, const Grid& grid, double center, double width, std::uint64_t seed);

ModulationData make_modulation(const Grid& grid, const ShapeSpec& spec, int K);

struct InitialRecipe {
  ModulationData h;
  Field v0;
  double E0 = 0.0;
};

// Scales h0 and v0 so that |d_x h0| and |v0| in L^1 cap H^K each carry an
// equal share of E0 (all of it when the other is absent).
InitialRecipe scaled_initial_data(const WaveProfile& profile, const Grid& grid, const ShapeSpec& h0,
                                  const ShapeSpec& v0, double E0, int K);

// --- reports ----------------------------------------------------------------

struct Verdict {
  std::string name;
  std::string tag;       // claim being checked
  std::string stage;
  double value = 0.0;
  double bound = 0.0;
  std::string relation;  // "<=", ">=", "in", "info"
  double bound_hi = 0.0; // upper end for "in"
  bool pass = true;
};

struct StageRecord {
  std::string name;
  std::string status;  // ok | failed | skipped: prerequisite failed
  std::string error_kind;
  std::string message;
  double seconds = 0.0;
};

struct NamedFit {
  std::string name;
  DecayFit fit;
};

struct NamedSeries {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct SuiteReport {
  std::vector<Verdict> verdicts;
  std::vector<StageRecord> stages;
  std::vector<NamedFit> fits;
  std::vector<NamedSeries> series;
  std::map<std::string, std::string> environment;

  bool all_pass() const;
  bool has_runtime_error() const;
  // 0 all pass, 1 a bound is violated, 2 a configuration or runtime error.
  int exit_code() const;
  const Verdict* find(const std::string& name) const;
};

// Stages: profile, spectrum, linear, modulation, nonlinear, duhamel, whitham.
const std::vector<std::string>& stage_order();
std::vector<std::string> with_prerequisites(const std::vector<std::string>& stages);

// Called after each stage finishes (or is skipped).
using StageCallback = std::function<void(const StageRecord&)>;

SuiteReport run_pipeline(const ExperimentConfig& config, const StageCallback& on_stage = {});

std::string report_json(const SuiteReport& report, bool include_timing = true);
void write_report(const SuiteReport& report, const std::string& directory);
// Data and gnuplot command files for every fit; returns the files written.
std::vector<std::string> emit_plots(const SuiteReport& report, const std::string& directory);

std::string version_string();

}  // namespace modwave
