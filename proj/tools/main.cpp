// Command-line driver for the wave-train experiments.
#include "modwave/pipeline.hpp"

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"

using namespace modwave;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string stages;
  int jobs = -1;
  long long seed = -1;
  bool plots = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_stages) {
  cmd->add_option("-c,--config", c.config, "flat key = value configuration file");
  cmd->add_option("-o,--out", c.out, "output directory (report.json, csv series, plots)");
  if (with_stages) cmd->add_option("--stages", c.stages, "comma separated stage list");
  cmd->add_option("-j,--jobs", c.jobs, "worker threads (0 = hardware)");
  cmd->add_option("--seed", c.seed, "seed for random test data");
  cmd->add_flag("--plots", c.plots, "write gnuplot files for every fit");
  cmd->add_flag("-q,--quiet", c.quiet, "only print the summary line");
}

int run(const Common& c, const std::vector<std::string>& default_stages) {
  FlatConfig flat = c.config.empty() ? FlatConfig{} : FlatConfig::load(c.config);
  if (!c.stages.empty()) flat.set("stages", c.stages);
  else if (!flat.has("stages") && !default_stages.empty()) {
    std::string joined;
    for (const auto& s : default_stages) joined += (joined.empty() ? "" : ",") + s;
    flat.set("stages", joined);
  }
  if (!c.out.empty()) flat.set("output.directory", c.out);
  if (c.jobs >= 0) flat.set("jobs", std::to_string(c.jobs));
  if (c.seed >= 0) flat.set("seed", std::to_string(c.seed));
  const ExperimentConfig cfg = load_experiment_config(flat);

  auto progress = [&](const StageRecord& s) {
    if (c.quiet) return;
    std::fprintf(stderr, "stage %s: %s (%.1fs)\n", s.name.c_str(), s.status.c_str(), s.seconds);
  };
  const SuiteReport report = run_pipeline(cfg, progress);
  write_report(report, cfg.output_directory);
  if (c.plots) emit_plots(report, cfg.output_directory + "/plots");

  if (!c.quiet) {
    for (const auto& s : report.stages) {
      std::printf("[%s] %s", s.name.c_str(), s.status.c_str());
      if (!s.message.empty()) std::printf(" (%s)", s.message.c_str());
      std::printf("  %.1fs\n", s.seconds);
    }
    for (const auto& v : report.verdicts) {
      const char* mark = v.relation == "info" ? "info" : (v.pass ? "PASS" : "FAIL");
      if (v.relation == "in")
        std::printf("  %-4s %-50s %.6g in [%.6g, %.6g]\n", mark, v.name.c_str(), v.value, v.bound, v.bound_hi);
      else if (v.relation == "info")
        std::printf("  %-4s %-50s %.6g\n", mark, v.name.c_str(), v.value);
      else
        std::printf("  %-4s %-50s %.6g %s %.6g\n", mark, v.name.c_str(), v.value, v.relation.c_str(), v.bound);
    }
  }
  std::printf("%s: %s (report in %s)\n", report.all_pass() ? "PASS" : "FAIL",
              report.has_runtime_error() ? "runtime error" : "verdicts evaluated", cfg.output_directory.c_str());
  return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability experiments for periodic wave trains"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    std::vector<std::string> stages;
  };
  const std::vector<Sub> subs{
      {"profile", "solve for the wave train", {"profile"}},
      {"spectrum", "Bloch spectrum, (a, d) and stability certificate", {"spectrum"}},
      {"linear-suite", "decay of the linear propagator on localized data", {"linear"}},
      {"modulation-suite", "linear estimates for modulational data", {"modulation"}},
      {"simulate", "nonlinear simulations and decay fits", {"nonlinear"}},
      {"duhamel", "Duhamel iteration checked against direct simulation", {"duhamel"}},
      {"whitham", "Whitham equation against the extracted wavenumber", {"whitham"}},
      {"full", "every stage (or the config's stage list)", {}},
  };
  std::vector<Common> opts(subs.size());
  std::vector<CLI::App*> cmds;
  for (size_t i = 0; i < subs.size(); ++i) {
    cmds.push_back(app.add_subcommand(subs[i].name, subs[i].help));
    add_common(cmds.back(), opts[i], subs[i].stages.empty());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (size_t i = 0; i < subs.size(); ++i) {
      if (!cmds[i]->parsed()) continue;
      std::vector<std::string> stages = subs[i].stages;
      if (stages.empty() && opts[i].stages.empty()) {
        FlatConfig probe = opts[i].config.empty() ? FlatConfig{} : FlatConfig::load(opts[i].config);
        if (!probe.has("stages")) stages = stage_order();
      }
      return run(opts[i], stages);
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 2;
}
