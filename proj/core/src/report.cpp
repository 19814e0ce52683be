#include "modwave/pipeline.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace modwave {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace


std::string report_json(const SuiteReport& report, bool include_timing) {
  json j;
  j["schema_version"] = config_schema_version;
  j["environment"] = report.environment;
  j["all_pass"] = report.all_pass();
  j["exit_code"] = report.exit_code();
  json verdicts = json::array();
  for (const auto& v : report.verdicts) {
    json x;
    x["name"] = v.name;
    x["tag"] = v.tag;
    x["stage"] = v.stage;
    x["value"] = number(v.value);
    x["relation"] = v.relation;
    x["bound"] = number(v.bound);
    if (v.relation == "in") x["bound_hi"] = number(v.bound_hi);
    x["pass"] = v.pass;
    verdicts.push_back(x);
  }
  j["verdicts"] = verdicts;
  json stages = json::array();
  for (const auto& s : report.stages) {
    json x;
    x["name"] = s.name;
    x["status"] = s.status;
    if (!s.error_kind.empty()) x["error"] = s.error_kind;
    if (!s.message.empty()) x["message"] = s.message;
    if (include_timing) x["seconds"] = s.seconds;
    stages.push_back(x);
  }
  j["stages"] = stages;
  json fits = json::array();
  for (const auto& f : report.fits) {
    json x;
    x["name"] = f.name;
    x["p"] = number(f.fit.p);
    x["exponent"] = number(f.fit.exponent);
    x["r_squared"] = number(f.fit.r_squared);
    x["t_min"] = f.fit.t_min;
    x["t_max"] = f.fit.t_max;
    x["predicted"] = number(f.fit.predicted);
    x["max_boundary_ratio"] = number(f.fit.max_boundary_ratio);
    x["claimed"] = f.fit.claimed;
    fits.push_back(x);
  }
  j["fits"] = fits;
  return j.dump(2);
}

namespace {

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

void write_report(const SuiteReport& report, const std::string& directory) {
  fs::create_directories(directory);
  write_text(fs::path(directory) / "report.json", report_json(report) + "\n");
  for (const auto& s : report.series) {
    std::ostringstream out;
    out.precision(10);
    for (size_t i = 0; i < s.columns.size(); ++i) out << (i ? "," : "") << s.columns[i];
    out << "\n";
    for (const auto& row : s.rows) {
      for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
    write_text(fs::path(directory) / (slug(s.name) + ".csv"), out.str());
  }
}

std::vector<std::string> emit_plots(const SuiteReport& report, const std::string& directory) {
  fs::create_directories(directory);
  std::vector<std::string> files;
  for (const auto& nf : report.fits) {
    const std::string base = slug(nf.name);
    std::ostringstream data;
    data.precision(12);
    data << "# t norm\n";
    for (const auto& [t, v] : nf.fit.series) data << t << " " << v << "\n";
    write_text(fs::path(directory) / (base + ".dat"), data.str());

    std::ostringstream gp;
    gp.precision(12);
    gp << "set terminal pngcairo size 800,600\n";
    gp << "set output '" << base << ".png'\n";
    gp << "set logscale xy\n";
    gp << "set xlabel 't'\nset ylabel 'norm'\n";
    gp << "set title '" << nf.name << "'\n";
    const double slope = std::isfinite(nf.fit.predicted) ? nf.fit.predicted : nf.fit.exponent;
    const double anchor_t = nf.fit.t_min;
    const double anchor = std::isfinite(nf.fit.intercept) ? std::exp(nf.fit.intercept + nf.fit.exponent * std::log1p(anchor_t)) : 1.0;
    gp << "guide(t) = " << anchor << " * ((1 + t) / " << (1.0 + anchor_t) << ")**(" << slope << ")\n";
    gp << "plot '" << base << ".dat' using 1:2 with linespoints title 'measured', guide(x) with lines dt 2 title 'slope "
       << slope << "'\n";
    write_text(fs::path(directory) / (base + ".gp"), gp.str());
    files.push_back(base + ".dat");
    files.push_back(base + ".gp");
  }
  return files;
}

}  // namespace modwave
