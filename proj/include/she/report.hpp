#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "she/config.hpp"
#include "she/verification.hpp"

namespace she {

inline constexpr const char* kCodeVersion = "she 1.0.0";

/// Tidy per-figure data: one CSV row per observation, emitted for external
/// plotting.
struct FigureData {
  std::string id;
  std::string header;
  std::vector<std::string> rows;
};

struct SuiteReport {
  std::string suite;
  std::uint64_t config_digest = 0;
  std::vector<VerificationReport> claims;
  std::vector<FigureData> figures;
  double wall_sec = 0.0;  // never serialized to JSON/CSV (reproducibility)

  bool all_pass() const {
    for (const auto& c : claims)
      if (!c.pass) return false;
    return true;
  }
};

namespace reportdetail {

inline nlohmann::json number_or_string(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return j.get<double>();
}

}  // namespace reportdetail

inline nlohmann::json report_to_json(const SuiteReport& rep) {
  using reportdetail::number_or_string;
  nlohmann::json j;
  j["suite"] = rep.suite;
  j["config_digest"] = rep.config_digest;
  j["code_version"] = kCodeVersion;
  j["claims"] = nlohmann::json::array();
  for (const auto& c : rep.claims) {
    nlohmann::json cj;
    cj["id"] = c.claim_id;
    cj["estimate"] = number_or_string(c.estimate);
    cj["ci_lo"] = number_or_string(c.ci.lo);
    cj["ci_hi"] = number_or_string(c.ci.hi);
    cj["ci_method"] = c.ci_method;
    cj["bound"] = number_or_string(c.bound);
    cj["pass"] = c.pass;
    cj["replicas"] = c.replicas;
    cj["notes"] = c.notes;
    j["claims"].push_back(cj);
  }
  j["figures"] = nlohmann::json::array();
  for (const auto& f : rep.figures) {
    nlohmann::json fj;
    fj["id"] = f.id;
    fj["header"] = f.header;
    fj["rows"] = f.rows;
    j["figures"].push_back(fj);
  }
  return j;
}

inline SuiteReport report_from_json(const nlohmann::json& j) {
  using reportdetail::number_from_json;
  SuiteReport rep;
  rep.suite = j.at("suite").get<std::string>();
  rep.config_digest = j.at("config_digest").get<std::uint64_t>();
  for (const auto& cj : j.at("claims")) {
    VerificationReport c;
    c.claim_id = cj.at("id").get<std::string>();
    c.estimate = number_from_json(cj.at("estimate"));
    c.ci.lo = number_from_json(cj.at("ci_lo"));
    c.ci.hi = number_from_json(cj.at("ci_hi"));
    c.ci_method = cj.at("ci_method").get<std::string>();
    c.bound = number_from_json(cj.at("bound"));
    c.pass = cj.at("pass").get<bool>();
    c.replicas = cj.at("replicas").get<std::size_t>();
    c.notes = cj.at("notes").get<std::string>();
    rep.claims.push_back(c);
  }
  for (const auto& fj : j.at("figures")) {
    FigureData f;
    f.id = fj.at("id").get<std::string>();
    f.header = fj.at("header").get<std::string>();
    for (const auto& r : fj.at("rows")) f.rows.push_back(r.get<std::string>());
    rep.figures.push_back(f);
  }
  return rep;
}

inline void write_report_json(const SuiteReport& rep, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path);
  out << report_to_json(rep).dump(2) << '\n';
}

inline SuiteReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "missing report file " + path);
  nlohmann::json j;
  in >> j;
  return report_from_json(j);
}

inline void write_report_text(const SuiteReport& rep, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path);
  out << "suite: " << rep.suite << "   ("
      << (rep.all_pass() ? "ALL PASS" : "FAILURES") << ")\n";
  out << "wall time: " << format_double(rep.wall_sec, 4) << " s\n\n";
  for (const auto& c : rep.claims) {
    out << (c.pass ? "[PASS] " : "[FAIL] ") << c.claim_id
        << "  estimate=" << format_double(c.estimate, 8);
    if (!c.ci_method.empty())
      out << "  ci=[" << format_double(c.ci.lo, 6) << ", "
          << format_double(c.ci.hi, 6) << "] (" << c.ci_method << ")";
    if (!std::isnan(c.bound)) out << "  bound=" << format_double(c.bound, 8);
    if (c.replicas) out << "  replicas=" << c.replicas;
    if (!c.notes.empty()) out << "  -- " << c.notes;
    out << '\n';
  }
}

/// Manifest: everything needed to reproduce the run.  Wall time lives here
/// (and only here), so the CSV/JSON outputs stay byte-identical across reruns.
inline void write_manifest(const ExperimentConfig& cfg, double wall_sec,
                           const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path);
  out << "code_version: " << kCodeVersion << '\n'
      << "config_digest: " << cfg.digest() << '\n'
      << "master_seed: " << cfg.master_seed << '\n'
      << "wall_seconds: " << format_double(wall_sec, 4) << '\n'
      << "---- config ----\n"
      << cfg.canonical_text();
}

/// Writes each figure in the report(s) as fig_<id>.csv (header-only when the
/// suite produced no observations).
inline std::vector<std::string> emit_plot_data(
    const std::vector<SuiteReport>& reports, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto& rep : reports) {
    for (const auto& fig : rep.figures) {
      std::string path = dir + "/fig_" + fig.id + ".csv";
      std::ofstream out(path);
      require(out.good(), "cannot open " + path);
      out << fig.header << '\n';
      for (const auto& row : fig.rows) out << row << '\n';
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace she
