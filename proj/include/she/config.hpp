#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "she/coefficients.hpp"
#include "she/common.hpp"
#include "she/solver.hpp"

namespace she {

enum class RegMode { none, eps, alpha, truncate };

/// Everything a run needs: the coefficient block, discretization, noise
/// identity, suite selection, and tolerance overrides.  Round-trips through
/// its text form losslessly.
struct ExperimentConfig {
  CoefficientSpec coeff;
  RegMode mode = RegMode::none;
  double eps = 0.01831563888873418;  // e^{-4}
  double alpha = 0.9;
  double M = 20.085536923187668;  // e^{3}
  // eps floor applied on top of alpha/truncate modes for simulation, so the
  // coefficients are total on the range the scheme can visit (0 disables)
  double sim_eps = 0.0;

  TorusGrid grid;
  std::uint64_t master_seed = 20240901;
  std::size_t replicas = 100;

  std::string suite = "kernel";
  std::string out_dir = "out";
  int workers = 1;
  double u0_constant = 1.0;

  std::vector<double> eps_ladder = {0.1353352832366127, 0.01831563888873418,
                                    0.0024787521766663585};  // e^{-2,-4,-6}
  std::vector<double> alpha_ladder = {0.9, 0.99, 0.999};
  std::vector<double> m_ladder = {20.085536923187668, 54.598150033144236,
                                  148.4131591025766};  // e^{3,4,5}

  double tol_comparison = 1e-8;
  double positivity_threshold = 0.9;

  std::string canonical_text() const;
  std::uint64_t digest() const;
};

namespace cfgdetail {

inline std::string drift_kind_name(DriftKind k) {
  switch (k) {
    case DriftKind::zero: return "zero";
    case DriftKind::constant: return "constant";
    case DriftKind::linear: return "linear";
    case DriftKind::power_log: return "power_log";
    case DriftKind::power_log_sin: return "power_log_sin";
    case DriftKind::custom_table: return "custom_table";
  }
  return "?";
}

inline std::string sigma_kind_name(SigmaKind k) {
  switch (k) {
    case SigmaKind::zero: return "zero";
    case SigmaKind::constant: return "constant";
    case SigmaKind::linear: return "linear";
    case SigmaKind::power_log: return "power_log";
    case SigmaKind::custom_table: return "custom_table";
  }
  return "?";
}

inline std::string tail_name(TailKind k) {
  switch (k) {
    case TailKind::lipschitz_linear: return "lipschitz_linear";
    case TailKind::log_superlinear: return "log_superlinear";
    case TailKind::log_quarter_superlinear: return "log_quarter_superlinear";
  }
  return "?";
}

inline std::string mode_name(RegMode m) {
  switch (m) {
    case RegMode::none: return "none";
    case RegMode::eps: return "eps";
    case RegMode::alpha: return "alpha";
    case RegMode::truncate: return "truncate";
  }
  return "?";
}

inline std::string list_text(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

inline std::string table_text(const MonotoneCubicTable& t) {
  std::string s;
  for (std::size_t i = 0; i < t.abscissae().size(); ++i) {
    if (i) s += ' ';
    s += format_double(t.abscissae()[i]) + ':' + format_double(t.ordinates()[i]);
  }
  return s;
}

}  // namespace cfgdetail

inline std::string ExperimentConfig::canonical_text() const {
  using namespace cfgdetail;
  std::ostringstream o;
  o << "[coefficient]\n"
    << "kind = " << drift_kind_name(coeff.kind_b) << '\n'
    << "kind_sigma = " << sigma_kind_name(coeff.kind_sigma) << '\n'
    << "A1 = " << format_double(coeff.A1) << '\n'
    << "A2 = " << format_double(coeff.A2) << '\n'
    << "sign = " << coeff.theta_b << '\n'
    << "delta = " << format_double(coeff.delta) << '\n'
    << "tail = " << tail_name(coeff.tail) << '\n'
    << "b_scale = " << format_double(coeff.b_scale) << '\n'
    << "b_value = " << format_double(coeff.b_value) << '\n'
    << "b_shift = " << format_double(coeff.b_linear_shift) << '\n'
    << "sigma_scale = " << format_double(coeff.sigma_scale) << '\n'
    << "sigma_value = " << format_double(coeff.sigma_value) << '\n'
    << "unsafe_hypotheses = " << (coeff.unsafe_hypotheses ? "true" : "false")
    << '\n'
    << "mode = " << mode_name(mode) << '\n'
    << "eps = " << format_double(eps) << '\n'
    << "alpha = " << format_double(alpha) << '\n'
    << "M = " << format_double(M) << '\n'
    << "sim_eps = " << format_double(sim_eps) << '\n';
  if (!coeff.table_b.empty()) o << "table_b = " << table_text(coeff.table_b) << '\n';
  if (!coeff.table_sigma.empty())
    o << "table_sigma = " << table_text(coeff.table_sigma) << '\n';
  o << "\n[grid]\n"
    << "n = " << grid.n << '\n'
    << "dt = " << format_double(grid.dt) << '\n'
    << "T_end = " << format_double(grid.t_end) << '\n'
    << "snapshot_stride = " << grid.snapshot_stride << '\n';
  o << "\n[noise]\n"
    << "master_seed = " << master_seed << '\n'
    << "replicas = " << replicas << '\n';
  o << "\n[suite]\n"
    << "name = " << suite << '\n'
    << "out_dir = " << out_dir << '\n'
    << "workers = " << workers << '\n'
    << "u0 = " << format_double(u0_constant) << '\n'
    << "eps_ladder = " << list_text(eps_ladder) << '\n'
    << "alpha_ladder = " << list_text(alpha_ladder) << '\n'
    << "M_ladder = " << list_text(m_ladder) << '\n';
  o << "\n[tolerances]\n"
    << "tol_comparison = " << format_double(tol_comparison) << '\n'
    << "positivity_threshold = " << format_double(positivity_threshold) << '\n';
  return o.str();
}

inline std::uint64_t ExperimentConfig::digest() const {
  std::string text = canonical_text();
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

namespace cfgdetail {

class ParseCursor {
 public:
  ParseCursor(std::string section, int line) : section_(std::move(section)), line_(line) {}
  [[noreturn]] void fail(const std::string& msg) const {
    throw invalid_parameter("config line " + std::to_string(line_) + " [" +
                            section_ + "]: " + msg);
  }
  const std::string& section() const { return section_; }

 private:
  std::string section_;
  int line_;
};

inline double parse_double(const std::string& v, const ParseCursor& at) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) at.fail("trailing characters in number '" + v + "'");
    return d;
  } catch (const std::exception&) {
    at.fail("cannot parse number '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& v, const ParseCursor& at) {
  try {
    std::size_t pos = 0;
    unsigned long long d = std::stoull(v, &pos);
    if (pos != v.size()) at.fail("trailing characters in integer '" + v + "'");
    return d;
  } catch (const std::exception&) {
    at.fail("cannot parse integer '" + v + "'");
  }
}

inline bool parse_bool(const std::string& v, const ParseCursor& at) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  at.fail("expected true/false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& v,
                                      const ParseCursor& at) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, at));
  return out;
}

inline MonotoneCubicTable parse_table(const std::string& v,
                                      const ParseCursor& at) {
  std::vector<double> zs, fs;
  std::stringstream ss(v);
  std::string pair;
  while (ss >> pair) {
    auto colon = pair.find(':');
    if (colon == std::string::npos) at.fail("table entry '" + pair + "' lacks ':'");
    zs.push_back(parse_double(pair.substr(0, colon), at));
    fs.push_back(parse_double(pair.substr(colon + 1), at));
  }
  try {
    return MonotoneCubicTable(zs, fs);
  } catch (const std::exception& e) {
    at.fail(e.what());
  }
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace cfgdetail

/// Parses the experiment config format.  Unknown sections or keys are errors
/// that name the offender and its line.
inline ExperimentConfig parse_config_text(const std::string& text) {
  using namespace cfgdetail;
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw);
    auto hash = line.find('#');
    if (hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw invalid_parameter("config line " + std::to_string(line_no) +
                                ": unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "coefficient" && section != "grid" && section != "noise" &&
          section != "suite" && section != "tolerances")
        throw invalid_parameter("config line " + std::to_string(line_no) +
                                ": unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw invalid_parameter("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    ParseCursor at(section, line_no);

    if (section == "coefficient") {
      if (key == "kind") {
        if (value == "zero") cfg.coeff.kind_b = DriftKind::zero;
        else if (value == "constant") cfg.coeff.kind_b = DriftKind::constant;
        else if (value == "linear") cfg.coeff.kind_b = DriftKind::linear;
        else if (value == "power_log") cfg.coeff.kind_b = DriftKind::power_log;
        else if (value == "power_log_sin") cfg.coeff.kind_b = DriftKind::power_log_sin;
        else if (value == "custom_table") cfg.coeff.kind_b = DriftKind::custom_table;
        else at.fail("unknown drift kind '" + value + "'");
      } else if (key == "kind_sigma") {
        if (value == "zero") cfg.coeff.kind_sigma = SigmaKind::zero;
        else if (value == "constant") cfg.coeff.kind_sigma = SigmaKind::constant;
        else if (value == "linear") cfg.coeff.kind_sigma = SigmaKind::linear;
        else if (value == "power_log") cfg.coeff.kind_sigma = SigmaKind::power_log;
        else if (value == "custom_table") cfg.coeff.kind_sigma = SigmaKind::custom_table;
        else at.fail("unknown sigma kind '" + value + "'");
      } else if (key == "A1") cfg.coeff.A1 = parse_double(value, at);
      else if (key == "A2") cfg.coeff.A2 = parse_double(value, at);
      else if (key == "sign") {
        double s = parse_double(value, at);
        if (s != 1.0 && s != -1.0) at.fail("sign must be +1 or -1");
        cfg.coeff.theta_b = static_cast<int>(s);
      } else if (key == "delta") cfg.coeff.delta = parse_double(value, at);
      else if (key == "tail") {
        if (value == "lipschitz_linear") cfg.coeff.tail = TailKind::lipschitz_linear;
        else if (value == "log_superlinear") cfg.coeff.tail = TailKind::log_superlinear;
        else if (value == "log_quarter_superlinear")
          cfg.coeff.tail = TailKind::log_quarter_superlinear;
        else at.fail("unknown tail kind '" + value + "'");
      } else if (key == "b_scale") cfg.coeff.b_scale = parse_double(value, at);
      else if (key == "b_value") cfg.coeff.b_value = parse_double(value, at);
      else if (key == "b_shift") cfg.coeff.b_linear_shift = parse_double(value, at);
      else if (key == "sigma_scale") cfg.coeff.sigma_scale = parse_double(value, at);
      else if (key == "sigma_value") cfg.coeff.sigma_value = parse_double(value, at);
      else if (key == "unsafe_hypotheses") cfg.coeff.unsafe_hypotheses = parse_bool(value, at);
      else if (key == "mode") {
        if (value == "none") cfg.mode = RegMode::none;
        else if (value == "eps") cfg.mode = RegMode::eps;
        else if (value == "alpha") cfg.mode = RegMode::alpha;
        else if (value == "truncate") cfg.mode = RegMode::truncate;
        else at.fail("unknown regularization mode '" + value + "'");
      } else if (key == "eps") cfg.eps = parse_double(value, at);
      else if (key == "alpha") cfg.alpha = parse_double(value, at);
      else if (key == "M") cfg.M = parse_double(value, at);
      else if (key == "sim_eps") cfg.sim_eps = parse_double(value, at);
      else if (key == "table_b") cfg.coeff.table_b = parse_table(value, at);
      else if (key == "table_sigma") cfg.coeff.table_sigma = parse_table(value, at);
      else at.fail("unknown key '" + key + "'");
    } else if (section == "grid") {
      if (key == "n") cfg.grid.n = static_cast<std::size_t>(parse_u64(value, at));
      else if (key == "dt") cfg.grid.dt = parse_double(value, at);
      else if (key == "T_end") cfg.grid.t_end = parse_double(value, at);
      else if (key == "snapshot_stride")
        cfg.grid.snapshot_stride = static_cast<std::size_t>(parse_u64(value, at));
      else at.fail("unknown key '" + key + "'");
    } else if (section == "noise") {
      if (key == "master_seed") cfg.master_seed = parse_u64(value, at);
      else if (key == "replicas") {
        cfg.replicas = static_cast<std::size_t>(parse_u64(value, at));
        if (cfg.replicas < 1) at.fail("replicas must be >= 1");
      } else at.fail("unknown key '" + key + "'");
    } else if (section == "suite") {
      if (key == "name") cfg.suite = value;
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "workers") cfg.workers = static_cast<int>(parse_u64(value, at));
      else if (key == "u0") cfg.u0_constant = parse_double(value, at);
      else if (key == "eps_ladder") cfg.eps_ladder = parse_list(value, at);
      else if (key == "alpha_ladder") cfg.alpha_ladder = parse_list(value, at);
      else if (key == "M_ladder") cfg.m_ladder = parse_list(value, at);
      else at.fail("unknown key '" + key + "'");
    } else if (section == "tolerances") {
      if (key == "tol_comparison") {
        cfg.tol_comparison = parse_double(value, at);
        if (cfg.tol_comparison <= 0.0) at.fail("tol_comparison must be positive");
      } else if (key == "positivity_threshold")
        cfg.positivity_threshold = parse_double(value, at);
      else at.fail("unknown key '" + key + "'");
    } else {
      throw invalid_parameter("config line " + std::to_string(line_no) +
                              ": key outside any section");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path);
  out << cfg.canonical_text();
}

/// Builds the evaluatable coefficient from the config's regularization block.
inline Coefficient build_coefficient(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case RegMode::none:
      return Coefficient(cfg.coeff);
    case RegMode::eps:
      return regularize_eps(cfg.coeff, cfg.eps);
    case RegMode::alpha: {
      Coefficient c = interpolate_alpha(cfg.coeff, cfg.alpha);
      if (cfg.sim_eps > 0.0) c = regularize_eps(std::move(c), cfg.sim_eps);
      return c;
    }
    case RegMode::truncate: {
      Coefficient c = truncate_M(cfg.coeff, cfg.M);
      if (cfg.sim_eps > 0.0) c = regularize_eps(std::move(c), cfg.sim_eps);
      return c;
    }
  }
  throw invalid_parameter("build_coefficient: unknown mode");
}

}  // namespace she
