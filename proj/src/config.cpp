#include "kinlv/config.hpp"

#include <set>
#include <string>

#include "json.hpp"
#include "kinlv/errors.hpp"
#include "kinlv/io.hpp"

namespace kinlv {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) {
  throw KinlvError(ErrorCode::Validation, "config: " + what);
}

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) bad("unknown key '" + where + "." + key + "'");
  }
}

double get_num(const json& obj, const std::string& where, const char* key,
               double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (!v.is_number()) bad(where + "." + key + " must be a number");
  return v.get<double>();
}

std::uint64_t get_u64(const json& obj, const std::string& where,
                      const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (!v.is_number_unsigned() && !v.is_number_integer()) {
    bad(where + "." + key + " must be a nonnegative integer");
  }
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    bad(where + "." + key + " must be nonnegative");
  }
  return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& where, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (!v.is_boolean()) bad(where + "." + key + " must be a boolean");
  return v.get<bool>();
}

std::string get_str(const json& obj, const std::string& where, const char* key,
                    const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (!v.is_string()) bad(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> get_times(const json& obj, const std::string& where,
                              const char* key,
                              const std::vector<double>& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (!v.is_array()) bad(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) bad(where + "." + key + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Risk parse_risk(const std::string& s, const std::string& where) {
  if (s == "half") return Risk::Half;
  if (s == "one") return Risk::One;
  bad(where + " must be 'half' or 'one'");
}

std::string risk_name(Risk r) { return r == Risk::Half ? "half" : "one"; }

DensityShape parse_shape(const std::string& s) {
  if (s == "gamma") return DensityShape::Gamma;
  if (s == "lognormal") return DensityShape::LogNormal;
  if (s == "uniform") return DensityShape::Uniform;
  bad("initial.shape must be 'gamma', 'lognormal', or 'uniform'");
}

std::string shape_name(DensityShape s) {
  switch (s) {
    case DensityShape::Gamma: return "gamma";
    case DensityShape::LogNormal: return "lognormal";
    default: return "uniform";
  }
}

}  // namespace

void apply_config_text(RunSettings& s, const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    bad(std::string("parse error: ") + e.what());
  }
  if (!root.is_object()) bad("top level must be an object");
  require_keys(root, "<top>", {"params", "initial", "run"});

  if (root.contains("params")) {
    const json& jp = root["params"];
    if (!jp.is_object()) bad("params must be an object");
    require_keys(jp, "params",
                 {"alpha", "beta", "gamma", "mu", "nu", "chi", "theta",
                  "sigma_f", "sigma_g", "risk_f", "risk_g", "s0"});
    ModelParams& p = s.params;
    p.alpha = get_num(jp, "params", "alpha", p.alpha);
    p.beta = get_num(jp, "params", "beta", p.beta);
    p.gamma = get_num(jp, "params", "gamma", p.gamma);
    p.mu = get_num(jp, "params", "mu", p.mu);
    p.nu = get_num(jp, "params", "nu", p.nu);
    p.chi = get_num(jp, "params", "chi", p.chi);
    p.theta = get_num(jp, "params", "theta", p.theta);
    p.sigma_f = get_num(jp, "params", "sigma_f", p.sigma_f);
    p.sigma_g = get_num(jp, "params", "sigma_g", p.sigma_g);
    p.s0 = get_num(jp, "params", "s0", p.s0);
    if (jp.contains("risk_f")) {
      p.risk_f = parse_risk(get_str(jp, "params", "risk_f", ""), "params.risk_f");
    }
    if (jp.contains("risk_g")) {
      p.risk_g = parse_risk(get_str(jp, "params", "risk_g", ""), "params.risk_g");
    }
  }

  if (root.contains("initial")) {
    const json& ji = root["initial"];
    if (!ji.is_object()) bad("initial must be an object");
    require_keys(ji, "initial", {"m_f0", "m_g0", "c_f0", "c_g0", "shape"});
    InitialConditions& ic = s.initial;
    ic.m_f0 = get_num(ji, "initial", "m_f0", ic.m_f0);
    ic.m_g0 = get_num(ji, "initial", "m_g0", ic.m_g0);
    ic.c_f0 = get_num(ji, "initial", "c_f0", ic.c_f0);
    ic.c_g0 = get_num(ji, "initial", "c_g0", ic.c_g0);
    if (ji.contains("shape")) {
      ic.shape = parse_shape(get_str(ji, "initial", "shape", ""));
    }
  }

  if (root.contains("run")) {
    const json& jr = root["run"];
    if (!jr.is_object()) bad("run must be an object");
    require_keys(jr, "run",
                 {"t_end", "seed", "agents", "eps", "cells", "x_max_f",
                  "x_max_g", "cfl", "dt_max", "risk", "out_points",
                  "out_times", "histogram_times", "response", "resource",
                  "init_sampling", "with_gini", "sigma_scale", "rtol", "atol",
                  "which"});
    s.t_end = get_num(jr, "run", "t_end", s.t_end);
    s.seed = get_u64(jr, "run", "seed", s.seed);
    s.agents = static_cast<std::size_t>(
        get_u64(jr, "run", "agents", static_cast<std::uint64_t>(s.agents)));
    s.eps = get_num(jr, "run", "eps", s.eps);
    s.cells = static_cast<std::size_t>(
        get_u64(jr, "run", "cells", static_cast<std::uint64_t>(s.cells)));
    s.x_max_f = get_num(jr, "run", "x_max_f", s.x_max_f);
    s.x_max_g = get_num(jr, "run", "x_max_g", s.x_max_g);
    s.cfl = get_num(jr, "run", "cfl", s.cfl);
    s.dt_max = get_num(jr, "run", "dt_max", s.dt_max);
    s.out_points = static_cast<int>(get_num(jr, "run", "out_points",
                                            static_cast<double>(s.out_points)));
    s.out_times = get_times(jr, "run", "out_times", s.out_times);
    s.histogram_times =
        get_times(jr, "run", "histogram_times", s.histogram_times);
    s.with_gini = get_bool(jr, "run", "with_gini", s.with_gini);
    s.sigma_scale = get_num(jr, "run", "sigma_scale", s.sigma_scale);
    s.rtol = get_num(jr, "run", "rtol", s.rtol);
    s.atol = get_num(jr, "run", "atol", s.atol);
    s.which = static_cast<int>(
        get_num(jr, "run", "which", static_cast<double>(s.which)));
    if (jr.contains("risk")) {
      const std::string r = get_str(jr, "run", "risk", "");
      if (r == "half-half") {
        s.regime = RiskRegime::HalfHalf;
        s.params.risk_f = Risk::Half;
        s.params.risk_g = Risk::Half;
      } else if (r == "half-one") {
        s.regime = RiskRegime::HalfOne;
        s.params.risk_f = Risk::Half;
        s.params.risk_g = Risk::One;
      } else {
        bad("run.risk must be 'half-half' or 'half-one'");
      }
    }
    if (jr.contains("response")) {
      const std::string r = get_str(jr, "run", "response", "");
      if (r == "linear") {
        s.response = ResponseForm::Linear;
      } else if (r == "holling") {
        s.response = ResponseForm::Holling;
      } else {
        bad("run.response must be 'linear' or 'holling'");
      }
    }
    if (jr.contains("resource")) {
      const std::string r = get_str(jr, "run", "resource", "");
      if (r == "meanfield") {
        s.resource = ResourceSampling::MeanField;
      } else if (r == "population") {
        s.resource = ResourceSampling::Population;
      } else {
        bad("run.resource must be 'meanfield' or 'population'");
      }
    }
    if (jr.contains("init_sampling")) {
      const std::string r = get_str(jr, "run", "init_sampling", "");
      if (r == "random") {
        s.init_sampling = InitSampling::Random;
      } else if (r == "stratified") {
        s.init_sampling = InitSampling::Stratified;
      } else {
        bad("run.init_sampling must be 'random' or 'stratified'");
      }
    }
  }
}

void apply_config_file(RunSettings& s, const std::string& path) {
  apply_config_text(s, read_file(path));
}

std::string settings_to_json(const RunSettings& s) {
  json j;
  const ModelParams& p = s.params;
  j["params"] = {{"alpha", p.alpha},     {"beta", p.beta},
                 {"gamma", p.gamma},     {"mu", p.mu},
                 {"nu", p.nu},           {"chi", p.chi},
                 {"theta", p.theta},     {"sigma_f", p.sigma_f},
                 {"sigma_g", p.sigma_g}, {"risk_f", risk_name(p.risk_f)},
                 {"risk_g", risk_name(p.risk_g)}, {"s0", p.s0}};
  j["initial"] = {{"m_f0", s.initial.m_f0},
                  {"m_g0", s.initial.m_g0},
                  {"c_f0", s.initial.c_f0},
                  {"c_g0", s.initial.c_g0},
                  {"shape", shape_name(s.initial.shape)}};
  json jr;
  jr["t_end"] = s.t_end;
  jr["seed"] = s.seed;
  jr["agents"] = s.agents;
  jr["eps"] = s.eps;
  jr["cells"] = s.cells;
  jr["x_max_f"] = s.x_max_f;
  jr["x_max_g"] = s.x_max_g;
  jr["cfl"] = s.cfl;
  jr["dt_max"] = s.dt_max;
  jr["risk"] = s.regime == RiskRegime::HalfHalf ? "half-half" : "half-one";
  jr["out_points"] = s.out_points;
  if (!s.out_times.empty()) jr["out_times"] = s.out_times;
  if (!s.histogram_times.empty()) jr["histogram_times"] = s.histogram_times;
  jr["response"] =
      s.response == ResponseForm::Linear ? "linear" : "holling";
  jr["resource"] =
      s.resource == ResourceSampling::MeanField ? "meanfield" : "population";
  jr["init_sampling"] =
      s.init_sampling == InitSampling::Random ? "random" : "stratified";
  jr["with_gini"] = s.with_gini;
  jr["sigma_scale"] = s.sigma_scale;
  jr["rtol"] = s.rtol;
  jr["atol"] = s.atol;
  jr["which"] = s.which;
  j["run"] = jr;
  return j.dump(2);
}

std::string check_settings(const RunSettings& s) {
  ValidationResult vr = validate(s.params);
  const ValidationResult vi = validate_initial(s.initial);
  vr.errors.insert(vr.errors.end(), vi.errors.begin(), vi.errors.end());
  vr.warnings.insert(vr.warnings.end(), vi.warnings.begin(), vi.warnings.end());
  if (!vr.ok()) throw KinlvError(ErrorCode::Validation, describe(vr));
  if (!(s.t_end > 0.0)) {
    throw KinlvError(ErrorCode::Validation, "run.t_end must be positive");
  }
  if (!(s.sigma_scale >= 0.0)) {
    throw KinlvError(ErrorCode::Validation, "run.sigma_scale must be >= 0");
  }
  if (s.out_points < 2) {
    throw KinlvError(ErrorCode::Validation, "run.out_points must be >= 2");
  }
  ValidationResult warn_only;
  warn_only.warnings = vr.warnings;
  return vr.warnings.empty() ? std::string() : describe(warn_only);
}

std::vector<double> resolved_out_times(const RunSettings& s) {
  if (!s.out_times.empty()) return s.out_times;
  std::vector<double> ts(static_cast<std::size_t>(s.out_points));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ts[i] = s.t_end * static_cast<double>(i) /
            static_cast<double>(ts.size() - 1);
  }
  return ts;
}

}  // namespace kinlv
