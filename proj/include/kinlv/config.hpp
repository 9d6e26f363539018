#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinlv/mc.hpp"
#include "kinlv/ode.hpp"
#include "kinlv/params.hpp"

namespace kinlv {

// Resolved run settings: defaults, overlaid by the config file (JSON with
// top-level keys "params", "initial", "run"; unknown keys are hard errors),
// overlaid by command-line flags.
struct RunSettings {
  ModelParams params;
  InitialConditions initial;

  double t_end = 20.0;
  std::uint64_t seed = 1;
  std::size_t agents = 100000;
  double eps = 0.01;
  std::size_t cells = 1024;
  double x_max_f = 0.0;  // 0: sized from the mean orbit
  double x_max_g = 0.0;
  double cfl = 0.5;
  double dt_max = 0.01;
  RiskRegime regime = RiskRegime::HalfHalf;
  int out_points = 201;
  std::vector<double> out_times;  // overrides out_points when non-empty
  std::vector<double> histogram_times;
  ResponseForm response = ResponseForm::Linear;
  ResourceSampling resource = ResourceSampling::MeanField;
  InitSampling init_sampling = InitSampling::Random;
  bool with_gini = true;
  double sigma_scale = 1.0;
  double rtol = 1e-9;
  double atol = 1e-11;
  int which = 1;  // figure selector
};

// Parses a config document and overlays it onto s. Unknown keys, malformed
// values, and enum strings outside their domain throw KinlvError(Validation);
// unreadable files throw KinlvError(Io).
void apply_config_text(RunSettings& s, const std::string& json_text);
void apply_config_file(RunSettings& s, const std::string& path);

// Serializes the fully resolved settings (the manifest's config snapshot).
std::string settings_to_json(const RunSettings& s);

// Validates params and initial data; throws KinlvError(Validation) on any
// hard error and returns the human-readable warning text (possibly empty).
std::string check_settings(const RunSettings& s);

// Uniform output grid on [0, t_end] honoring explicit out_times.
std::vector<double> resolved_out_times(const RunSettings& s);

}  // namespace kinlv
