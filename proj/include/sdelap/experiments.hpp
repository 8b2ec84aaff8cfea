#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sdelap {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat experiment configuration; see README for the JSON schema. Defaults
// are filled on load and the effective configuration is echoed into the CSV
// header for reproducibility.
struct ExperimentConfig {
  std::string model = "cir";
  std::map<std::string, double> params;
  std::vector<double> x0{0.75};
  std::vector<double> xT{1.5};
  double T = 1.0;
  std::optional<double> lambda0;
  int steps_per_unit = 1000;
  double shoot_tol = 1e-6;
  double qT = 0.0;  // scalar terminal Hessian, qT * I
  std::vector<std::string> schemes{"euler-stratonovich", "strang-cir"};
  std::vector<double> h_list{0.2, 0.1, 0.05, 0.025, 0.0125};
  std::vector<double> gamma_list{0.05, 0.0736, 0.108, 0.158, 0.233, 0.342, 0.5};
  // the quadratic T regime sits below the mean-reversion time
  std::vector<double> T_list{0.04, 0.0587, 0.0861, 0.1264, 0.1855, 0.2722, 0.4};
  // weak-noise check
  int instances = 50;
  std::vector<double> deltas{0.03, 0.01, 0.003, 0.001};
  unsigned seed = 20250801;
  int jobs = 1;
  std::string out;  // CSV path; empty writes no file

  std::string to_json() const;  // canonical (sorted keys) serialization
};

ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_file(const std::string& path);

// Study outcome: CSV text (fixed, versioned columns), per-key fitted slopes,
// a human-readable summary, and the process exit code (0 ok, 2 solver
// failure).
struct StudyResult {
  std::string csv;
  std::map<std::string, double> slopes;
  std::string summary;
  int exit_code = 0;
};

StudyResult run_density(const ExperimentConfig& config);
StudyResult run_order_study(const ExperimentConfig& config);
StudyResult run_accuracy_study(const ExperimentConfig& config);
StudyResult run_weak_noise_check(const ExperimentConfig& config);
StudyResult run_validate_model(const ExperimentConfig& config);

// Ordinary least squares slope of log y against log x; needs at least three
// positive points.
double fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace sdelap
