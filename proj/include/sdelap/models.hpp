#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace sdelap {

using StateFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using MatrixFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
using MatrixListFn =
    std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)>;

// SDE model in the Stratonovich convention:
//   dX = drift(X) dt + noise(X) o dB,   X in R^dim.
// noise_jacobians(x)[k] is the Jacobian of the k-th noise column, and
// drift_jacobian(x) the Jacobian of the drift. All callables must be pure.
struct SdeModel {
  int dim = 1;
  std::string name;
  StateFn drift;
  MatrixFn noise;
  MatrixFn drift_jacobian;
  MatrixListFn noise_jacobians;
  // representative domain points used by the validation routine
  std::vector<Eigen::VectorXd> sample_states;
};

// Ito drift of the model: f_I(x) = f(x) + 1/2 sum_k (dg_k g_k)(x).
Eigen::VectorXd ito_drift(const SdeModel& model, const Eigen::VectorXd& x);

// Converts an Ito drift callable to the Stratonovich drift for the given
// noise field. Composing with ito_drift is the identity on drifts.
StateFn ito_to_stratonovich(const StateFn& ito_drift_fn, const MatrixFn& noise,
                            const MatrixListFn& noise_jacobians);

// Builds a Stratonovich model from an Ito-specified one. The Stratonovich
// drift Jacobian is produced by central differences of the converted drift.
SdeModel model_from_ito(int dim, std::string name, const StateFn& ito_drift_fn,
                        const MatrixFn& noise,
                        const MatrixListFn& noise_jacobians);

// Smooth invertible change of coordinates z = forward(x). `hessians`, when
// set, supplies the second derivatives of forward (one n-by-n matrix per
// output component) and enables exact chain-rule derivatives of the
// transformed model; otherwise central differences are used.
struct DiffeoTransform {
  StateFn forward;
  StateFn inverse;
  MatrixFn jacobian;
  MatrixListFn hessians;  // optional
};

// Model of Z = forward(X) under Stratonovich calculus.
SdeModel pushforward_model(const SdeModel& model, const DiffeoTransform& t);

struct CirParams {
  double lambda = 1.0;
  double xi = 1.0;
  double gamma = 0.5;
};

// Builtin benchmark models (all Stratonovich internally).
SdeModel make_gbm(double r, double sigma);
SdeModel make_cir(const CirParams& p);
SdeModel make_ou(double rate, double mean, double sigma);
SdeModel make_double_well(double sigma);
SdeModel make_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                     const Eigen::MatrixXd& G);
SdeModel make_linear2d_default();

// Lookup by name: "gbm", "cir", "ou", "doublewell", "linear2d".
// Unknown names or missing parameters throw std::invalid_argument.
SdeModel model_by_name(const std::string& name,
                       const std::map<std::string, double>& params);

// Exact reference densities.
double gbm_exact_density(double r, double sigma, double x0, double T,
                         double xT);
double cir_exact_density(double lambda, double xi, double gamma, double x0,
                         double T, double xT);
double linear_exact_density(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                            const Eigen::MatrixXd& G,
                            const Eigen::VectorXd& x0, double T,
                            const Eigen::VectorXd& xT);

// Exact density for a named builtin when one exists (gbm, cir, ou, linear2d);
// returns NaN for models without a closed form.
double exact_density_by_name(const std::string& name,
                             const std::map<std::string, double>& params,
                             const Eigen::VectorXd& x0, double T,
                             const Eigen::VectorXd& xT);

struct ModelValidation {
  bool ok = false;
  double max_drift_jacobian_error = 0;
  double max_noise_jacobian_error = 0;
  double worst_noise_condition = 0;
  std::string message;
};

// Self-consistency check: analytic Jacobians against central finite
// differences (relative tolerance 1e-5) and invertibility of the noise
// matrix at the given states (model.sample_states when none are passed).
ModelValidation validate_model(const SdeModel& model,
                               const std::vector<Eigen::VectorXd>& states = {});

struct TransformValidation {
  bool ok = false;
  double max_roundtrip_error = 0;
  std::string message;
};

TransformValidation validate_transform(const DiffeoTransform& t,
                                       const std::vector<Eigen::VectorXd>& states);

namespace detail {
// log I_nu(z) for nu > -1, z > 0, via the ascending series in log space;
// robust for large order and argument.
double log_bessel_i(double nu, double z);
}  // namespace detail

}  // namespace sdelap
