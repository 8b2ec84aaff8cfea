#pragma once

#include "sdelap/mpp.hpp"

namespace sdelap {

struct HamiltonianCurvature {
  Eigen::MatrixXd xx;      // d2H/dx2
  Eigen::MatrixXd xlam;    // d2H/dx dlambda
  Eigen::MatrixXd lamlam;  // d2H/dlambda2
};

// Second derivatives of the Hamiltonian at (x, lambda). Scalar models use
// the closed forms H_xx = lam f'' - 1/2 lam^2 (g^2)'', H_xlam = f' -
// lam (g^2)', H_lamlam = -g^2, with f'' and (g^2)'' from central differences
// of the analytic first derivatives; multivariate models difference the
// canonical equations.
HamiltonianCurvature hamiltonian_second_derivs(const SdeModel& model,
                                               const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& lam);

struct RiccatiCurve {
  CurveTable q;              // symmetric n x n samples on [0, T]
  Eigen::MatrixXd terminal;  // Q_T
};

struct RiccatiEscapeError : std::runtime_error {
  explicit RiccatiEscapeError(double t)
      : std::runtime_error("riccati solution escaped (norm > 1e8) at t=" +
                           std::to_string(t)),
        time(t) {}
  double time;
};

// Backward solve of dQ/dt + H_xx + H_xlam Q + Q H_xlam^T + Q H_lamlam Q = 0
// from Q_T = qT, with coefficients along the bridge. Throws
// RiccatiEscapeError on finite escape (conjugate-point diagnostic).
RiccatiCurve solve_riccati(const SdeModel& model, const MppSolution& mpp,
                           const Eigen::MatrixXd& qT);

struct LyapunovCurve {
  CurveTable sigma;  // n x n covariance samples, Sigma_0 = 0
};

// Forward covariance of the linearization around the bridge:
// dSigma/dt = A Sigma + Sigma A^T + G G^T, Sigma_0 = 0, with G = g(x(t)) and
// A the Jacobian of the controlled drift x -> f - g g^T (lambda + Q (x - xbar)).
LyapunovCurve solve_lyapunov(const SdeModel& model, const MppSolution& mpp,
                             const RiccatiCurve& q);

struct ExponentTerms {
  double action2 = 0;         // int |U|^2 dt
  double trace_term = 0;      // int tr(g^T Q g) dt
  double gradnoise_term = 0;  // int lambda . sum_k dg_k g_k dt
};

ExponentTerms exponent_terms(const SdeModel& model, const MppSolution& mpp,
                             const RiccatiCurve& q);

// Result record shared by the continuous and discrete density pipelines.
struct DensityEstimate {
  double value = 0;
  double log_value = -std::numeric_limits<double>::infinity();

  // continuous pipeline: exponent breakdown and |2 pi Sigma_T|
  double action_term = 0;          // int 1/2 |U|^2 dt
  double riccati_trace_term = 0;
  double gradient_noise_term = 0;
  double sigma_logdet = 0;         // log |2 pi Sigma_T|

  // discrete pipeline
  double psi_value = 0;
  double hessian_logdet = 0;
  double bridge_grad_norm = 0;

  // diagnostics
  double shooting_residual = 0;
  double hamiltonian_drift = 0;
  Eigen::VectorXd x_end;
  bool converged = false;
  std::string stage;  // failing stage when not converged
  std::string message;
};

struct LaplaceOptions {
  int steps_per_unit = 1000;
  double shoot_tol = 1e-6;
  int max_iter = 60;
  Eigen::MatrixXd qT;  // empty means zero terminal Hessian
  std::vector<Eigen::VectorXd> lambda0_guesses;
};

// Full pipeline: bridge by shooting, backward Riccati, forward Lyapunov,
// exponent quadratures, density assembly. Failures come back as flagged
// estimates with the stage recorded.
DensityEstimate continuous_laplace_density(const SdeModel& model,
                                           const Eigen::VectorXd& x0,
                                           const Eigen::VectorXd& xT, double T,
                                           const LaplaceOptions& opts = {});

// Same, starting from an already-solved bridge.
DensityEstimate continuous_laplace_density(const SdeModel& model,
                                           const MppSolution& mpp,
                                           const LaplaceOptions& opts = {});

}  // namespace sdelap
