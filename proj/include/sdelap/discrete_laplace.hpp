#pragma once

#include "sdelap/continuous_laplace.hpp"
#include "sdelap/models.hpp"
#include "sdelap/numerics.hpp"

namespace sdelap {

// One-step discretization scheme. `increment` recovers the Brownian increment
// b that carries x to y over a step h, `step_logdensity` is the log of the
// short-time transition density at y, and `forward` applies the step for a
// given increment (used by round-trip checks and simulation-style tests).
struct Scheme {
  std::string name;
  int dim = 1;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& y, double h)>
      increment;
  std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       double h)>
      step_logdensity;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& b, double h)>
      forward;
};

// Implicit centered Euler-type step for a Stratonovich model:
//   y - x = 1/2 (f(x)+f(y)) h + 1/2 (g(x)+g(y)) b.
Eigen::VectorXd euler_increment(const SdeModel& model, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& y, double h);
double euler_step_logdensity(const SdeModel& model, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y, double h);

// Strang composition for the CIR model: half-step of the Stratonovich drift
// flow, exact square-root noise flow, half-step of the drift flow.
double strang_increment_cir(const CirParams& p, double x, double y, double h);
double strang_step_logdensity_cir(const CirParams& p, double x, double y,
                                  double h);

Scheme make_euler_stratonovich_scheme(const SdeModel& model);
Scheme make_strang_cir_scheme(const CirParams& p);

// Scheme lookup: "euler-stratonovich" (any model) or "strang-cir".
Scheme scheme_by_name(const std::string& name, const SdeModel& model,
                      const std::map<std::string, double>& params);

// Joint log-density of the scheme increments along a discretized path:
// psi = sum_i [ log phi(b_i / sqrt(h)) - (n/2) log h ].
double psi(const Scheme& scheme, const std::vector<Eigen::VectorXd>& states,
           double h);

struct DiscretePath {
  std::vector<Eigen::VectorXd> states;      // x_0 .. x_N, endpoints fixed
  std::vector<Eigen::VectorXd> increments;  // b_1 .. b_N
  double h = 0;
  double psi_value = 0;
  double grad_norm = 0;  // gradient of psi over interior states
  bool converged = false;
  bool saddle = false;
  int iterations = 0;
  std::string message;
};

enum class BridgeInit { Linear, Mpp };

struct BridgeOptions {
  int max_iter = 80;
  double grad_tol_per_state = 1e-8;  // convergence at grad_norm <= tol * N
  // 4th-order central stencils; the steps balance cancellation noise in the
  // log-determinant against truncation of the curvature
  double fd_grad_step = 1e-4;
  double fd_hess_step = 2e-3;
  int max_halvings = 30;
  int mpp_steps_per_unit = 1000;  // for BridgeInit::Mpp
};

// Maximizes psi over the interior states by damped Newton steps with the
// banded Hessian. Gradients are central finite differences of the local psi
// terms (each x_i enters only b_i and b_{i+1}).
DiscretePath optimize_bridge(const Scheme& scheme, const SdeModel& model,
                             const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& xT, double T, int N,
                             BridgeInit init = BridgeInit::Linear,
                             const BridgeOptions& opts = {});

// Hessian of -psi over the interior states; block tridiagonal with
// bandwidth 2*dim - 1.
BandedSymMatrix psi_hessian(const Scheme& scheme, const DiscretePath& path,
                            const BridgeOptions& opts = {});

// Laplace approximation of the N-step transition density:
// |H/(2 pi)|^(-1/2) exp(psi*) times the per-step corrections beyond the
// Gaussian increment core, i.e. exp of the summed scheme step log-densities.
DensityEstimate discrete_laplace_density(const Scheme& scheme,
                                         const SdeModel& model,
                                         const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& xT, double T,
                                         int N,
                                         BridgeInit init = BridgeInit::Linear,
                                         const BridgeOptions& opts = {});

}  // namespace sdelap
