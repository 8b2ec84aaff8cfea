#pragma once

#include <optional>

#include "sdelap/models.hpp"
#include "sdelap/numerics.hpp"

namespace sdelap {

// Minimum-effort bridge between two states: the control U steers
//   dx/dt = f(x) + g(x) U
// from x0 to xT at cost int 1/2 |U|^2 dt. The solution curves live on a
// uniform grid with linear interpolation.
struct MppSolution {
  CurveTable x_curve;       // state
  CurveTable lambda_curve;  // co-state
  CurveTable u_curve;       // optimal control
  double action = 0;        // int 1/2 |U|^2 dt
  double endpoint_residual = 0;
  double hamiltonian_drift = 0;  // max |H(t) - H(0)| over the grid
  Eigen::VectorXd lambda0;
  Eigen::VectorXd x_end;
  bool converged = false;
  std::string message;
};

struct MppOptions {
  double tol = 1e-6;         // endpoint residual tolerance for shooting
  int max_iter = 60;
  int steps_per_unit = 1000;  // storage grid resolution
  // optional initial co-state guesses for shooting (defaults described in
  // solve_mpp)
  std::vector<Eigen::VectorXd> lambda0_guesses;
};

// H(x, lambda) = lambda^T f(x) - 1/2 |g(x)^T lambda|^2.
double hamiltonian(const SdeModel& model, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lam);

// Minimizing control mu(x, lambda) = -g(x)^T lambda.
Eigen::VectorXd control_law(const SdeModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& lam);

// K(x, u, lambda) = lambda^T (f + g u) + 1/2 |u|^2.
double pre_hamiltonian(const SdeModel& model, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& lam);

// Canonical equations: dx = dH/dlambda, dlambda = -dH/dx, assembled from the
// model's analytic first derivatives.
void canonical_rhs(const SdeModel& model, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lam, Eigen::VectorXd& dx,
                   Eigen::VectorXd& dlam);

// Two-point boundary solve: integrates the canonical equations forward from
// (x0, lambda0) and shoots on lambda0 until the endpoint matches xT.
// Default guesses are lambda0 = 0 and, for scalar models, a unit co-state
// opposing the sign of (xT - noise-free endpoint). Non-convergence returns
// the best iterate flagged, not an exception.
MppSolution solve_mpp(const SdeModel& model, const Eigen::VectorXd& x0,
                      const Eigen::VectorXd& xT, double T,
                      const MppOptions& opts = {});

// Integrates the canonical equations from a known initial co-state; the
// achieved endpoint is reported in x_end (no shooting).
MppSolution solve_mpp_from_costate(const SdeModel& model,
                                   const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& lambda0, double T,
                                   const MppOptions& opts = {});

}  // namespace sdelap
