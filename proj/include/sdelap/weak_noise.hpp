#pragma once

#include <Eigen/Dense>
#include <functional>

namespace sdelap {

// Finite-dimensional pushforward X = map(Z) of a Gaussian Z ~ N(0, sigma),
// with map(0) = 0 and surjective Jacobian at 0. Used to compare the Laplace
// approximation of the density of X at 0 with its weak-noise limit.
struct PushforwardInstance {
  int n = 1;  // dimension of Z
  int m = 1;  // dimension of X, m <= n
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map;
  Eigen::MatrixXd sigma;  // n x n positive definite
  Eigen::MatrixXd jac0;   // m x n Jacobian of map at 0
};

// |2 pi H Sigma H^T|^{-1/2}, the weak-noise (delta method) density at 0.
double weak_noise_density(const PushforwardInstance& inst);

// Laplace approximation of the mollified integral at bandwidth delta:
// (2 pi)^{-m/2} prod_i (delta^2 + s_i^2)^{-1/2} over the nonzero singular
// values s_i of H Sigma^{1/2}.
double laplace_density_delta(const PushforwardInstance& inst, double delta);

struct QuadratureGrid {
  double half_width_sds = 6.0;  // grid half-width in marginal standard deviations
  int points_per_dim = 0;       // 0 picks a resolution from delta
};

// Direct tensor-grid quadrature of int f_Z(z) phi(map(z)/delta) delta^{-m} dz,
// n <= 3. Throws when the Richardson estimate of the quadrature error
// exceeds 1e-4 of the value.
double brute_force_density(const PushforwardInstance& inst, double delta,
                           const QuadratureGrid& grid = {});

}  // namespace sdelap
