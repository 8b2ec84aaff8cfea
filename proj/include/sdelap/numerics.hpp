#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdelap {

// Time-indexed matrix-valued samples on a strictly increasing grid.
// Evaluation between nodes is linear interpolation; evaluation outside the
// grid clamps to the nearest end.
class CurveTable {
 public:
  CurveTable() = default;
  CurveTable(std::vector<double> times, std::vector<Eigen::MatrixXd> values);

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  double t_front() const { return times_.front(); }
  double t_back() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  const Eigen::MatrixXd& value(std::size_t i) const { return values_[i]; }
  Eigen::MatrixXd& value(std::size_t i) { return values_[i]; }

  Eigen::MatrixXd at(double t) const;
  double scalar_at(double t) const;  // requires 1x1 samples

 private:
  std::vector<double> times_;
  std::vector<Eigen::MatrixXd> values_;
};

using OdeRhs = std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)>;

// Classical fixed-step 4th order Runge-Kutta with dense output at every step.
// t1 < t0 integrates backward; samples are always returned in ascending time
// order. Throws std::runtime_error naming the failure time if the right-hand
// side or the state stops being finite.
CurveTable rk4_integrate(const OdeRhs& rhs, const Eigen::MatrixXd& y0,
                         double t0, double t1, int steps);

struct ShootResult {
  Eigen::VectorXd parameter;
  Eigen::VectorXd residual;
  bool converged = false;
  int iterations = 0;
  std::string message;
};

using ShootMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Root finding for two-point boundary problems: secant iteration for scalar
// parameters, damped Newton with a forward-difference Jacobian otherwise.
// Success means |residual| <= tol. Divergence (residual growing over five
// consecutive iterations) and iteration exhaustion return the best iterate
// flagged as not converged.
ShootResult secant_shoot(const ShootMap& map, const Eigen::VectorXd& p0,
                         const Eigen::VectorXd& p1, double tol, int max_iter);

// Composite trapezoid integral of a curve of 1x1 samples over its time span.
double quad_trapezoid(const CurveTable& curve);

// Symmetric banded matrix in packed lower storage:
// band d holds A(i+d, i) for i = 0 .. order-d-1, d = 0 .. bandwidth.
class BandedSymMatrix {
 public:
  BandedSymMatrix(int order, int bandwidth);

  int order() const { return order_; }
  int bandwidth() const { return bandwidth_; }

  double& at(int row, int col);
  double at(int row, int col) const;

  Eigen::MatrixXd dense() const;

 private:
  int order_ = 0;
  int bandwidth_ = 0;
  std::vector<double> bands_;  // bands_[d * order_ + i]
  friend class BandedCholesky;
};

struct NonPositivePivotError : std::runtime_error {
  NonPositivePivotError(int index, double pivot)
      : std::runtime_error("banded factorization: non-positive pivot " +
                           std::to_string(pivot) + " at index " +
                           std::to_string(index)),
        pivot_index(index),
        pivot_value(pivot) {}
  int pivot_index;
  double pivot_value;
};

// In-band Cholesky factorization of a positive definite banded matrix.
// Throws NonPositivePivotError (with the pivot index) when the matrix is
// not positive definite. Cost is linear in the order.
class BandedCholesky {
 public:
  explicit BandedCholesky(const BandedSymMatrix& m);

  double logdet() const;  // log-determinant of the factored matrix
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  int order_;
  int bandwidth_;
  std::vector<double> bands_;  // Cholesky factor, same packing
};

// log|M| for a positive definite banded symmetric matrix.
double banded_logdet(const BandedSymMatrix& m);

}  // namespace sdelap
