#include "sdelap/mpp.hpp"

#include <cmath>

namespace sdelap {

double hamiltonian(const SdeModel& model, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lam) {
  const Eigen::VectorXd gtl = model.noise(x).transpose() * lam;
  return lam.dot(model.drift(x)) - 0.5 * gtl.squaredNorm();
}

Eigen::VectorXd control_law(const SdeModel& model, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& lam) {
  return -model.noise(x).transpose() * lam;
}

double pre_hamiltonian(const SdeModel& model, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, const Eigen::VectorXd& lam) {
  return lam.dot(model.drift(x) + model.noise(x) * u) + 0.5 * u.squaredNorm();
}

void canonical_rhs(const SdeModel& model, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lam, Eigen::VectorXd& dx,
                   Eigen::VectorXd& dlam) {
  const Eigen::MatrixXd g = model.noise(x);
  const Eigen::VectorXd gtl = g.transpose() * lam;
  dx = model.drift(x) - g * gtl;
  // dH/dx = df^T lam - sum_k (g^T lam)_k dg_k^T lam
  Eigen::VectorXd hx = model.drift_jacobian(x).transpose() * lam;
  const auto dg = model.noise_jacobians(x);
  for (int k = 0; k < model.dim; ++k)
    hx -= gtl(k) * (dg[k].transpose() * lam);
  dlam = -hx;
}

namespace {

struct CanonicalRun {
  CurveTable curve;  // stacked (x; lambda) as a (2n x 1) column per sample
  Eigen::VectorXd x_end;
};

CanonicalRun integrate_canonical(const SdeModel& model,
                                 const Eigen::VectorXd& x0,
                                 const Eigen::VectorXd& lam0, double T,
                                 int steps) {
  const int n = model.dim;
  Eigen::MatrixXd y0(2 * n, 1);
  y0.topRows(n) = x0;
  y0.bottomRows(n) = lam0;
  const auto rhs = [&model, n](double, const Eigen::MatrixXd& y) {
    Eigen::VectorXd dx(n), dlam(n);
    canonical_rhs(model, y.topRows(n), y.bottomRows(n), dx, dlam);
    Eigen::MatrixXd dy(2 * n, 1);
    dy.topRows(n) = dx;
    dy.bottomRows(n) = dlam;
    return dy;
  };
  CanonicalRun run;
  run.curve = rk4_integrate(rhs, y0, 0.0, T, steps);
  run.x_end = run.curve.value(run.curve.size() - 1).topRows(n);
  return run;
}

MppSolution assemble_solution(const SdeModel& model, const CanonicalRun& run,
                              const Eigen::VectorXd& lam0) {
  const int n = model.dim;
  MppSolution sol;
  const std::size_t m = run.curve.size();
  std::vector<double> times = run.curve.times();
  std::vector<Eigen::MatrixXd> xs(m), ls(m), us(m), usq(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::VectorXd x = run.curve.value(i).topRows(n);
    const Eigen::VectorXd lam = run.curve.value(i).bottomRows(n);
    const Eigen::VectorXd u = control_law(model, x, lam);
    xs[i] = x;
    ls[i] = lam;
    us[i] = u;
    usq[i] = Eigen::MatrixXd::Constant(1, 1, 0.5 * u.squaredNorm());
  }
  sol.x_curve = CurveTable(times, std::move(xs));
  sol.lambda_curve = CurveTable(times, std::move(ls));
  sol.u_curve = CurveTable(times, std::move(us));
  sol.action = quad_trapezoid(CurveTable(times, std::move(usq)));
  sol.lambda0 = lam0;
  sol.x_end = run.x_end;

  const double h0 = hamiltonian(model, sol.x_curve.value(0),
                                sol.lambda_curve.value(0));
  double drift = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double hi = hamiltonian(model, sol.x_curve.value(i),
                                  sol.lambda_curve.value(i));
    drift = std::max(drift, std::fabs(hi - h0));
  }
  sol.hamiltonian_drift = drift;
  return sol;
}

}  // namespace

MppSolution solve_mpp_from_costate(const SdeModel& model,
                                   const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& lambda0, double T,
                                   const MppOptions& opts) {
  const int steps = std::max(1, (int)std::lround(opts.steps_per_unit * T));
  const CanonicalRun run = integrate_canonical(model, x0, lambda0, T, steps);
  MppSolution sol = assemble_solution(model, run, lambda0);
  sol.endpoint_residual = 0.0;
  sol.converged = true;
  return sol;
}

MppSolution solve_mpp(const SdeModel& model, const Eigen::VectorXd& x0,
                      const Eigen::VectorXd& xT, double T,
                      const MppOptions& opts) {
  const int n = model.dim;
  const int steps = std::max(1, (int)std::lround(opts.steps_per_unit * T));

  const ShootMap endpoint_map = [&](const Eigen::VectorXd& lam0) {
    try {
      return Eigen::VectorXd(
          integrate_canonical(model, x0, lam0, T, steps).x_end - xT);
    } catch (const std::exception&) {
      // finite-time escape for this trial co-state
      return Eigen::VectorXd(Eigen::VectorXd::Constant(
          n, std::numeric_limits<double>::quiet_NaN()));
    }
  };

  Eigen::VectorXd guess0 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd guess1;
  if (!opts.lambda0_guesses.empty()) {
    guess0 = opts.lambda0_guesses[0];
    guess1 = opts.lambda0_guesses.size() > 1 ? opts.lambda0_guesses[1]
                                             : Eigen::VectorXd();
  }
  if (guess1.size() == 0) {
    if (n == 1) {
      // noise-free endpoint fixes the sign of the second guess
      const auto drift_rhs = [&model](double, const Eigen::MatrixXd& y) {
        return Eigen::MatrixXd(model.drift(y.col(0)));
      };
      const CurveTable free_run =
          rk4_integrate(drift_rhs, x0, 0.0, T, steps);
      const double x_free = free_run.value(free_run.size() - 1)(0, 0);
      const double gap = xT(0) - x_free;
      const double sgn = gap > 0 ? 1.0 : (gap < 0 ? -1.0 : 0.0);
      guess1 = Eigen::VectorXd::Constant(1, guess0(0) - sgn * 1.0);
      if (sgn == 0.0) guess1(0) = guess0(0) + 1.0;  // degenerate; first guess wins
    } else {
      guess1 = guess0;  // vector case uses Newton from guess0 only
    }
  }

  const ShootResult shot =
      secant_shoot(endpoint_map, guess0, guess1, opts.tol, opts.max_iter);

  CanonicalRun run;
  try {
    run = integrate_canonical(model, x0, shot.parameter, T, steps);
  } catch (const std::exception& e) {
    MppSolution sol;
    sol.lambda0 = shot.parameter;
    sol.converged = false;
    sol.endpoint_residual = std::numeric_limits<double>::quiet_NaN();
    sol.message = std::string("canonical integration failed: ") + e.what();
    return sol;
  }
  MppSolution sol = assemble_solution(model, run, shot.parameter);
  sol.endpoint_residual = (run.x_end - xT).norm();
  sol.converged = shot.converged;
  if (!shot.converged)
    sol.message = "shooting did not converge: " + shot.message;
  const double h0 =
      std::fabs(hamiltonian(model, x0, shot.parameter));
  if (sol.hamiltonian_drift > 1e-4 * (1.0 + h0)) {
    sol.converged = false;
    sol.message += (sol.message.empty() ? "" : "; ");
    sol.message += "hamiltonian drift above tolerance (grid too coarse)";
  }
  return sol;
}

}  // namespace sdelap
