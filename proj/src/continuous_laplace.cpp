#include "sdelap/continuous_laplace.hpp"

#include <cmath>

namespace sdelap {

namespace {

// scalar closed forms; derivative steps on the analytic first derivatives
HamiltonianCurvature scalar_curvature(const SdeModel& model, double x,
                                      double lam) {
  const auto f1 = [&](double s) {
    return model.drift_jacobian(Eigen::VectorXd::Constant(1, s))(0, 0);
  };
  const auto gsq1 = [&](double s) {
    const Eigen::VectorXd xs = Eigen::VectorXd::Constant(1, s);
    const double g = model.noise(xs)(0, 0);
    const double dg = model.noise_jacobians(xs)[0](0, 0);
    return 2.0 * g * dg;  // (g^2)'
  };
  const double step = 1e-5 * (1.0 + std::fabs(x));
  const double f2 = (f1(x + step) - f1(x - step)) / (2.0 * step);
  const double gsq2 = (gsq1(x + step) - gsq1(x - step)) / (2.0 * step);
  const Eigen::VectorXd xv = Eigen::VectorXd::Constant(1, x);
  const double g = model.noise(xv)(0, 0);

  HamiltonianCurvature c;
  c.xx = Eigen::MatrixXd::Constant(1, 1, lam * f2 - 0.5 * lam * lam * gsq2);
  c.xlam = Eigen::MatrixXd::Constant(1, 1, f1(x) - lam * gsq1(x));
  c.lamlam = Eigen::MatrixXd::Constant(1, 1, -g * g);
  return c;
}

HamiltonianCurvature vector_curvature(const SdeModel& model,
                                      const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& lam) {
  const int n = model.dim;
  HamiltonianCurvature c;
  c.xx.resize(n, n);
  c.xlam.resize(n, n);
  c.lamlam.resize(n, n);
  Eigen::VectorXd dxp(n), dlp(n), dxm(n), dlm(n);
  for (int j = 0; j < n; ++j) {
    {
      const double step = 1e-5 * (1.0 + std::fabs(x(j)));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += step;
      xm(j) -= step;
      canonical_rhs(model, xp, lam, dxp, dlp);
      canonical_rhs(model, xm, lam, dxm, dlm);
      c.xx.col(j) = -(dlp - dlm) / (2.0 * step);  // H_x = -dlambda
    }
    {
      const double step = 1e-5 * (1.0 + std::fabs(lam(j)));
      Eigen::VectorXd lp = lam, lm = lam;
      lp(j) += step;
      lm(j) -= step;
      canonical_rhs(model, x, lp, dxp, dlp);
      canonical_rhs(model, x, lm, dxm, dlm);
      c.lamlam.col(j) = (dxp - dxm) / (2.0 * step);  // H_lam = dx
      c.xlam.col(j) = -(dlp - dlm) / (2.0 * step);
    }
  }
  c.xx = (0.5 * (c.xx + c.xx.transpose())).eval();
  c.lamlam = (0.5 * (c.lamlam + c.lamlam.transpose())).eval();
  return c;
}

}  // namespace

HamiltonianCurvature hamiltonian_second_derivs(const SdeModel& model,
                                               const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& lam) {
  if (model.dim == 1) return scalar_curvature(model, x(0), lam(0));
  return vector_curvature(model, x, lam);
}

RiccatiCurve solve_riccati(const SdeModel& model, const MppSolution& mpp,
                           const Eigen::MatrixXd& qT) {
  const int n = model.dim;
  const double T = mpp.x_curve.t_back();
  const int steps = (int)mpp.x_curve.size() - 1;

  const auto rhs = [&](double t, const Eigen::MatrixXd& qraw) {
    if (!qraw.allFinite() || qraw.cwiseAbs().maxCoeff() > 1e8)
      throw RiccatiEscapeError(t);
    const Eigen::MatrixXd q = 0.5 * (qraw + qraw.transpose());
    const Eigen::VectorXd x = mpp.x_curve.at(t);
    const Eigen::VectorXd lam = mpp.lambda_curve.at(t);
    const HamiltonianCurvature c = hamiltonian_second_derivs(model, x, lam);
    return Eigen::MatrixXd(-(c.xx + c.xlam * q + q * c.xlam.transpose() +
                             q * c.lamlam * q));
  };

  CurveTable sol = rk4_integrate(rhs, qT, T, 0.0, std::max(1, steps));
  for (std::size_t i = 0; i < sol.size(); ++i)
    sol.value(i) = 0.5 * (sol.value(i) + sol.value(i).transpose()).eval();

  RiccatiCurve out;
  out.q = std::move(sol);
  out.terminal = qT.size() ? qT : Eigen::MatrixXd::Zero(n, n);
  return out;
}

LyapunovCurve solve_lyapunov(const SdeModel& model, const MppSolution& mpp,
                             const RiccatiCurve& q) {
  const int n = model.dim;
  const double T = mpp.x_curve.t_back();
  const int steps = (int)mpp.x_curve.size() - 1;

  const auto drift_jacobian_along = [&](double t) -> Eigen::MatrixXd {
    const Eigen::VectorXd x = mpp.x_curve.at(t);
    const Eigen::VectorXd lam = mpp.lambda_curve.at(t);
    const Eigen::MatrixXd qt = q.q.at(t);
    const Eigen::MatrixXd g = model.noise(x);
    const auto dg = model.noise_jacobians(x);
    const Eigen::VectorXd gtl = g.transpose() * lam;
    // A = df - sum_k [ (g^T lam)_k dg_k + g_k (lam^T dg_k) ] - g g^T Q
    Eigen::MatrixXd a = model.drift_jacobian(x);
    for (int k = 0; k < n; ++k) {
      a -= gtl(k) * dg[k];
      a -= g.col(k) * (lam.transpose() * dg[k]);
    }
    a -= g * g.transpose() * qt;
    return a;
  };

  const auto rhs = [&](double t, const Eigen::MatrixXd& sraw) {
    const Eigen::MatrixXd s = 0.5 * (sraw + sraw.transpose());
    const Eigen::MatrixXd a = drift_jacobian_along(t);
    const Eigen::MatrixXd g = model.noise(mpp.x_curve.at(t));
    return Eigen::MatrixXd(a * s + s * a.transpose() + g * g.transpose());
  };

  CurveTable sol = rk4_integrate(rhs, Eigen::MatrixXd::Zero(n, n), 0.0, T,
                                 std::max(1, steps));
  for (std::size_t i = 0; i < sol.size(); ++i)
    sol.value(i) = 0.5 * (sol.value(i) + sol.value(i).transpose()).eval();

  LyapunovCurve out;
  out.sigma = std::move(sol);
  return out;
}

ExponentTerms exponent_terms(const SdeModel& model, const MppSolution& mpp,
                             const RiccatiCurve& q) {
  const std::size_t m = mpp.x_curve.size();
  std::vector<double> times = mpp.x_curve.times();
  std::vector<Eigen::MatrixXd> usq(m), tr(m), gn(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::VectorXd x = mpp.x_curve.value(i);
    const Eigen::VectorXd lam = mpp.lambda_curve.value(i);
    const Eigen::VectorXd u = mpp.u_curve.value(i);
    const Eigen::MatrixXd g = model.noise(x);
    const Eigen::MatrixXd qt = q.q.at(times[i]);
    const auto dg = model.noise_jacobians(x);
    Eigen::VectorXd corr = Eigen::VectorXd::Zero(model.dim);
    for (int k = 0; k < model.dim; ++k) corr += dg[k] * g.col(k);
    usq[i] = Eigen::MatrixXd::Constant(1, 1, u.squaredNorm());
    tr[i] = Eigen::MatrixXd::Constant(
        1, 1, (g.transpose() * qt * g).trace());
    gn[i] = Eigen::MatrixXd::Constant(1, 1, lam.dot(corr));
  }
  ExponentTerms out;
  out.action2 = quad_trapezoid(CurveTable(times, std::move(usq)));
  out.trace_term = quad_trapezoid(CurveTable(times, std::move(tr)));
  out.gradnoise_term = quad_trapezoid(CurveTable(times, std::move(gn)));
  return out;
}

DensityEstimate continuous_laplace_density(const SdeModel& model,
                                           const MppSolution& mpp,
                                           const LaplaceOptions& opts) {
  const int n = model.dim;
  DensityEstimate est;
  est.shooting_residual = mpp.endpoint_residual;
  est.hamiltonian_drift = mpp.hamiltonian_drift;
  est.x_end = mpp.x_end;
  if (!mpp.converged) {
    est.stage = "shooting";
    est.message = mpp.message;
    return est;
  }

  const Eigen::MatrixXd qT =
      opts.qT.size() ? opts.qT : Eigen::MatrixXd::Zero(n, n);
  RiccatiCurve q;
  try {
    q = solve_riccati(model, mpp, qT);
  } catch (const std::exception& e) {
    est.stage = "riccati";
    est.message = e.what();
    return est;
  }

  const LyapunovCurve sigma = solve_lyapunov(model, mpp, q);
  const Eigen::MatrixXd sT = sigma.sigma.value(sigma.sigma.size() - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(sT);
  if (llt.info() != Eigen::Success) {
    est.stage = "lyapunov";
    est.message = "terminal covariance not positive definite";
    return est;
  }
  double logdet = 0;
  for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
  logdet *= 2.0;

  const ExponentTerms terms = exponent_terms(model, mpp, q);
  est.action_term = 0.5 * terms.action2;
  est.riccati_trace_term = terms.trace_term;
  est.gradient_noise_term = terms.gradnoise_term;
  est.sigma_logdet = n * std::log(2.0 * M_PI) + logdet;
  est.log_value = -0.5 * est.sigma_logdet -
                  0.5 * (terms.action2 + terms.trace_term + terms.gradnoise_term);
  est.value = std::exp(est.log_value);
  est.converged = true;
  return est;
}

DensityEstimate continuous_laplace_density(const SdeModel& model,
                                           const Eigen::VectorXd& x0,
                                           const Eigen::VectorXd& xT, double T,
                                           const LaplaceOptions& opts) {
  MppOptions mopts;
  mopts.tol = opts.shoot_tol;
  mopts.max_iter = opts.max_iter;
  mopts.steps_per_unit = opts.steps_per_unit;
  mopts.lambda0_guesses = opts.lambda0_guesses;
  const MppSolution mpp = solve_mpp(model, x0, xT, T, mopts);
  return continuous_laplace_density(model, mpp, opts);
}

}  // namespace sdelap
