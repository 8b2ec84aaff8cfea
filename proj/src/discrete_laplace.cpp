#include "sdelap/discrete_laplace.hpp"

#include <cmath>

namespace sdelap {

namespace {

double gaussian_increment_logdensity(const Eigen::VectorXd& b, double h) {
  const int n = (int)b.size();
  return -0.5 * n * std::log(2.0 * M_PI * h) - 0.5 * b.squaredNorm() / h;
}

struct CirDriftFlow {
  // flow of the drift part dx/dt = lambda (xi - x); identity when lambda = 0
  double lambda, xi;
  explicit CirDriftFlow(const CirParams& p) : lambda(p.lambda), xi(p.xi) {}
  double advance(double x, double tau) const {
    return xi + (x - xi) * std::exp(-lambda * tau);
  }
  double reverse(double y, double tau) const {
    return xi + (y - xi) * std::exp(lambda * tau);
  }
};

}  // namespace

Eigen::VectorXd euler_increment(const SdeModel& model, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& y, double h) {
  const Eigen::MatrixXd gsum = model.noise(x) + model.noise(y);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(gsum);
  const Eigen::VectorXd rhs =
      2.0 * (y - x) - (model.drift(x) + model.drift(y)) * h;
  const Eigen::VectorXd b = lu.solve(rhs);
  if (!b.allFinite())
    throw std::runtime_error("euler_increment: singular g(x)+g(y)");
  return b;
}

double euler_step_logdensity(const SdeModel& model, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y, double h) {
  const int n = model.dim;
  const Eigen::VectorXd b = euler_increment(model, x, y, h);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) -
                      0.5 * h * model.drift_jacobian(y);
  const auto dg = model.noise_jacobians(y);
  for (int k = 0; k < n; ++k) m -= 0.5 * b(k) * dg[k];
  const double det1 = m.determinant();
  if (!(det1 > 0))
    throw std::runtime_error(
        "euler_step_logdensity: non-positive Jacobian determinant (step too "
        "coarse)");
  const double det2 =
      (0.5 * (model.noise(x) + model.noise(y))).determinant();
  if (det2 == 0)
    throw std::runtime_error("euler_step_logdensity: singular noise average");
  return std::log(det1) - std::log(std::fabs(det2)) +
         gaussian_increment_logdensity(b, h);
}

double strang_increment_cir(const CirParams& p, double x, double y, double h) {
  const CirDriftFlow flow(p);
  const double x1 = flow.advance(x, 0.5 * h);
  const double x2 = flow.reverse(y, 0.5 * h);
  if (!(x1 > 0) || !(x2 > 0))
    throw std::domain_error(
        "strang_increment_cir: non-positive intermediate state");
  return (2.0 / p.gamma) * (std::sqrt(x2) - std::sqrt(x1));
}

double strang_step_logdensity_cir(const CirParams& p, double x, double y,
                                  double h) {
  const CirDriftFlow flow(p);
  const double x1 = flow.advance(x, 0.5 * h);
  const double x2 = flow.reverse(y, 0.5 * h);
  if (!(x1 > 0) || !(x2 > 0))
    throw std::domain_error(
        "strang_step_logdensity_cir: non-positive intermediate state");
  const double b = (2.0 / p.gamma) * (std::sqrt(x2) - std::sqrt(x1));
  // db/dy through the reversed half flow and the square root
  const double dbdy = std::exp(0.5 * p.lambda * h) / (p.gamma * std::sqrt(x2));
  return -0.5 * std::log(2.0 * M_PI * h) - 0.5 * b * b / h + std::log(dbdy);
}

Scheme make_euler_stratonovich_scheme(const SdeModel& model) {
  Scheme s;
  s.name = "euler-stratonovich";
  s.dim = model.dim;
  s.increment = [model](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        double h) { return euler_increment(model, x, y, h); };
  s.step_logdensity = [model](const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, double h) {
    return euler_step_logdensity(model, x, y, h);
  };
  s.forward = [model](const Eigen::VectorXd& x, const Eigen::VectorXd& b,
                      double h) {
    // fixed-point solve of the implicit step, Newton polish as fallback
    const Eigen::VectorXd fx = model.drift(x);
    const Eigen::MatrixXd gx = model.noise(x);
    Eigen::VectorXd y = x + fx * h + gx * b;
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXd ynew =
          x + 0.5 * (fx + model.drift(y)) * h + 0.5 * (gx + model.noise(y)) * b;
      const double delta = (ynew - y).norm();
      y = ynew;
      if (delta <= 1e-14 * (1.0 + y.norm())) return y;
    }
    // Newton on F(y) = x + 1/2 (f(x)+f(y)) h + 1/2 (g(x)+g(y)) b - y
    for (int it = 0; it < 50; ++it) {
      const Eigen::VectorXd fval =
          x + 0.5 * (fx + model.drift(y)) * h + 0.5 * (gx + model.noise(y)) * b - y;
      if (fval.norm() <= 1e-13 * (1.0 + y.norm())) return y;
      const int n = model.dim;
      Eigen::MatrixXd jac = 0.5 * h * model.drift_jacobian(y) -
                            Eigen::MatrixXd::Identity(n, n);
      const auto dg = model.noise_jacobians(y);
      for (int k = 0; k < n; ++k) jac += 0.5 * b(k) * dg[k];
      y -= jac.partialPivLu().solve(fval);
    }
    throw std::runtime_error("euler forward step did not converge");
  };
  return s;
}

Scheme make_strang_cir_scheme(const CirParams& p) {
  Scheme s;
  s.name = "strang-cir";
  s.dim = 1;
  s.increment = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                    double h) {
    return Eigen::VectorXd::Constant(1,
                                     strang_increment_cir(p, x(0), y(0), h));
  };
  s.step_logdensity = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          double h) {
    return strang_step_logdensity_cir(p, x(0), y(0), h);
  };
  s.forward = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& b,
                  double h) {
    const CirDriftFlow flow(p);
    const double x1 = flow.advance(x(0), 0.5 * h);
    if (!(x1 > 0))
      throw std::domain_error("strang forward: non-positive drift flow state");
    const double root = std::sqrt(x1) + 0.5 * p.gamma * b(0);
    const double x2 = root * root;
    return Eigen::VectorXd::Constant(1, flow.advance(x2, 0.5 * h));
  };
  return s;
}

Scheme scheme_by_name(const std::string& name, const SdeModel& model,
                      const std::map<std::string, double>& params) {
  if (name == "euler-stratonovich")
    return make_euler_stratonovich_scheme(model);
  if (name == "strang-cir") {
    auto get = [&](const std::string& key, double fallback) {
      const auto it = params.find(key);
      return it == params.end() ? fallback : it->second;
    };
    return make_strang_cir_scheme(
        {get("lambda", 1.0), get("xi", 1.0), get("gamma", 0.5)});
  }
  throw std::invalid_argument("unknown scheme name: " + name);
}

double psi(const Scheme& scheme, const std::vector<Eigen::VectorXd>& states,
           double h) {
  double total = 0;
  for (std::size_t i = 1; i < states.size(); ++i)
    total += gaussian_increment_logdensity(
        scheme.increment(states[i - 1], states[i], h), h);
  return total;
}

namespace {

// psi restricted to the terms touching state i (the steps i and i+1)
double local_psi(const Scheme& scheme, const std::vector<Eigen::VectorXd>& xs,
                 std::size_t i, const Eigen::VectorXd& xi, double h) {
  double s = gaussian_increment_logdensity(scheme.increment(xs[i - 1], xi, h), h);
  if (i + 1 < xs.size())
    s += gaussian_increment_logdensity(scheme.increment(xi, xs[i + 1], h), h);
  return s;
}

// gradient of psi with respect to interior state i; 4th-order central stencil
Eigen::VectorXd interior_gradient(const Scheme& scheme,
                                  const std::vector<Eigen::VectorXd>& xs,
                                  std::size_t i, double fd_step, double h) {
  const int n = (int)xs[i].size();
  Eigen::VectorXd g(n);
  for (int c = 0; c < n; ++c) {
    const double step = fd_step * (1.0 + std::fabs(xs[i](c)));
    Eigen::VectorXd x = xs[i];
    const auto eval = [&](double offset) {
      x(c) = xs[i](c) + offset;
      return local_psi(scheme, xs, i, x, h);
    };
    g(c) = (-eval(2.0 * step) + 8.0 * eval(step) - 8.0 * eval(-step) +
            eval(-2.0 * step)) /
           (12.0 * step);
  }
  return g;
}

Eigen::VectorXd full_gradient(const Scheme& scheme,
                              const std::vector<Eigen::VectorXd>& xs,
                              double fd_step, double h) {
  const int n = (int)xs[0].size();
  const std::size_t interior = xs.size() - 2;
  Eigen::VectorXd g((Eigen::Index)(interior * n));
  for (std::size_t i = 1; i + 1 < xs.size(); ++i)
    g.segment((Eigen::Index)((i - 1) * n), n) =
        interior_gradient(scheme, xs, i, fd_step, h);
  return g;
}

BandedSymMatrix neg_psi_hessian(const Scheme& scheme,
                                const std::vector<Eigen::VectorXd>& xs,
                                double fd_grad_step, double fd_hess_step,
                                double h) {
  const int n = (int)xs[0].size();
  const int interior = (int)xs.size() - 2;
  const int order = interior * n;
  const int bw = std::min(order - 1, 2 * n - 1);
  BandedSymMatrix hess(order, std::max(0, bw));

  std::vector<Eigen::VectorXd> work = xs;
  for (int j = 1; j <= interior; ++j) {
    for (int d = 0; d < n; ++d) {
      const int colidx = (j - 1) * n + d;
      const double step = fd_hess_step * (1.0 + std::fabs(xs[j](d)));
      int nblocks = 0;
      int blocks[3];
      for (int bi = j - 1; bi <= j + 1; ++bi)
        if (bi >= 1 && bi <= interior) blocks[nblocks++] = bi;

      // 4th-order central difference of the psi gradient in direction (j, d)
      Eigen::VectorXd deriv[3];
      for (int t = 0; t < nblocks; ++t) deriv[t] = Eigen::VectorXd::Zero(n);
      const double weights[4] = {-1.0, 8.0, -8.0, 1.0};
      const double offsets[4] = {2.0, 1.0, -1.0, -2.0};
      for (int s = 0; s < 4; ++s) {
        work[j](d) = xs[j](d) + offsets[s] * step;
        for (int t = 0; t < nblocks; ++t)
          deriv[t] += weights[s] *
                      interior_gradient(scheme, work, blocks[t], fd_grad_step, h);
      }
      work[j](d) = xs[j](d);

      for (int t = 0; t < nblocks; ++t) {
        const int bi = blocks[t];
        for (int c = 0; c < n; ++c) {
          const int rowidx = (bi - 1) * n + c;
          if (rowidx < colidx || rowidx - colidx > hess.bandwidth()) continue;
          // Hessian of -psi
          hess.at(rowidx, colidx) = -deriv[t](c) / (12.0 * step);
        }
      }
    }
  }
  return hess;
}

std::vector<Eigen::VectorXd> initial_path(const Scheme& scheme,
                                          const SdeModel& model,
                                          const Eigen::VectorXd& x0,
                                          const Eigen::VectorXd& xT, double T,
                                          int N, BridgeInit init,
                                          const BridgeOptions& opts) {
  std::vector<Eigen::VectorXd> xs(N + 1);
  xs[0] = x0;
  xs[N] = xT;
  if (init == BridgeInit::Mpp) {
    MppOptions mopts;
    mopts.steps_per_unit = opts.mpp_steps_per_unit;
    const MppSolution mpp = solve_mpp(model, x0, xT, T, mopts);
    if (mpp.converged) {
      for (int i = 1; i < N; ++i)
        xs[i] = mpp.x_curve.at(T * i / N);
      return xs;
    }
    // fall through to linear interpolation
  }
  for (int i = 1; i < N; ++i) {
    const double w = (double)i / N;
    xs[i] = (1.0 - w) * x0 + w * xT;
  }
  (void)scheme;
  return xs;
}

}  // namespace

DiscretePath optimize_bridge(const Scheme& scheme, const SdeModel& model,
                             const Eigen::VectorXd& x0,
                             const Eigen::VectorXd& xT, double T, int N,
                             BridgeInit init, const BridgeOptions& opts) {
  if (N < 2) throw std::invalid_argument("optimize_bridge: N must be >= 2");
  const double h = T / N;
  const int n = (int)x0.size();

  DiscretePath path;
  path.h = h;
  path.states = initial_path(scheme, model, x0, xT, T, N, init, opts);

  const double grad_tol = opts.grad_tol_per_state * N;
  double current_psi = psi(scheme, path.states, h);
  for (int it = 0; it < opts.max_iter; ++it) {
    path.iterations = it;
    const Eigen::VectorXd grad =
        full_gradient(scheme, path.states, opts.fd_grad_step, h);
    path.grad_norm = grad.norm();
    if (path.grad_norm <= grad_tol) {
      path.converged = true;
      break;
    }

    BandedSymMatrix hess = neg_psi_hessian(scheme, path.states,
                                           opts.fd_grad_step,
                                           opts.fd_hess_step, h);
    Eigen::VectorXd dir;
    double shift = 0;
    for (int attempt = 0; attempt < 12; ++attempt) {
      try {
        BandedCholesky chol(hess);
        dir = chol.solve(grad);  // ascent direction for psi
        break;
      } catch (const NonPositivePivotError&) {
        double dmax = 0;
        for (int i = 0; i < hess.order(); ++i)
          dmax = std::max(dmax, std::fabs(hess.at(i, i)));
        const double add = (shift == 0 ? 1e-6 * (1.0 + dmax) : shift * 10.0) - shift;
        for (int i = 0; i < hess.order(); ++i) hess.at(i, i) += add;
        shift += add;
        dir.resize(0);
      }
    }
    if (dir.size() == 0) {
      path.message = "hessian regularization failed";
      break;
    }

    double alpha = 1.0;
    bool improved = false;
    std::vector<Eigen::VectorXd> trial = path.states;
    for (int halve = 0; halve <= opts.max_halvings; ++halve) {
      for (int i = 1; i < N; ++i)
        trial[i] = path.states[i] + alpha * dir.segment((i - 1) * n, n);
      double trial_psi;
      try {
        trial_psi = psi(scheme, trial, h);
      } catch (const std::exception&) {
        trial_psi = -std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(trial_psi) && trial_psi > current_psi) {
        path.states = trial;
        current_psi = trial_psi;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) {
      path.message = "no ascent step found";
      break;
    }
  }

  if (!path.converged) {
    const Eigen::VectorXd grad =
        full_gradient(scheme, path.states, opts.fd_grad_step, h);
    path.grad_norm = grad.norm();
    path.converged = path.grad_norm <= grad_tol;
    if (!path.converged && path.message.empty())
      path.message = "max_iter exceeded";
  }

  path.psi_value = current_psi;
  path.increments.resize(N);
  for (int i = 1; i <= N; ++i)
    path.increments[i - 1] =
        scheme.increment(path.states[i - 1], path.states[i], h);

  // saddle check at the returned point
  try {
    BandedCholesky chol(neg_psi_hessian(scheme, path.states, opts.fd_grad_step,
                                        opts.fd_hess_step, h));
    (void)chol;
  } catch (const NonPositivePivotError&) {
    path.saddle = true;
    path.converged = false;
    path.message += (path.message.empty() ? "" : "; ");
    path.message += "hessian indefinite at returned point (saddle)";
  }
  return path;
}

BandedSymMatrix psi_hessian(const Scheme& scheme, const DiscretePath& path,
                            const BridgeOptions& opts) {
  return neg_psi_hessian(scheme, path.states, opts.fd_grad_step,
                         opts.fd_hess_step, path.h);
}

DensityEstimate discrete_laplace_density(const Scheme& scheme,
                                         const SdeModel& model,
                                         const Eigen::VectorXd& x0,
                                         const Eigen::VectorXd& xT, double T,
                                         int N, BridgeInit init,
                                         const BridgeOptions& opts) {
  DensityEstimate est;
  if (N < 1) throw std::invalid_argument("discrete_laplace_density: N < 1");
  const double h = T / N;
  const int n = (int)x0.size();
  est.x_end = xT;

  std::vector<Eigen::VectorXd> states;
  double logdet_term = 0;
  if (N == 1) {
    states = {x0, xT};
    est.psi_value = psi(scheme, states, h);
  } else {
    DiscretePath path;
    try {
      path = optimize_bridge(scheme, model, x0, xT, T, N, init, opts);
    } catch (const std::exception& e) {
      est.stage = "bridge";
      est.message = e.what();
      return est;
    }
    est.psi_value = path.psi_value;
    est.bridge_grad_norm = path.grad_norm;
    if (!path.converged) {
      est.stage = "bridge";
      est.message = path.message;
      return est;
    }
    try {
      BandedCholesky chol(psi_hessian(scheme, path, opts));
      est.hessian_logdet = chol.logdet();
    } catch (const NonPositivePivotError& e) {
      est.stage = "hessian";
      est.message = e.what();
      return est;
    }
    logdet_term =
        -0.5 * (est.hessian_logdet - (double)(N - 1) * n * std::log(2.0 * M_PI));
    states = std::move(path.states);
  }

  double step_logdens = 0;
  try {
    for (int i = 1; i <= N; ++i)
      step_logdens += scheme.step_logdensity(states[i - 1], states[i], h);
  } catch (const std::exception& e) {
    est.stage = "step-density";
    est.message = e.what();
    return est;
  }

  est.log_value = logdet_term + step_logdens;
  est.value = std::exp(est.log_value);
  est.converged = true;
  return est;
}

}  // namespace sdelap
