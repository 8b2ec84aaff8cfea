#include "sdelap/models.hpp"

#include <cmath>
#include <iostream>

#include "sdelap/numerics.hpp"

namespace sdelap {

namespace {

Eigen::VectorXd noise_correction(const SdeModel& model,
                                 const Eigen::VectorXd& x) {
  const Eigen::MatrixXd g = model.noise(x);
  const auto dg = model.noise_jacobians(x);
  Eigen::VectorXd corr = Eigen::VectorXd::Zero(model.dim);
  for (int k = 0; k < model.dim; ++k) corr += dg[k] * g.col(k);
  return 0.5 * corr;
}

Eigen::MatrixXd fd_jacobian(const StateFn& f, const Eigen::VectorXd& x,
                            double scale = 1e-6) {
  const int n = (int)x.size();
  const int m = (int)f(x).size();
  Eigen::MatrixXd jac(m, n);
  for (int j = 0; j < n; ++j) {
    const double step = scale * (1.0 + std::fabs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return jac;
}

double gaussian_logpdf(const Eigen::VectorXd& delta,
                       const Eigen::MatrixXd& cov) {
  const int n = (int)delta.size();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gaussian_logpdf: covariance not positive definite");
  double logdet = 0;
  for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
  logdet *= 2.0;
  const Eigen::VectorXd w = llt.solve(delta);
  return -0.5 * (n * std::log(2.0 * M_PI) + logdet + delta.dot(w));
}

}  // namespace

Eigen::VectorXd ito_drift(const SdeModel& model, const Eigen::VectorXd& x) {
  return model.drift(x) + noise_correction(model, x);
}

StateFn ito_to_stratonovich(const StateFn& ito_drift_fn, const MatrixFn& noise,
                            const MatrixListFn& noise_jacobians) {
  return [=](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::MatrixXd g = noise(x);
    const auto dg = noise_jacobians(x);
    Eigen::VectorXd corr = Eigen::VectorXd::Zero(x.size());
    for (int k = 0; k < (int)x.size(); ++k) corr += dg[k] * g.col(k);
    return ito_drift_fn(x) - 0.5 * corr;
  };
}

SdeModel model_from_ito(int dim, std::string name, const StateFn& ito_drift_fn,
                        const MatrixFn& noise,
                        const MatrixListFn& noise_jacobians) {
  SdeModel m;
  m.dim = dim;
  m.name = std::move(name);
  m.drift = ito_to_stratonovich(ito_drift_fn, noise, noise_jacobians);
  m.noise = noise;
  m.noise_jacobians = noise_jacobians;
  const StateFn drift = m.drift;
  m.drift_jacobian = [drift](const Eigen::VectorXd& x) {
    return fd_jacobian(drift, x);
  };
  return m;
}

SdeModel pushforward_model(const SdeModel& model, const DiffeoTransform& t) {
  SdeModel out;
  out.dim = model.dim;
  out.name = model.name + "-pushforward";

  const auto to_x = [t](const Eigen::VectorXd& z) { return t.inverse(z); };
  const auto jac_at = [t](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    const Eigen::MatrixXd j = t.jacobian(x);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(j);
    if (!lu.isInvertible())
      throw std::runtime_error("pushforward_model: singular transform Jacobian");
    return j;
  };

  out.drift = [model, to_x, jac_at](const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = to_x(z);
    return Eigen::VectorXd(jac_at(x) * model.drift(x));
  };
  out.noise = [model, to_x, jac_at](const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = to_x(z);
    return Eigen::MatrixXd(jac_at(x) * model.noise(x));
  };

  if (t.hessians) {
    // chain rule: d/dz (J(x) v(x)) = [M_v + J dv] J^{-1},  row j of M_v
    // being (hess_j v)^T
    out.drift_jacobian = [model, t, to_x, jac_at](const Eigen::VectorXd& z) {
      const Eigen::VectorXd x = to_x(z);
      const Eigen::MatrixXd j = jac_at(x);
      const auto hess = t.hessians(x);
      const Eigen::VectorXd f = model.drift(x);
      const int n = model.dim;
      Eigen::MatrixXd m(n, n);
      for (int r = 0; r < n; ++r) m.row(r) = (hess[r] * f).transpose();
      return Eigen::MatrixXd((m + j * model.drift_jacobian(x)) * j.inverse());
    };
    out.noise_jacobians = [model, t, to_x, jac_at](const Eigen::VectorXd& z) {
      const Eigen::VectorXd x = to_x(z);
      const Eigen::MatrixXd j = jac_at(x);
      const Eigen::MatrixXd jinv = j.inverse();
      const auto hess = t.hessians(x);
      const Eigen::MatrixXd g = model.noise(x);
      const auto dg = model.noise_jacobians(x);
      const int n = model.dim;
      std::vector<Eigen::MatrixXd> out_jac(n);
      for (int k = 0; k < n; ++k) {
        Eigen::MatrixXd m(n, n);
        for (int r = 0; r < n; ++r) m.row(r) = (hess[r] * g.col(k)).transpose();
        out_jac[k] = (m + j * dg[k]) * jinv;
      }
      return out_jac;
    };
  } else {
    const StateFn fz = out.drift;
    out.drift_jacobian = [fz](const Eigen::VectorXd& z) {
      return fd_jacobian(fz, z);
    };
    const MatrixFn gz = out.noise;
    const int n = model.dim;
    out.noise_jacobians = [gz, n](const Eigen::VectorXd& z) {
      std::vector<Eigen::MatrixXd> jacs(n);
      for (int k = 0; k < n; ++k) {
        StateFn col = [gz, k](const Eigen::VectorXd& zz) {
          return Eigen::VectorXd(gz(zz).col(k));
        };
        jacs[k] = fd_jacobian(col, z);
      }
      return jacs;
    };
  }

  for (const auto& x : model.sample_states)
    out.sample_states.push_back(t.forward(x));
  return out;
}

SdeModel make_gbm(double r, double sigma) {
  SdeModel m;
  m.dim = 1;
  m.name = "gbm";
  m.drift = [r](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, r * x(0));
  };
  m.noise = [sigma](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd::Constant(1, 1, sigma * x(0));
  };
  m.drift_jacobian = [r](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, r);
  };
  m.noise_jacobians = [sigma](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Constant(1, 1, sigma)};
  };
  for (double s : {0.4, 0.75, 1.0, 1.5, 2.5})
    m.sample_states.push_back(Eigen::VectorXd::Constant(1, s));
  return m;
}

SdeModel make_cir(const CirParams& p) {
  // Benchmark square-root process dX = lambda (xi - X) dt + gamma sqrt(X) o dB
  // (Stratonovich); the equivalent Ito drift is lambda (xi - x) + gamma^2/4.
  SdeModel m;
  m.dim = 1;
  m.name = "cir";
  const double lam = p.lambda, xi = p.xi;
  m.drift = [lam, xi](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, lam * (xi - x(0)));
  };
  const double gam = p.gamma;
  m.noise = [gam](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd::Constant(1, 1, gam * std::sqrt(x(0)));
  };
  m.drift_jacobian = [lam](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -lam);
  };
  m.noise_jacobians = [gam](const Eigen::VectorXd& x) {
    return std::vector<Eigen::MatrixXd>{
        Eigen::MatrixXd::Constant(1, 1, 0.5 * gam / std::sqrt(x(0)))};
  };
  for (double s : {0.4, 0.75, 1.0, 1.5, 2.0})
    m.sample_states.push_back(Eigen::VectorXd::Constant(1, s));
  return m;
}

SdeModel make_ou(double rate, double mean, double sigma) {
  SdeModel m;
  m.dim = 1;
  m.name = "ou";
  m.drift = [rate, mean](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, rate * (mean - x(0)));
  };
  m.noise = [sigma](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, sigma);
  };
  m.drift_jacobian = [rate](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -rate);
  };
  m.noise_jacobians = [](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
  };
  for (double s : {-1.0, 0.0, 0.5, 1.0, 2.0})
    m.sample_states.push_back(Eigen::VectorXd::Constant(1, s));
  return m;
}

SdeModel make_double_well(double sigma) {
  SdeModel m;
  m.dim = 1;
  m.name = "doublewell";
  m.drift = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, x(0) - x(0) * x(0) * x(0));
  };
  m.noise = [sigma](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, sigma);
  };
  m.drift_jacobian = [](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd::Constant(1, 1, 1.0 - 3.0 * x(0) * x(0));
  };
  m.noise_jacobians = [](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(1, 1)};
  };
  for (double s : {-1.5, -1.0, 0.0, 0.5, 1.5})
    m.sample_states.push_back(Eigen::VectorXd::Constant(1, s));
  return m;
}

SdeModel make_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                     const Eigen::MatrixXd& G) {
  const int n = (int)A.rows();
  if (A.cols() != n || c.size() != n || G.rows() != n || G.cols() != n)
    throw std::invalid_argument("make_linear: inconsistent shapes");
  SdeModel m;
  m.dim = n;
  m.name = n == 2 ? "linear2d" : "linear";
  m.drift = [A, c](const Eigen::VectorXd& x) { return Eigen::VectorXd(A * x + c); };
  m.noise = [G](const Eigen::VectorXd&) { return G; };
  m.drift_jacobian = [A](const Eigen::VectorXd&) { return A; };
  m.noise_jacobians = [n](const Eigen::VectorXd&) {
    return std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(n, n));
  };
  for (double s : {-0.5, 0.0, 0.5, 1.0})
    m.sample_states.push_back(Eigen::VectorXd::Constant(n, s));
  return m;
}

SdeModel make_linear2d_default() {
  Eigen::MatrixXd A(2, 2);
  A << -1.0, 0.5, 0.0, -0.7;
  Eigen::VectorXd c(2);
  c << 0.3, 0.0;
  Eigen::MatrixXd G(2, 2);
  G << 0.5, 0.1, 0.0, 0.4;
  return make_linear(A, c, G);
}

SdeModel model_by_name(const std::string& name,
                       const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "gbm") return make_gbm(get("r", 1.0), get("sigma", 1.0));
  if (name == "cir")
    return make_cir({get("lambda", 1.0), get("xi", 1.0), get("gamma", 0.5)});
  if (name == "ou")
    return make_ou(get("rate", 1.0), get("mean", 1.0), get("sigma", 1.0));
  if (name == "doublewell") return make_double_well(get("sigma", 1.0));
  if (name == "linear2d") return make_linear2d_default();
  throw std::invalid_argument("unknown model name: " + name);
}

double gbm_exact_density(double r, double sigma, double x0, double T,
                         double xT) {
  if (!(x0 > 0) || !(xT > 0) || !(sigma > 0) || !(T > 0))
    throw std::invalid_argument("gbm_exact_density: non-positive argument");
  const double s = sigma * std::sqrt(T);
  const double z = (std::log(xT / x0) - r * T) / s;
  return std::exp(-0.5 * z * z) / (xT * s * std::sqrt(2.0 * M_PI));
}

namespace detail {

double log_bessel_i(double nu, double z) {
  if (!(z > 0) || nu <= -1.0 || !std::isfinite(z))
    throw std::invalid_argument("log_bessel_i: need z > 0, nu > -1");
  const double lz2 = std::log(0.5 * z);
  // index of the largest series term
  const double jstar =
      0.5 * (-(nu + 1.0) + std::sqrt((nu + 1.0) * (nu + 1.0) + z * z));
  double max_log = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  const long jcap = 200000;
  for (long j = 0; j < jcap; ++j) {
    const double lt = (nu + 2.0 * j) * lz2 - std::lgamma((double)j + 1.0) -
                      std::lgamma(nu + (double)j + 1.0);
    if (lt > max_log) {
      sum = sum * std::exp(max_log - lt) + 1.0;
      max_log = lt;
    } else {
      sum += std::exp(lt - max_log);
      if (lt < max_log - 45.0 && (double)j > jstar) break;
    }
  }
  const double result = max_log + std::log(sum);
  if (!std::isfinite(result))
    throw std::overflow_error("log_bessel_i: overflow at z=" +
                              std::to_string(z));
  return result;
}

}  // namespace detail

double cir_exact_density(double lambda, double xi, double gamma, double x0,
                         double T, double xT) {
  if (!(lambda > 0) || !(xi > 0) || !(gamma > 0) || !(x0 > 0) || !(T > 0) ||
      !(xT > 0))
    throw std::invalid_argument("cir_exact_density: non-positive argument");
  if (2.0 * lambda * xi < gamma * gamma)
    std::cerr << "cir_exact_density: warning, 2*lambda*xi < gamma^2 "
                 "(boundary attainable)\n";
  // Noncentral chi-squared transition density of the Stratonovich benchmark
  // equation; its Ito-form long-run mean is xi + gamma^2/(4 lambda).
  const double xi_eff = xi + gamma * gamma / (4.0 * lambda);
  const double em = std::exp(-lambda * T);
  const double c = 2.0 * lambda / (gamma * gamma * (1.0 - em));
  const double u = c * x0 * em;
  const double v = c * xT;
  const double q = 2.0 * lambda * xi_eff / (gamma * gamma) - 1.0;
  const double z = 2.0 * std::sqrt(u * v);
  double log_p;
  try {
    log_p = std::log(c) - u - v + 0.5 * q * std::log(v / u) +
            detail::log_bessel_i(q, z);
  } catch (const std::overflow_error&) {
    throw std::overflow_error(
        "cir_exact_density: Bessel overflow, argument magnitude " +
        std::to_string(z));
  }
  return std::exp(log_p);
}

double linear_exact_density(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                            const Eigen::MatrixXd& G,
                            const Eigen::VectorXd& x0, double T,
                            const Eigen::VectorXd& xT) {
  const int n = (int)A.rows();
  if (!(T > 0))
    throw std::invalid_argument("linear_exact_density: singular covariance at T=0");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
  if (!lu.isInvertible())
    throw std::invalid_argument("linear_exact_density: G not invertible");

  const int steps = std::max(200, (int)std::lround(1000.0 * T));
  // mean and covariance stacked into one (n x (n+1)) matrix state
  Eigen::MatrixXd y0 = Eigen::MatrixXd::Zero(n, n + 1);
  y0.col(0) = x0;
  const Eigen::MatrixXd GGt = G * G.transpose();
  const auto rhs = [&](double, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd dy(n, n + 1);
    dy.col(0) = A * y.col(0) + c;
    const Eigen::MatrixXd S = y.rightCols(n);
    dy.rightCols(n) = A * S + S * A.transpose() + GGt;
    return dy;
  };
  const CurveTable sol = rk4_integrate(rhs, y0, 0.0, T, steps);
  const Eigen::MatrixXd yT = sol.value(sol.size() - 1);
  const Eigen::VectorXd mean = yT.col(0);
  Eigen::MatrixXd cov = yT.rightCols(n);
  cov = 0.5 * (cov + cov.transpose()).eval();
  return std::exp(gaussian_logpdf(xT - mean, cov));
}

double exact_density_by_name(const std::string& name,
                             const std::map<std::string, double>& params,
                             const Eigen::VectorXd& x0, double T,
                             const Eigen::VectorXd& xT) {
  auto get = [&](const std::string& key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  if (name == "gbm")
    return gbm_exact_density(get("r", 1.0), get("sigma", 1.0), x0(0), T, xT(0));
  if (name == "cir")
    return cir_exact_density(get("lambda", 1.0), get("xi", 1.0),
                             get("gamma", 0.5), x0(0), T, xT(0));
  if (name == "ou") {
    const double rate = get("rate", 1.0), mean = get("mean", 1.0),
                 sigma = get("sigma", 1.0);
    return linear_exact_density(Eigen::MatrixXd::Constant(1, 1, -rate),
                                Eigen::VectorXd::Constant(1, rate * mean),
                                Eigen::MatrixXd::Constant(1, 1, sigma), x0, T,
                                xT);
  }
  if (name == "linear2d") {
    const SdeModel m = make_linear2d_default();
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    return linear_exact_density(m.drift_jacobian(zero), m.drift(zero),
                                m.noise(zero), x0, T, xT);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

ModelValidation validate_model(const SdeModel& model,
                               const std::vector<Eigen::VectorXd>& states) {
  ModelValidation out;
  const auto& pts = states.empty() ? model.sample_states : states;
  if (pts.empty()) {
    out.message = "no states to validate at";
    return out;
  }
  const double tol = 1e-5;
  for (const auto& x : pts) {
    const Eigen::MatrixXd df_fd = fd_jacobian(model.drift, x);
    const Eigen::MatrixXd df = model.drift_jacobian(x);
    const double ferr = (df - df_fd).cwiseAbs().maxCoeff() /
                        (1.0 + df_fd.cwiseAbs().maxCoeff());
    out.max_drift_jacobian_error = std::max(out.max_drift_jacobian_error, ferr);

    const auto dg = model.noise_jacobians(x);
    for (int k = 0; k < model.dim; ++k) {
      const MatrixFn noise = model.noise;
      StateFn col = [noise, k](const Eigen::VectorXd& xx) {
        return Eigen::VectorXd(noise(xx).col(k));
      };
      const Eigen::MatrixXd dg_fd = fd_jacobian(col, x);
      const double gerr = (dg[k] - dg_fd).cwiseAbs().maxCoeff() /
                          (1.0 + dg_fd.cwiseAbs().maxCoeff());
      out.max_noise_jacobian_error = std::max(out.max_noise_jacobian_error, gerr);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.noise(x));
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    const double cond = smin > 0 ? smax / smin
                                 : std::numeric_limits<double>::infinity();
    out.worst_noise_condition = std::max(out.worst_noise_condition, cond);
  }
  out.ok = out.max_drift_jacobian_error <= tol &&
           out.max_noise_jacobian_error <= tol &&
           std::isfinite(out.worst_noise_condition) &&
           out.worst_noise_condition < 1e12;
  if (!out.ok)
    out.message = "derivative or invertibility check failed";
  return out;
}

TransformValidation validate_transform(
    const DiffeoTransform& t, const std::vector<Eigen::VectorXd>& states) {
  TransformValidation out;
  for (const auto& x : states) {
    const Eigen::VectorXd back = t.inverse(t.forward(x));
    out.max_roundtrip_error =
        std::max(out.max_roundtrip_error, (back - x).cwiseAbs().maxCoeff());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(t.jacobian(x));
    if (!lu.isInvertible()) {
      out.message = "transform Jacobian singular";
      return out;
    }
  }
  out.ok = out.max_roundtrip_error <= 1e-10;
  if (!out.ok && out.message.empty()) out.message = "roundtrip error too large";
  return out;
}

}  // namespace sdelap
