#include "sdelap/weak_noise.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace sdelap {

namespace {

Eigen::VectorXd singular_values_hs(const PushforwardInstance& inst) {
  Eigen::LLT<Eigen::MatrixXd> llt(inst.sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("weak_noise: sigma not positive definite");
  const Eigen::MatrixXd hs = inst.jac0 * Eigen::MatrixXd(llt.matrixL());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(hs);
  return svd.singularValues();
}

}  // namespace

double weak_noise_density(const PushforwardInstance& inst) {
  const Eigen::VectorXd s = singular_values_hs(inst);
  if (s.minCoeff() <= 1e-8)
    throw std::invalid_argument("weak_noise_density: H Sigma H^T singular");
  double log_p = -0.5 * inst.m * std::log(2.0 * M_PI);
  for (int i = 0; i < inst.m; ++i) log_p -= std::log(s(i));
  return std::exp(log_p);
}

double laplace_density_delta(const PushforwardInstance& inst, double delta) {
  if (!(delta > 0))
    throw std::invalid_argument("laplace_density_delta: delta must be positive");
  const Eigen::VectorXd s = singular_values_hs(inst);
  double log_p = -0.5 * inst.m * std::log(2.0 * M_PI);
  for (int i = 0; i < inst.m; ++i)
    log_p -= 0.5 * std::log(delta * delta + s(i) * s(i));
  return std::exp(log_p);
}

double brute_force_density(const PushforwardInstance& inst, double delta,
                           const QuadratureGrid& grid) {
  const int n = inst.n, m = inst.m;
  if (n > 3)
    throw std::invalid_argument("brute_force_density: n <= 3 only");
  if (!(delta > 0))
    throw std::invalid_argument("brute_force_density: delta must be positive");

  Eigen::LLT<Eigen::MatrixXd> llt(inst.sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("brute_force_density: sigma not positive definite");
  double sig_logdet = 0;
  for (int i = 0; i < n; ++i) sig_logdet += std::log(llt.matrixL()(i, i));
  sig_logdet *= 2.0;
  const double log_norm = -0.5 * (n * std::log(2.0 * M_PI) + sig_logdet) -
                          0.5 * m * std::log(2.0 * M_PI) -
                          m * std::log(delta);

  // per-dimension grids over +- half_width_sds marginal standard deviations
  std::array<int, 3> pts{1, 1, 1};
  std::array<double, 3> lo{0, 0, 0}, step{0, 0, 0};
  for (int d = 0; d < n; ++d) {
    const double sd = std::sqrt(inst.sigma(d, d));
    const double width = grid.half_width_sds * sd;
    int p = grid.points_per_dim;
    if (p <= 0) {
      const double spacing = std::min(delta / 3.0, sd / 30.0);
      p = (int)std::ceil(2.0 * width / spacing) + 1;
      const int cap = n == 1 ? 400001 : (n == 2 ? 4001 : 601);
      p = std::min(p, cap);
    }
    if (p % 2 == 0) ++p;  // odd count so the half grid shares the endpoints
    if (p < 5) p = 5;
    pts[d] = p;
    lo[d] = -width;
    step[d] = 2.0 * width / (p - 1);
  }

  const auto integrate = [&](int stride) {
    double sum = 0;
    Eigen::VectorXd z(n);
    std::array<int, 3> idx{0, 0, 0};
    const auto count = [&](int d) { return (pts[d] - 1) / stride + 1; };
    const long total = [&] {
      long t = 1;
      for (int d = 0; d < n; ++d) t *= count(d);
      return t;
    }();
    for (long flat = 0; flat < total; ++flat) {
      long rem = flat;
      double wq = 1.0;
      for (int d = 0; d < n; ++d) {
        idx[d] = (int)(rem % count(d));
        rem /= count(d);
        const int gi = idx[d] * stride;
        z(d) = lo[d] + gi * step[d];
        const double wd = (gi == 0 || gi == pts[d] - 1) ? 0.5 : 1.0;
        wq *= wd * step[d] * stride;
      }
      const Eigen::VectorXd h = inst.map(z);
      const double hn2 = h.squaredNorm() / (delta * delta);
      if (hn2 > 300.0) continue;  // mollifier underflow
      const Eigen::VectorXd w = llt.solve(z);
      const double log_f = log_norm - 0.5 * z.dot(w) - 0.5 * hn2;
      sum += wq * std::exp(log_f);
    }
    return sum;
  };

  const double full = integrate(1);
  const double half = integrate(2);
  const double err_est = std::fabs(full - half) / 3.0;
  if (!(err_est <= 1e-4 * std::fabs(full)))
    throw std::runtime_error(
        "brute_force_density: grid too coarse (estimated error " +
        std::to_string(err_est) + " on value " + std::to_string(full) + ")");
  return full;
}

}  // namespace sdelap
