#include "sdelap/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace sdelap {

CurveTable::CurveTable(std::vector<double> times,
                       std::vector<Eigen::MatrixXd> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.empty() || times_.size() != values_.size())
    throw std::invalid_argument("CurveTable: empty or mismatched samples");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1]))
      throw std::invalid_argument("CurveTable: times must be strictly increasing");
}

Eigen::MatrixXd CurveTable::at(double t) const {
  if (times_.empty()) throw std::logic_error("CurveTable: empty");
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t j = (std::size_t)(it - times_.begin());
  const double t0 = times_[j - 1], t1 = times_[j];
  const double w = (t - t0) / (t1 - t0);
  return (1.0 - w) * values_[j - 1] + w * values_[j];
}

double CurveTable::scalar_at(double t) const {
  const Eigen::MatrixXd v = at(t);
  if (v.rows() != 1 || v.cols() != 1)
    throw std::logic_error("CurveTable: scalar_at on non-scalar samples");
  return v(0, 0);
}

CurveTable rk4_integrate(const OdeRhs& rhs, const Eigen::MatrixXd& y0,
                         double t0, double t1, int steps) {
  if (steps < 1) throw std::invalid_argument("rk4_integrate: steps < 1");
  std::vector<double> times;
  std::vector<Eigen::MatrixXd> values;
  times.reserve(steps + 1);
  values.reserve(steps + 1);
  times.push_back(t0);
  values.push_back(y0);

  Eigen::MatrixXd y = y0;
  const double span = t1 - t0;
  for (int i = 0; i < steps; ++i) {
    const double ta = t0 + span * i / steps;
    const double tb = t0 + span * (i + 1) / steps;
    const double h = tb - ta;
    const Eigen::MatrixXd k1 = rhs(ta, y);
    if (!k1.allFinite())
      throw std::runtime_error("rk4_integrate: non-finite rhs at t=" +
                               std::to_string(ta));
    const Eigen::MatrixXd k2 = rhs(ta + 0.5 * h, y + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = rhs(ta + 0.5 * h, y + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = rhs(tb, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite())
      throw std::runtime_error("rk4_integrate: non-finite state at t=" +
                               std::to_string(tb));
    times.push_back(tb);
    values.push_back(y);
  }

  if (t1 < t0) {
    std::reverse(times.begin(), times.end());
    std::reverse(values.begin(), values.end());
  }
  return CurveTable(std::move(times), std::move(values));
}

namespace {

ShootResult scalar_secant(const ShootMap& map, double p0, double p1,
                          double tol, int max_iter) {
  ShootResult out;
  const auto eval = [&](double p) -> double {
    return map(Eigen::VectorXd::Constant(1, p))(0);
  };
  double f0 = eval(p0);
  out.parameter = Eigen::VectorXd::Constant(1, p0);
  out.residual = Eigen::VectorXd::Constant(1, f0);
  if (!std::isfinite(f0)) {
    out.message = "secant: first guess gives a non-finite residual";
    return out;
  }
  if (std::fabs(f0) <= tol) {
    out.converged = true;
    return out;
  }
  // shrink the second guess toward the first until the map is finite there
  double f1 = eval(p1);
  for (int shrink = 0; !std::isfinite(f1) && shrink < 40; ++shrink) {
    p1 = 0.5 * (p0 + p1);
    f1 = eval(p1);
  }
  if (!std::isfinite(f1)) {
    out.message = "secant: no finite second guess found";
    return out;
  }
  double best_p = std::fabs(f0) < std::fabs(f1) ? p0 : p1;
  double best_f = std::fabs(f0) < std::fabs(f1) ? f0 : f1;
  int growth_streak = 0;
  double prev_abs = std::fabs(f1);
  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    if (std::fabs(f1) <= tol) {
      out.parameter = Eigen::VectorXd::Constant(1, p1);
      out.residual = Eigen::VectorXd::Constant(1, f1);
      out.converged = true;
      return out;
    }
    if (f1 == f0) {
      out.message = "secant stalled (flat residual)";
      break;
    }
    double p2 = p1 - f1 * (p1 - p0) / (f1 - f0);
    double f2 = eval(p2);
    // damp toward the last finite iterate when the trial integration fails
    for (int damp = 0; !std::isfinite(f2) && damp < 40; ++damp) {
      p2 = 0.5 * (p1 + p2);
      f2 = eval(p2);
    }
    if (!std::isfinite(f2)) {
      out.message = "secant: residual stayed non-finite after damping";
      break;
    }
    p0 = p1;
    f0 = f1;
    p1 = p2;
    f1 = f2;
    if (std::fabs(f1) < std::fabs(best_f)) {
      best_f = f1;
      best_p = p1;
    }
    if (std::fabs(f1) > prev_abs) {
      if (++growth_streak >= 5) {
        out.message = "secant diverging (residual grew 5 times in a row)";
        break;
      }
    } else {
      growth_streak = 0;
    }
    prev_abs = std::fabs(f1);
  }
  if (std::fabs(f1) <= tol) {
    out.parameter = Eigen::VectorXd::Constant(1, p1);
    out.residual = Eigen::VectorXd::Constant(1, f1);
    out.converged = true;
    return out;
  }
  if (out.message.empty()) out.message = "secant: max_iter exceeded";
  out.parameter = Eigen::VectorXd::Constant(1, best_p);
  out.residual = Eigen::VectorXd::Constant(1, best_f);
  out.converged = false;
  return out;
}

ShootResult vector_newton(const ShootMap& map, Eigen::VectorXd p, double tol,
                          int max_iter) {
  ShootResult out;
  const int n = (int)p.size();
  Eigen::VectorXd f = map(p);
  if (!f.allFinite()) {
    out.parameter = p;
    out.residual = f;
    out.message = "newton: first guess gives a non-finite residual";
    return out;
  }
  Eigen::VectorXd best_p = p;
  double best_norm = f.norm();
  int growth_streak = 0;
  double prev_norm = best_norm;
  for (int it = 0; it <= max_iter; ++it) {
    out.iterations = it;
    if (f.norm() <= tol) {
      out.parameter = p;
      out.residual = f;
      out.converged = true;
      return out;
    }
    if (it == max_iter) break;
    Eigen::MatrixXd jac(n, n);
    for (int j = 0; j < n; ++j) {
      const double step = 1e-6 * (1.0 + std::fabs(p(j)));
      Eigen::VectorXd ps = p;
      ps(j) += step;
      jac.col(j) = (map(ps) - f) / step;
    }
    if (!jac.allFinite()) {
      out.message = "newton: non-finite jacobian";
      break;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible()) {
      out.message = "newton: singular jacobian";
      break;
    }
    const Eigen::VectorXd dir = lu.solve(-f);
    double alpha = 1.0;
    Eigen::VectorXd pn;
    Eigen::VectorXd fn;
    bool improved = false;
    for (int halve = 0; halve < 12; ++halve) {
      pn = p + alpha * dir;
      fn = map(pn);
      if (fn.allFinite() && fn.norm() < f.norm()) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) {
      out.message = "newton: no step improvement";
      break;
    }
    p = pn;
    f = fn;
    if (f.norm() < best_norm) {
      best_norm = f.norm();
      best_p = p;
    }
    if (f.norm() > prev_norm) {
      if (++growth_streak >= 5) {
        out.message = "newton diverging";
        break;
      }
    } else {
      growth_streak = 0;
    }
    prev_norm = f.norm();
  }
  if (out.message.empty()) out.message = "newton: max_iter exceeded";
  out.parameter = best_p;
  out.residual = map(best_p);
  out.converged = out.residual.norm() <= tol;
  return out;
}

}  // namespace

ShootResult secant_shoot(const ShootMap& map, const Eigen::VectorXd& p0,
                         const Eigen::VectorXd& p1, double tol, int max_iter) {
  if (p0.size() != p1.size())
    throw std::invalid_argument("secant_shoot: guess size mismatch");
  if (p0.size() == 1) return scalar_secant(map, p0(0), p1(0), tol, max_iter);
  return vector_newton(map, p0, tol, max_iter);
}

double quad_trapezoid(const CurveTable& curve) {
  if (curve.empty()) throw std::invalid_argument("quad_trapezoid: empty curve");
  double sum = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double dt = curve.times()[i] - curve.times()[i - 1];
    sum += 0.5 * dt * (curve.value(i)(0, 0) + curve.value(i - 1)(0, 0));
  }
  return sum;
}

BandedSymMatrix::BandedSymMatrix(int order, int bandwidth)
    : order_(order), bandwidth_(bandwidth) {
  if (order < 1 || bandwidth < 0 || bandwidth >= order)
    throw std::invalid_argument("BandedSymMatrix: bad order/bandwidth");
  bands_.assign((std::size_t)(bandwidth + 1) * order, 0.0);
}

double& BandedSymMatrix::at(int row, int col) {
  if (row < col) std::swap(row, col);
  const int d = row - col;
  if (col < 0 || row >= order_ || d > bandwidth_)
    throw std::out_of_range("BandedSymMatrix::at outside band");
  return bands_[(std::size_t)d * order_ + col];
}

double BandedSymMatrix::at(int row, int col) const {
  if (row < col) std::swap(row, col);
  const int d = row - col;
  if (col < 0 || row >= order_) throw std::out_of_range("BandedSymMatrix::at");
  if (d > bandwidth_) return 0.0;
  return bands_[(std::size_t)d * order_ + col];
}

Eigen::MatrixXd BandedSymMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(order_, order_);
  for (int c = 0; c < order_; ++c)
    for (int r = c; r <= std::min(order_ - 1, c + bandwidth_); ++r)
      m(r, c) = m(c, r) = at(r, c);
  return m;
}

BandedCholesky::BandedCholesky(const BandedSymMatrix& m)
    : order_(m.order()), bandwidth_(m.bandwidth()) {
  bands_.assign((std::size_t)(bandwidth_ + 1) * order_, 0.0);
  auto L = [&](int r, int c) -> double& {
    return bands_[(std::size_t)(r - c) * order_ + c];
  };
  for (int j = 0; j < order_; ++j) {
    double s = m.at(j, j);
    for (int k = std::max(0, j - bandwidth_); k < j; ++k)
      s -= L(j, k) * L(j, k);
    if (!(s > 0.0) || !std::isfinite(s)) throw NonPositivePivotError(j, s);
    const double ljj = std::sqrt(s);
    L(j, j) = ljj;
    for (int i = j + 1; i <= std::min(order_ - 1, j + bandwidth_); ++i) {
      double t = m.at(i, j);
      for (int k = std::max(0, i - bandwidth_); k < j; ++k)
        t -= L(i, k) * L(j, k);
      L(i, j) = t / ljj;
    }
  }
}

double BandedCholesky::logdet() const {
  double s = 0;
  for (int j = 0; j < order_; ++j) s += std::log(bands_[j]);
  return 2.0 * s;
}

Eigen::VectorXd BandedCholesky::solve(const Eigen::VectorXd& rhs) const {
  if ((int)rhs.size() != order_)
    throw std::invalid_argument("BandedCholesky::solve: size mismatch");
  auto L = [&](int r, int c) {
    return bands_[(std::size_t)(r - c) * order_ + c];
  };
  Eigen::VectorXd y = rhs;
  for (int i = 0; i < order_; ++i) {
    double s = y(i);
    for (int k = std::max(0, i - bandwidth_); k < i; ++k) s -= L(i, k) * y(k);
    y(i) = s / L(i, i);
  }
  for (int i = order_ - 1; i >= 0; --i) {
    double s = y(i);
    for (int k = i + 1; k <= std::min(order_ - 1, i + bandwidth_); ++k)
      s -= L(k, i) * y(k);
    y(i) = s / L(i, i);
  }
  return y;
}

double banded_logdet(const BandedSymMatrix& m) {
  return BandedCholesky(m).logdet();
}

}  // namespace sdelap
