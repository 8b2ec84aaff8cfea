#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>

#include "sdelap/models.hpp"
#include "test_oracles.hpp"

using namespace sdelap;
using testsupport::adaptive_simpson;
using testsupport::vec1;

namespace {

// literal Stratonovich form of the Ito equation dX = lam(xi-X)dt + gam sqrt(X) dB
SdeModel cir_ito_read(double lam, double xi, double gam) {
  SdeModel m;
  m.dim = 1;
  m.name = "cir-ito-read";
  m.drift = [=](const Eigen::VectorXd& x) {
    return vec1(lam * (xi - x(0)) - 0.25 * gam * gam);
  };
  m.noise = [=](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd::Constant(1, 1, gam * std::sqrt(x(0)));
  };
  m.drift_jacobian = [=](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Constant(1, 1, -lam);
  };
  m.noise_jacobians = [=](const Eigen::VectorXd& x) {
    return std::vector<Eigen::MatrixXd>{
        Eigen::MatrixXd::Constant(1, 1, 0.5 * gam / std::sqrt(x(0)))};
  };
  return m;
}

DiffeoTransform log_transform(bool with_hessians) {
  DiffeoTransform t;
  t.forward = [](const Eigen::VectorXd& x) { return vec1(std::log(x(0))); };
  t.inverse = [](const Eigen::VectorXd& z) { return vec1(std::exp(z(0))); };
  t.jacobian = [](const Eigen::VectorXd& x) {
    return Eigen::MatrixXd::Constant(1, 1, 1.0 / x(0));
  };
  if (with_hessians)
    t.hessians = [](const Eigen::VectorXd& x) {
      return std::vector<Eigen::MatrixXd>{
          Eigen::MatrixXd::Constant(1, 1, -1.0 / (x(0) * x(0)))};
    };
  return t;
}

}  // namespace

TEST_CASE("ito drift conversions") {
  SUBCASE("additive noise leaves the drift unchanged") {
    const SdeModel ou = make_ou(1.3, 0.4, 0.8);
    const Eigen::VectorXd x = vec1(0.9);
    CHECK(ito_drift(ou, x)(0) == doctest::Approx(ou.drift(x)(0)));
  }
  SUBCASE("gbm gains the sigma^2/2 correction") {
    const SdeModel gbm = make_gbm(0.7, 1.2);
    const double x = 1.4;
    CHECK(ito_drift(gbm, vec1(x))(0) ==
          doctest::Approx(0.7 * x + 0.5 * 1.2 * 1.2 * x).epsilon(1e-12));
  }
  SUBCASE("stratonovich form of the ito square-root equation") {
    const SdeModel m = cir_ito_read(1.0, 1.0, 0.5);
    CHECK(ito_drift(m, vec1(0.75))(0) ==
          doctest::Approx(1.0 * (1.0 - 0.75)).epsilon(1e-12));
  }
}

TEST_CASE("ito_to_stratonovich inverts ito_drift") {
  SUBCASE("constant noise is the identity") {
    const SdeModel ou = make_ou(1.0, 0.0, 0.6);
    const StateFn f =
        ito_to_stratonovich(ou.drift, ou.noise, ou.noise_jacobians);
    CHECK(f(vec1(0.3))(0) == doctest::Approx(ou.drift(vec1(0.3))(0)));
  }
  SUBCASE("square-root noise subtracts gamma^2/4") {
    const double lam = 1.0, xi = 1.0, gam = 0.5;
    const SdeModel m = cir_ito_read(lam, xi, gam);
    const StateFn ito = [=](const Eigen::VectorXd& x) {
      return vec1(lam * (xi - x(0)));
    };
    const StateFn strat = ito_to_stratonovich(ito, m.noise, m.noise_jacobians);
    CHECK(strat(vec1(0.75))(0) ==
          doctest::Approx(lam * (xi - 0.75) - gam * gam / 4.0).epsilon(1e-12));
  }
  SUBCASE("gbm ito drift maps back to rx") {
    const SdeModel gbm = make_gbm(1.0, 1.0);
    const StateFn ito = [](const Eigen::VectorXd& x) {
      return vec1(x(0) + 0.5 * x(0));
    };
    const StateFn strat =
        ito_to_stratonovich(ito, gbm.noise, gbm.noise_jacobians);
    CHECK(strat(vec1(2.0))(0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("composition is the identity on drifts at sampled states") {
    for (const SdeModel& m :
         {make_gbm(0.6, 0.9), make_cir({1.2, 0.8, 0.4}), make_double_well(0.7)}) {
      for (const auto& x : m.sample_states) {
        const StateFn ito = [&m](const Eigen::VectorXd& s) {
          return ito_drift(m, s);
        };
        const StateFn back =
            ito_to_stratonovich(ito, m.noise, m.noise_jacobians);
        CHECK(std::fabs(back(x)(0) - m.drift(x)(0)) < 1e-12);
      }
    }
  }
}

TEST_CASE("model_from_ito produces a consistent stratonovich model") {
  const double lam = 1.0, xi = 1.0, gam = 0.5;
  const SdeModel ref = cir_ito_read(lam, xi, gam);
  const SdeModel m = model_from_ito(
      1, "cir-from-ito",
      [=](const Eigen::VectorXd& x) { return vec1(lam * (xi - x(0))); },
      ref.noise, ref.noise_jacobians);
  const Eigen::VectorXd x = vec1(0.9);
  CHECK(m.drift(x)(0) == doctest::Approx(ref.drift(x)(0)).epsilon(1e-12));
  CHECK(m.drift_jacobian(x)(0, 0) == doctest::Approx(-lam).epsilon(1e-7));
}

TEST_CASE("pushforward model") {
  SUBCASE("identity transform changes nothing") {
    DiffeoTransform id;
    id.forward = [](const Eigen::VectorXd& x) { return x; };
    id.inverse = [](const Eigen::VectorXd& x) { return x; };
    id.jacobian = [](const Eigen::VectorXd& x) {
      return Eigen::MatrixXd::Identity(x.size(), x.size());
    };
    const SdeModel gbm = make_gbm(0.5, 0.8);
    const SdeModel same = pushforward_model(gbm, id);
    const Eigen::VectorXd x = vec1(1.2);
    CHECK(same.drift(x)(0) == doctest::Approx(gbm.drift(x)(0)));
    CHECK(same.noise(x)(0, 0) == doctest::Approx(gbm.noise(x)(0, 0)));
  }
  SUBCASE("log transform turns gbm into constant-coefficient drift") {
    const SdeModel gbm = make_gbm(0.5, 0.8);
    const SdeModel bm = pushforward_model(gbm, log_transform(false));
    for (double z : {-0.5, 0.0, 0.7}) {
      CHECK(bm.drift(vec1(z))(0) == doctest::Approx(0.5).epsilon(1e-9));
      CHECK(bm.noise(vec1(z))(0, 0) == doctest::Approx(0.8).epsilon(1e-9));
      CHECK(std::fabs(bm.drift_jacobian(vec1(z))(0, 0)) < 1e-6);
    }
  }
  SUBCASE("exact chain rule agrees with finite differences") {
    const SdeModel gbm = make_gbm(0.5, 0.8);
    const SdeModel fd = pushforward_model(gbm, log_transform(false));
    const SdeModel exact = pushforward_model(gbm, log_transform(true));
    for (double z : {-0.3, 0.4}) {
      CHECK(exact.drift_jacobian(vec1(z))(0, 0) ==
            doctest::Approx(fd.drift_jacobian(vec1(z))(0, 0)).epsilon(1e-5));
      CHECK(exact.noise_jacobians(vec1(z))[0](0, 0) ==
            doctest::Approx(fd.noise_jacobians(vec1(z))[0](0, 0))
                .epsilon(1e-5));
    }
  }
  SUBCASE("linear scaling of an ou model") {
    DiffeoTransform two;
    two.forward = [](const Eigen::VectorXd& x) { return vec1(2.0 * x(0)); };
    two.inverse = [](const Eigen::VectorXd& z) { return vec1(0.5 * z(0)); };
    two.jacobian = [](const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Constant(1, 1, 2.0);
    };
    const SdeModel ou = make_ou(1.5, 0.3, 0.7);
    const SdeModel scaled = pushforward_model(ou, two);
    const double z = 1.1;
    // f_z(z) = 2 * 1.5 * (0.3 - z/2), g_z = 2 * 0.7
    CHECK(scaled.drift(vec1(z))(0) ==
          doctest::Approx(2.0 * 1.5 * (0.3 - z / 2.0)).epsilon(1e-10));
    CHECK(scaled.noise(vec1(z))(0, 0) == doctest::Approx(1.4).epsilon(1e-10));
  }
}

TEST_CASE("gbm exact density hand values") {
  CHECK(gbm_exact_density(0.0, 1.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-12));
  CHECK(gbm_exact_density(1.0, 1.0, 1.0, 1.0, std::exp(1.0)) ==
        doctest::Approx(1.0 / (std::sqrt(2.0 * M_PI) * std::exp(1.0)))
            .epsilon(1e-12));
  CHECK_THROWS_AS(gbm_exact_density(0.0, 1.0, -1.0, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("log bessel series against boost") {
  for (double nu : {0.0, 0.5, 3.0, 7.5}) {
    for (double z : {0.1, 1.0, 5.0, 16.2834, 40.0}) {
      const double expected = std::log(boost::math::cyl_bessel_i(nu, z));
      CHECK(detail::log_bessel_i(nu, z) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
  // large order and argument stay finite and satisfy the recurrence
  // I_{nu-1}(z) - I_{nu+1}(z) = (2 nu / z) I_nu(z)
  const double big = detail::log_bessel_i(799.0, 1551.0);
  CHECK(std::isfinite(big));
  const double lm = detail::log_bessel_i(798.0, 1551.0);
  const double lp = detail::log_bessel_i(800.0, 1551.0);
  const double lhs = std::exp(lm - big) - std::exp(lp - big);
  CHECK(lhs == doctest::Approx(2.0 * 799.0 / 1551.0).epsilon(1e-10));
}

TEST_CASE("cir exact density reproduces the published anchor") {
  const double p = cir_exact_density(1.0, 1.0, 0.5, 0.75, 1.0, 1.500024);
  CHECK(p == doctest::Approx(0.257).epsilon(0.001 / 0.257));
}

TEST_CASE("cir exact density integrates to one") {
  const double lam = 1.0, xi = 1.0, gam = 0.5, x0 = 0.75, T = 1.0;
  const double xi_eff = xi + gam * gam / (4.0 * lam);
  const double em = std::exp(-lam * T);
  const double mean = xi_eff + (x0 - xi_eff) * em;
  const double var = x0 * gam * gam * (em - em * em) / lam +
                     xi_eff * gam * gam * (1 - em) * (1 - em) / (2 * lam);
  const double sd = std::sqrt(var);
  const double mass = adaptive_simpson(
      [&](double y) {
        return y <= 0 ? 0.0 : cir_exact_density(lam, xi, gam, x0, T, y);
      },
      std::max(1e-9, mean - 10 * sd), mean + 10 * sd, 1e-9);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cir exact density matches the frozen Monte Carlo reference") {
  // Euler-Maruyama on the benchmark equation, step 1e-4, 1e7 paths, cell
  // width 0.02; generated once by mc_reference (mode cir, seed 987654321).
  struct Row {
    double xT, mc, se;
  };
  const Row rows[] = {
      {0.8, 1.308820, 0.002524},
      {1.0, 1.188110, 0.002408},
      {1.2, 0.764875, 0.001941},
      {1.500024, 0.257755, 0.001132},
      {1.8, 0.060190, 0.000548},
  };
  for (const Row& r : rows) {
    const double exact = cir_exact_density(1.0, 1.0, 0.5, 0.75, 1.0, r.xT);
    CHECK(std::fabs(exact - r.mc) < 3.0 * r.se);
  }
}

TEST_CASE("linear exact density closed forms") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
  SUBCASE("standard brownian motion") {
    const double p = linear_exact_density(Eigen::MatrixXd::Zero(1, 1),
                                          Eigen::VectorXd::Zero(1), one,
                                          vec1(0.0), 1.0, vec1(0.0));
    CHECK(p == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-10));
  }
  SUBCASE("ou at its mean") {
    const double mean = 1.0 - std::exp(-1.0);
    const double var = 0.5 * (1.0 - std::exp(-2.0));
    const double p = linear_exact_density(
        Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::VectorXd::Ones(1), one,
        vec1(0.0), 1.0, vec1(mean));
    CHECK(p == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * var)).epsilon(1e-9));
  }
  SUBCASE("rejects T = 0") {
    CHECK_THROWS_AS(linear_exact_density(Eigen::MatrixXd::Zero(1, 1),
                                         Eigen::VectorXd::Zero(1), one,
                                         vec1(0.0), 0.0, vec1(0.0)),
                    std::invalid_argument);
  }
}

TEST_CASE("pushforward density transform identity for gbm and its log") {
  const double r = 0.5, sigma = 0.8, x0 = 1.0, T = 1.0;
  for (double xT : {0.7, 1.1, 2.0}) {
    const double p = gbm_exact_density(r, sigma, x0, T, xT);
    // log process is a brownian motion with drift; gaussian density
    const double z = (std::log(xT / x0) - r * T) / (sigma * std::sqrt(T));
    const double q =
        std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI * T));
    const double grad_eta = 1.0 / xT;
    CHECK(q * grad_eta == doctest::Approx(p).epsilon(1e-8));
  }
}

TEST_CASE("exact densities are normalized") {
  SUBCASE("gbm with moderate volatility") {
    const double r = 0.5, sigma = 0.3, x0 = 1.0, T = 1.0;
    const double lmean = std::log(x0) + r * T;
    const double mean = std::exp(lmean + 0.5 * sigma * sigma * T);
    const double var = (std::exp(sigma * sigma * T) - 1.0) *
                       std::exp(2.0 * lmean + sigma * sigma * T);
    const double sd = std::sqrt(var);
    const double mass = adaptive_simpson(
        [&](double y) {
          return y <= 0 ? 0.0 : gbm_exact_density(r, sigma, x0, T, y);
        },
        std::max(1e-9, mean - 10 * sd), mean + 10 * sd, 1e-9);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-5));
  }
  SUBCASE("ou") {
    const double mean = 1.0 - std::exp(-1.0);
    const double sd = std::sqrt(0.5 * (1.0 - std::exp(-2.0)));
    const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
    const double mass = adaptive_simpson(
        [&](double y) {
          return linear_exact_density(Eigen::MatrixXd::Constant(1, 1, -1.0),
                                      Eigen::VectorXd::Ones(1), one, vec1(0.0),
                                      1.0, vec1(y));
        },
        mean - 10 * sd, mean + 10 * sd, 1e-9);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("model validation") {
  SUBCASE("builtins pass") {
    for (const char* name : {"gbm", "cir", "ou", "doublewell", "linear2d"}) {
      const ModelValidation v = validate_model(model_by_name(name, {}));
      CHECK_MESSAGE(v.ok, name, ": ", v.message);
    }
  }
  SUBCASE("wrong jacobian is caught") {
    SdeModel bad = make_gbm(1.0, 1.0);
    bad.drift_jacobian = [](const Eigen::VectorXd&) {
      return Eigen::MatrixXd::Constant(1, 1, 3.0);  // should be r = 1
    };
    CHECK_FALSE(validate_model(bad).ok);
  }
  SUBCASE("transform roundtrip") {
    std::vector<Eigen::VectorXd> states{vec1(0.5), vec1(1.0), vec1(2.0)};
    CHECK(validate_transform(log_transform(false), states).ok);
    DiffeoTransform broken = log_transform(false);
    broken.inverse = [](const Eigen::VectorXd& z) {
      return vec1(std::exp(z(0)) + 1e-6);
    };
    CHECK_FALSE(validate_transform(broken, states).ok);
  }
  SUBCASE("unknown model name throws") {
    CHECK_THROWS_AS(model_by_name("heston", {}), std::invalid_argument);
  }
}
