#include "sdelap/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sdelap/continuous_laplace.hpp"
#include "sdelap/discrete_laplace.hpp"
#include "sdelap/models.hpp"
#include "sdelap/mpp.hpp"
#include "sdelap/weak_noise.hpp"

namespace sdelap {

namespace {

using nlohmann::json;

constexpr const char* kCsvVersion = "sdelap-csv-v1";
constexpr const char* kCsvHeader =
    "study,scheme,model,param_name,param_value,h,p_hat,p_exact,abs_err,"
    "rel_err,diag_flags";

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct CsvRow {
  std::string study;
  std::string scheme;
  std::string model;
  std::string param_name;
  double param_value = std::numeric_limits<double>::quiet_NaN();
  double h = std::numeric_limits<double>::quiet_NaN();
  double p_hat = std::numeric_limits<double>::quiet_NaN();
  double p_exact = std::numeric_limits<double>::quiet_NaN();
  double abs_err = std::numeric_limits<double>::quiet_NaN();
  double rel_err = std::numeric_limits<double>::quiet_NaN();
  std::string diag_flags = "ok";
};

class CsvBuilder {
 public:
  explicit CsvBuilder(const ExperimentConfig& config) {
    out_ << "# " << kCsvVersion << "\n";
    out_ << "# config: " << config.to_json() << "\n";
    out_ << kCsvHeader << "\n";
  }
  void add(const CsvRow& r) {
    out_ << r.study << ',' << r.scheme << ',' << r.model << ',' << r.param_name
         << ',' << fmt_double(r.param_value) << ',' << fmt_double(r.h) << ','
         << fmt_double(r.p_hat) << ',' << fmt_double(r.p_exact) << ','
         << fmt_double(r.abs_err) << ',' << fmt_double(r.rel_err) << ','
         << r.diag_flags << "\n";
  }
  void comment(const std::string& text) { out_ << "# " << text << "\n"; }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd x(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) x(i) = v[i];
  return x;
}

std::string fmt_point(const Eigen::VectorXd& x) {
  std::string out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) out += ' ';
    out += fmt_double(x(i));
  }
  return out;
}

LaplaceOptions laplace_options(const ExperimentConfig& config, int dim) {
  LaplaceOptions opts;
  opts.steps_per_unit = config.steps_per_unit;
  opts.shoot_tol = config.shoot_tol;
  if (config.qT != 0.0)
    opts.qT = config.qT * Eigen::MatrixXd::Identity(dim, dim);
  if (config.lambda0) {
    opts.lambda0_guesses = {
        Eigen::VectorXd::Constant(dim, *config.lambda0),
        Eigen::VectorXd::Constant(dim, *config.lambda0 - 0.5)};
  }
  return opts;
}

// pure sweep cells, evaluated concurrently when jobs > 1
void parallel_cells(int jobs, int ncells,
                    const std::function<void(int)>& cell) {
  jobs = std::max(1, std::min(jobs, ncells));
  if (jobs <= 1) {
    for (int i = 0; i < ncells; ++i) cell(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= ncells) return;
        cell(i);
      }
    });
  for (auto& t : pool) t.join();
}

std::vector<std::string> applicable_schemes(const ExperimentConfig& config,
                                            std::string* note) {
  std::vector<std::string> names;
  for (const auto& s : config.schemes) {
    if (s == "strang-cir" && config.model != "cir") {
      if (note) *note += "scheme strang-cir skipped (model is not cir)\n";
      continue;
    }
    names.push_back(s);
  }
  return names;
}

void validate_common(const ExperimentConfig& config) {
  (void)model_by_name(config.model, config.params);  // throws on bad name
  if (!(config.T > 0)) throw ConfigError("config: T must be positive");
  for (double h : config.h_list)
    if (!(h > 0) || h > config.T + 1e-12)
      throw ConfigError("config: h values must be positive and <= T");
  if (config.x0.empty() || config.xT.empty())
    throw ConfigError("config: x0/xT must be non-empty");
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  j["model"] = model;
  j["params"] = params;
  j["x0"] = x0;
  j["xT"] = xT;
  j["T"] = T;
  if (lambda0) j["lambda0"] = *lambda0;
  j["steps_per_unit"] = steps_per_unit;
  j["shoot_tol"] = shoot_tol;
  j["qT"] = qT;
  j["schemes"] = schemes;
  j["h_list"] = h_list;
  j["gamma_list"] = gamma_list;
  j["T_list"] = T_list;
  j["instances"] = instances;
  j["deltas"] = deltas;
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["out"] = out;
  return j.dump();
}

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    const auto num_list = [&](const char* key, std::vector<double>& dst) {
      if (!j.contains(key)) return;
      if (j[key].is_number()) {
        dst = {j[key].get<double>()};
        return;
      }
      dst = j[key].get<std::vector<double>>();
    };
    if (j.contains("model")) c.model = j["model"].get<std::string>();
    if (j.contains("params"))
      c.params = j["params"].get<std::map<std::string, double>>();
    num_list("x0", c.x0);
    num_list("xT", c.xT);
    if (j.contains("T")) c.T = j["T"].get<double>();
    if (j.contains("lambda0")) c.lambda0 = j["lambda0"].get<double>();
    if (j.contains("steps_per_unit"))
      c.steps_per_unit = j["steps_per_unit"].get<int>();
    if (j.contains("shoot_tol")) c.shoot_tol = j["shoot_tol"].get<double>();
    if (j.contains("qT")) c.qT = j["qT"].get<double>();
    if (j.contains("schemes"))
      c.schemes = j["schemes"].get<std::vector<std::string>>();
    num_list("h_list", c.h_list);
    num_list("gamma_list", c.gamma_list);
    num_list("T_list", c.T_list);
    if (j.contains("instances")) c.instances = j["instances"].get<int>();
    num_list("deltas", c.deltas);
    if (j.contains("seed")) c.seed = j["seed"].get<unsigned>();
    if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: bad field: ") + e.what());
  }
  return c;
}

ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

double fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> logs;
  for (const auto& [x, y] : points)
    if (x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y))
      logs.emplace_back(std::log(x), std::log(y));
  if (logs.size() < 3)
    throw std::invalid_argument("fit_loglog_slope: fewer than 3 valid points");
  double mx = 0, my = 0;
  for (const auto& [lx, ly] : logs) {
    mx += lx;
    my += ly;
  }
  mx /= logs.size();
  my /= logs.size();
  double sxx = 0, sxy = 0;
  for (const auto& [lx, ly] : logs) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
  }
  return sxy / sxx;
}

StudyResult run_density(const ExperimentConfig& config) {
  validate_common(config);
  StudyResult res;
  CsvBuilder csv(config);
  std::ostringstream summary;

  const SdeModel model = model_by_name(config.model, config.params);
  const Eigen::VectorXd x0 = to_vector(config.x0);
  const Eigen::VectorXd xT = to_vector(config.xT);
  const LaplaceOptions opts = laplace_options(config, model.dim);

  const DensityEstimate cont =
      continuous_laplace_density(model, x0, xT, config.T, opts);
  // downstream evaluations adopt the achieved endpoint
  const Eigen::VectorXd x_end = cont.converged ? cont.x_end : xT;
  const double exact = exact_density_by_name(config.model, config.params, x0,
                                             config.T, x_end);

  CsvRow row;
  row.study = "density";
  row.model = config.model;
  row.scheme = "continuous";
  row.h = 0;
  row.p_hat = cont.converged ? cont.value
                             : std::numeric_limits<double>::quiet_NaN();
  row.p_exact = exact;
  if (cont.converged && std::isfinite(exact)) {
    row.abs_err = std::fabs(cont.value - exact);
    row.rel_err = row.abs_err / exact;
  }
  row.diag_flags =
      cont.converged
          ? "ok;xT=" + fmt_point(x_end)
          : "failed:" + cont.stage;
  csv.add(row);

  summary << "continuous: p_hat="
          << (cont.converged ? fmt_double(cont.value) : "failed (" + cont.stage + ")")
          << "  achieved xT=" << fmt_point(x_end)
          << "  shooting residual=" << fmt_double(cont.shooting_residual)
          << "\n";
  if (std::isfinite(exact)) summary << "exact: p=" << fmt_double(exact) << "\n";
  if (!cont.converged) res.exit_code = 2;

  std::string note;
  const auto schemes = applicable_schemes(config, &note);
  summary << note;

  struct Cell {
    CsvRow row;
    bool failed = false;
  };
  const int nh = (int)config.h_list.size();
  std::vector<Cell> cells(schemes.size() * nh);
  const auto eval_cell = [&](int idx) {
    const int si = idx / nh, hi = idx % nh;
    const double h = config.h_list[hi];
    Cell& cell = cells[idx];
    cell.row.study = "density";
    cell.row.model = config.model;
    cell.row.scheme = schemes[si];
    cell.row.h = h;
    cell.row.p_exact = exact;
    const int N = std::max(1, (int)std::lround(config.T / h));
    try {
      const Scheme scheme =
          scheme_by_name(schemes[si], model, config.params);
      const DensityEstimate est = discrete_laplace_density(
          scheme, model, x0, x_end, config.T, N);
      if (!est.converged) {
        cell.row.diag_flags = "failed:" + est.stage;
        cell.failed = true;
        return;
      }
      cell.row.p_hat = est.value;
      if (std::isfinite(exact)) {
        cell.row.abs_err = std::fabs(est.value - exact);
        cell.row.rel_err = cell.row.abs_err / exact;
      }
    } catch (const std::exception& e) {
      cell.row.diag_flags = std::string("failed:") + e.what();
      cell.failed = true;
    }
  };
  parallel_cells(config.jobs, (int)cells.size(), eval_cell);

  for (const auto& cell : cells) {
    csv.add(cell.row);
    if (cell.failed) res.exit_code = 2;
    summary << cell.row.scheme << " h=" << fmt_double(cell.row.h) << ": p_hat="
            << (cell.failed ? cell.row.diag_flags : fmt_double(cell.row.p_hat))
            << "\n";
  }

  res.csv = csv.str();
  res.summary = summary.str();
  return res;
}

StudyResult run_order_study(const ExperimentConfig& config) {
  validate_common(config);
  if (config.h_list.empty())
    throw ConfigError("order-study: h_list must be non-empty");
  if (config.schemes.empty())
    throw ConfigError("order-study: schemes must be non-empty");
  StudyResult res;
  CsvBuilder csv(config);
  std::ostringstream summary;

  const SdeModel model = model_by_name(config.model, config.params);
  const Eigen::VectorXd x0 = to_vector(config.x0);
  const Eigen::VectorXd xT = to_vector(config.xT);
  const LaplaceOptions opts = laplace_options(config, model.dim);

  const DensityEstimate cont =
      continuous_laplace_density(model, x0, xT, config.T, opts);
  if (!cont.converged) {
    res.exit_code = 2;
    res.summary = "continuous pipeline failed at stage " + cont.stage + ": " +
                  cont.message + "\n";
    res.csv = csv.str();
    return res;
  }
  const Eigen::VectorXd x_end = cont.x_end;
  const double p0 = cont.value;
  const double exact = exact_density_by_name(config.model, config.params, x0,
                                             config.T, x_end);

  std::string note;
  const auto schemes = applicable_schemes(config, &note);
  summary << note;

  // dyadic h grid recommended; failed cells are recorded as missing
  struct Cell {
    double h;
    double p_hat = std::numeric_limits<double>::quiet_NaN();
    std::string flags = "ok";
  };
  const int nh = (int)config.h_list.size();
  std::vector<Cell> cells(schemes.size() * nh);
  const auto eval_cell = [&](int idx) {
    const int si = idx / nh, hi = idx % nh;
    Cell& cell = cells[idx];
    cell.h = config.h_list[hi];
    const int N = std::max(1, (int)std::lround(config.T / cell.h));
    try {
      const Scheme scheme = scheme_by_name(schemes[si], model, config.params);
      const DensityEstimate est =
          discrete_laplace_density(scheme, model, x0, x_end, config.T, N);
      if (est.converged)
        cell.p_hat = est.value;
      else
        cell.flags = "failed:" + est.stage;
    } catch (const std::exception& e) {
      cell.flags = std::string("failed:") + e.what();
    }
  };
  parallel_cells(config.jobs, (int)cells.size(), eval_cell);

  for (std::size_t si = 0; si < schemes.size(); ++si) {
    std::vector<std::pair<double, double>> pts;
    for (int hi = 0; hi < nh; ++hi) {
      const Cell& cell = cells[si * nh + hi];
      CsvRow row;
      row.study = "order-study";
      row.model = config.model;
      row.scheme = schemes[si];
      row.h = cell.h;
      row.p_hat = cell.p_hat;
      row.p_exact = p0;
      if (std::isfinite(cell.p_hat)) {
        row.abs_err = std::fabs(cell.p_hat - p0);
        pts.emplace_back(cell.h, row.abs_err);
      }
      row.diag_flags = cell.flags;
      csv.add(row);
    }
    try {
      const double slope = fit_loglog_slope(pts);
      res.slopes[schemes[si]] = slope;
      csv.comment("slope " + schemes[si] + " = " + fmt_double(slope));
      summary << "scheme " << schemes[si] << ": fitted order "
              << fmt_double(slope) << "\n";
    } catch (const std::exception& e) {
      summary << "scheme " << schemes[si] << ": slope fit failed (" << e.what()
              << ")\n";
      res.exit_code = 2;
    }
  }

  // reference line: error of the continuous-time limit itself
  if (std::isfinite(exact)) {
    CsvRow row;
    row.study = "order-study";
    row.model = config.model;
    row.scheme = "laplace-reference";
    row.h = 0;
    row.p_hat = p0;
    row.p_exact = exact;
    row.abs_err = std::fabs(p0 - exact);
    row.rel_err = row.abs_err / exact;
    csv.add(row);
    summary << "laplace reference |p - p_hat(0)| = "
            << fmt_double(std::fabs(p0 - exact)) << "\n";
  }

  res.csv = csv.str();
  res.summary = summary.str();
  return res;
}

StudyResult run_accuracy_study(const ExperimentConfig& config) {
  if (config.model != "cir")
    throw ConfigError("accuracy-study: only the cir model is supported");
  validate_common(config);
  if (config.gamma_list.empty() || config.T_list.empty())
    throw ConfigError("accuracy-study: gamma_list and T_list must be non-empty");
  StudyResult res;
  CsvBuilder csv(config);
  std::ostringstream summary;

  const Eigen::VectorXd x0 = to_vector(config.x0);
  const double lam0_base = config.lambda0.value_or(-2.106);
  auto get = [&](const std::string& key, double fallback) {
    const auto it = config.params.find(key);
    return it == config.params.end() ? fallback : it->second;
  };
  const double lam = get("lambda", 1.0), xi = get("xi", 1.0);

  struct Cell {
    double sweep_value = 0;
    double p_hat = std::numeric_limits<double>::quiet_NaN();
    double p_exact = std::numeric_limits<double>::quiet_NaN();
    double xT = std::numeric_limits<double>::quiet_NaN();
    std::string flags = "ok";
  };

  const auto run_sweep = [&](const std::string& pname,
                             const std::vector<double>& values) {
    std::vector<Cell> cells(values.size());
    const auto eval_cell = [&](int idx) {
      Cell& cell = cells[idx];
      cell.sweep_value = values[idx];
      const double gamma = pname == "gamma" ? values[idx] : get("gamma", 0.5);
      const double T = pname == "T" ? values[idx] : config.T;
      const double lam0 =
          pname == "T" ? -2.0 * std::exp(-T) : lam0_base;
      try {
        const SdeModel m = make_cir({lam, xi, gamma});
        MppOptions mopts;
        mopts.steps_per_unit = config.steps_per_unit;
        const MppSolution mpp = solve_mpp_from_costate(
            m, x0, Eigen::VectorXd::Constant(1, lam0), T, mopts);
        LaplaceOptions lopts;
        lopts.steps_per_unit = config.steps_per_unit;
        const DensityEstimate est = continuous_laplace_density(m, mpp, lopts);
        if (!est.converged) {
          cell.flags = "failed:" + est.stage;
          return;
        }
        cell.xT = mpp.x_end(0);
        cell.p_hat = est.value;
        cell.p_exact = cir_exact_density(lam, xi, gamma, x0(0), T, cell.xT);
      } catch (const std::exception& e) {
        cell.flags = std::string("failed:") + e.what();
      }
    };
    parallel_cells(config.jobs, (int)cells.size(), eval_cell);

    std::vector<std::pair<double, double>> pts;
    for (const Cell& cell : cells) {
      CsvRow row;
      row.study = "accuracy-study";
      row.model = "cir";
      row.scheme = "continuous";
      row.param_name = pname;
      row.param_value = cell.sweep_value;
      row.p_hat = cell.p_hat;
      row.p_exact = cell.p_exact;
      if (std::isfinite(cell.p_hat) && std::isfinite(cell.p_exact)) {
        row.abs_err = std::fabs(cell.p_hat - cell.p_exact);
        row.rel_err = row.abs_err / cell.p_exact;
        pts.emplace_back(cell.sweep_value, row.rel_err);
      }
      row.diag_flags = cell.flags == "ok"
                           ? "ok;xT=" + fmt_double(cell.xT)
                           : cell.flags;
      csv.add(row);
      if (cell.flags != "ok") res.exit_code = 2;
    }
    try {
      const double slope = fit_loglog_slope(pts);
      res.slopes[pname] = slope;
      csv.comment("slope " + pname + " = " + fmt_double(slope));
      summary << "relative error vs " << pname << ": fitted slope "
              << fmt_double(slope) << "\n";
    } catch (const std::exception& e) {
      summary << "sweep " << pname << ": slope fit failed (" << e.what()
              << ")\n";
      res.exit_code = 2;
    }
  };

  run_sweep("gamma", config.gamma_list);
  run_sweep("T", config.T_list);

  res.csv = csv.str();
  res.summary = summary.str();
  return res;
}

StudyResult run_weak_noise_check(const ExperimentConfig& config) {
  StudyResult res;
  CsvBuilder csv(config);
  std::ostringstream summary;

  std::mt19937 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> dim_n(1, 3);

  std::vector<double> slopes;
  for (int inst_i = 0; inst_i < config.instances; ++inst_i) {
    const int n = dim_n(rng);
    std::uniform_int_distribution<int> dim_m(1, std::min(2, n));
    const int m = dim_m(rng);

    Eigen::MatrixXd H(m, n);
    for (;;) {
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) H(r, c) = normal(rng);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
      if (svd.singularValues().minCoeff() > 0.2) break;
    }
    Eigen::MatrixXd B(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) B(r, c) = 0.7 * normal(rng);
    const Eigen::MatrixXd sigma =
        B * B.transpose() + 0.3 * Eigen::MatrixXd::Identity(n, n);

    PushforwardInstance inst;
    inst.n = n;
    inst.m = m;
    inst.sigma = sigma;
    inst.jac0 = H;
    inst.map = [H](const Eigen::VectorXd& z) { return Eigen::VectorXd(H * z); };

    const double limit = weak_noise_density(inst);
    std::vector<std::pair<double, double>> pts;
    for (double d : config.deltas) {
      const double gap =
          std::fabs(laplace_density_delta(inst, d) - limit) / limit;
      if (gap > 0) pts.emplace_back(d, gap);
    }
    if (pts.size() >= 3) slopes.push_back(fit_loglog_slope(pts));
  }
  double mean_slope = 0, min_slope = 1e9, max_slope = -1e9;
  for (double s : slopes) {
    mean_slope += s;
    min_slope = std::min(min_slope, s);
    max_slope = std::max(max_slope, s);
  }
  if (!slopes.empty()) mean_slope /= (double)slopes.size();
  res.slopes["delta-order-mean"] = mean_slope;
  res.slopes["delta-order-min"] = min_slope;
  res.slopes["delta-order-max"] = max_slope;
  summary << "random instances: " << slopes.size()
          << ", delta-order mean=" << fmt_double(mean_slope)
          << " min=" << fmt_double(min_slope)
          << " max=" << fmt_double(max_slope) << "\n";
  csv.comment("delta-order mean = " + fmt_double(mean_slope));

  // nonlinear fixtures compared against the quadrature oracle
  const auto nonlinear_row = [&](const std::string& tag,
                                 const PushforwardInstance& inst,
                                 double delta) {
    CsvRow row;
    row.study = "weak-noise";
    row.model = tag;
    row.scheme = "quadrature";
    row.param_name = "delta";
    row.param_value = delta;
    try {
      const double brute = brute_force_density(inst, delta);
      const double lap = laplace_density_delta(inst, delta);
      const double weak = weak_noise_density(inst);
      row.p_hat = lap;
      row.p_exact = brute;
      row.abs_err = std::fabs(lap - brute);
      row.rel_err = row.abs_err / brute;
      summary << tag << ": brute=" << fmt_double(brute)
              << " laplace=" << fmt_double(lap)
              << " weak-noise=" << fmt_double(weak) << "\n";
      if (row.rel_err > 0.01 || std::fabs(weak - brute) / brute > 0.01) {
        row.diag_flags = "mismatch";
        res.exit_code = 2;
      }
    } catch (const std::exception& e) {
      row.diag_flags = std::string("failed:") + e.what();
      res.exit_code = 2;
    }
    csv.add(row);
  };

  {
    PushforwardInstance inst;
    inst.n = 2;
    inst.m = 1;
    inst.sigma = Eigen::MatrixXd::Identity(2, 2);
    inst.jac0 = Eigen::MatrixXd::Zero(1, 2);
    inst.jac0(0, 0) = 1.0;
    inst.map = [](const Eigen::VectorXd& z) {
      return Eigen::VectorXd::Constant(1, z(0) + 0.05 * z(1) * z(1));
    };
    nonlinear_row("quad-bend", inst, 0.05);
  }
  {
    PushforwardInstance inst;
    inst.n = 2;
    inst.m = 2;
    inst.sigma = Eigen::MatrixXd::Identity(2, 2);
    inst.sigma(1, 1) = 0.8;
    inst.jac0 = Eigen::MatrixXd::Identity(2, 2);
    inst.map = [](const Eigen::VectorXd& z) {
      Eigen::VectorXd out(2);
      out << z(0) + 0.08 * z(1) * z(1), z(1) - 0.05 * z(0) * z(0);
      return out;
    };
    nonlinear_row("planar-warp", inst, 0.05);
  }

  res.csv = csv.str();
  res.summary = summary.str();
  return res;
}

StudyResult run_validate_model(const ExperimentConfig& config) {
  StudyResult res;
  CsvBuilder csv(config);
  std::ostringstream summary;

  const SdeModel model = model_by_name(config.model, config.params);
  const ModelValidation v = validate_model(model);
  summary << "model " << config.model << ": "
          << (v.ok ? "valid" : "INVALID (" + v.message + ")") << "\n"
          << "  max drift jacobian error: "
          << fmt_double(v.max_drift_jacobian_error) << "\n"
          << "  max noise jacobian error: "
          << fmt_double(v.max_noise_jacobian_error) << "\n"
          << "  worst noise condition: " << fmt_double(v.worst_noise_condition)
          << "\n";

  CsvRow row;
  row.study = "validate-model";
  row.model = config.model;
  row.scheme = "";
  row.diag_flags = v.ok ? "ok" : "failed:" + v.message;
  csv.add(row);

  if (!v.ok) res.exit_code = 2;
  res.csv = csv.str();
  res.summary = summary.str();
  return res;
}

}  // namespace sdelap
