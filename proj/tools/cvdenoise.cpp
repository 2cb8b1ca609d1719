#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvdenoise/csv.hpp"
#include "cvdenoise/cvcore.hpp"
#include "cvdenoise/dcart.hpp"
#include "cvdenoise/lasso.hpp"
#include "cvdenoise/simbench.hpp"
#include "cvdenoise/svt.hpp"
#include "cvdenoise/tfilter.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("CVDENOISE_SEED")) return std::strtoull(env, nullptr, 10);
  return 0;
}

std::string sidecar_path(const std::string& output) {
  const auto dot = output.rfind('.');
  const auto slash = output.find_last_of("/\\");
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    return output.substr(0, dot) + ".meta";
  return output + ".meta";
}

std::string grid_to_string(const cvdenoise::LambdaGrid& grid) {
  std::string s;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) s += ",";
    s += cvdenoise::format_double(grid.values[i]);
  }
  return s;
}

void write_sidecar(const std::string& path, const std::string& method, std::size_t n, int dim,
                   int order, std::uint64_t seed, const cvdenoise::CvResult& result) {
  std::ostringstream meta;
  meta << "method=" << method << "\n";
  meta << "n=" << n << "\n";
  meta << "d=" << dim << "\n";
  if (order > 0) meta << "order=" << order << "\n";
  meta << "folds=" << result.folds.fold_count << "\n";
  meta << "fold_scheme="
       << (result.folds.scheme == cvdenoise::FoldScheme::interleaved ? "interleaved" : "bernoulli")
       << "\n";
  meta << "seed=" << seed << "\n";
  meta << "grid=" << grid_to_string(result.grid) << "\n";
  meta << "lambda_hat=" << cvdenoise::format_double(result.final_lambda) << "\n";
  for (std::size_t j = 0; j < result.fold_lambdas.size(); ++j)
    meta << "lambda_fold_" << (j + 1) << "="
         << cvdenoise::format_double(result.fold_lambdas[j]) << "\n";
  for (std::size_t j = 0; j < result.folds.folds.size(); ++j)
    meta << "fold_size_" << (j + 1) << "=" << result.folds.folds[j].size() << "\n";
  cvdenoise::write_text(path, meta.str());
}

struct DenoiseOptions {
  std::string method;
  std::string input;
  std::string output;
  std::string design;
  int order = 1;
  int grid_max = -1;
  std::optional<std::uint64_t> seed_flag;
  std::optional<int> folds_flag;
};

int run_denoise(const DenoiseOptions& opt) {
  using namespace cvdenoise;

  const CsvMatrix in = read_csv_matrix(opt.input);
  const std::uint64_t seed = resolve_seed(opt.seed_flag);

  auto make_grid = [&](std::int64_t total) {
    return opt.grid_max >= 0 ? grid_from_exponent(opt.grid_max) : default_grid(total);
  };
  auto check_folds = [&](int required) {
    if (opt.folds_flag && *opt.folds_flag != required)
      throw std::invalid_argument("--folds must be " + std::to_string(required) +
                                  " for method " + opt.method);
  };

  if (opt.method == "dcart") {
    check_folds(2);
    LatticeShape shape;
    std::vector<double> values;
    if (in.rows == in.cols && in.rows > 1) {
      shape = LatticeShape(2, static_cast<int>(in.rows));
      values = in.data;
    } else if (in.cols == 1) {
      shape = LatticeShape(1, static_cast<int>(in.rows));
      values = in.data;
    } else if (in.rows == 1) {
      shape = LatticeShape(1, static_cast<int>(in.cols));
      values = in.data;
    } else {
      throw std::invalid_argument("dcart input must be a square matrix or a single column");
    }
    const LambdaGrid grid = make_grid(shape.total());
    const CvResult result = cvdcart(LatticeSignal(shape, values), grid, seed);
    write_csv_matrix(opt.output, result.final_fit, in.rows, in.cols);
    write_sidecar(sidecar_path(opt.output), opt.method, values.size(), shape.dim, 0, seed, result);
    return 0;
  }

  if (opt.method == "tf") {
    if (opt.order < 1 || opt.order > 4) throw std::invalid_argument("--order must be in [1, 4]");
    check_folds(opt.order + 1);
    std::vector<double> y;
    if (in.cols == 1 || in.rows == 1) y = in.data;
    else throw std::invalid_argument("tf input must be a single column");
    const LambdaGrid grid = make_grid(static_cast<std::int64_t>(y.size()));
    const CvResult result = cvtf(y, opt.order, grid);
    write_csv_matrix(opt.output, result.final_fit, y.size(), 1);
    write_sidecar(sidecar_path(opt.output), opt.method, y.size(), 1, opt.order, seed, result);
    return 0;
  }

  if (opt.method == "svt") {
    check_folds(2);
    if (in.rows != in.cols) throw std::invalid_argument("svt input must be a square matrix");
    const int n = static_cast<int>(in.rows);
    const LambdaGrid grid = make_grid(static_cast<std::int64_t>(in.data.size()));
    const CvResult result = cvsvt(in.data, n, grid, seed);
    write_csv_matrix(opt.output, result.final_fit, in.rows, in.cols);
    write_sidecar(sidecar_path(opt.output), opt.method, in.data.size(), 2, 0, seed, result);
    return 0;
  }

  if (opt.method == "lasso") {
    check_folds(2);
    if (opt.design.empty()) throw std::invalid_argument("lasso needs --design");
    if (in.cols != 1) throw std::invalid_argument("lasso response must be a single column");
    const CsvMatrix xm = read_csv_matrix(opt.design);
    if (xm.rows != in.rows)
      throw std::invalid_argument("design and response row counts differ");
    const DesignMatrix design(xm.rows, xm.cols, xm.data);
    const LambdaGrid grid = make_grid(static_cast<std::int64_t>(in.rows));
    const CvLassoResult result = cvlasso(design, in.data, grid, seed);
    write_csv_matrix(opt.output, result.cv.final_fit, in.rows, 1);
    // Coefficients as (column index, value) pairs next to the fit.
    {
      std::ostringstream beta;
      beta << "column,beta\n";
      for (std::size_t j = 0; j < result.beta.size(); ++j)
        beta << (j + 1) << "," << format_double(result.beta[j]) << "\n";
      const auto dot = opt.output.rfind('.');
      const std::string beta_path =
          (dot == std::string::npos ? opt.output : opt.output.substr(0, dot)) + ".beta.csv";
      write_text(beta_path, beta.str());
    }
    write_sidecar(sidecar_path(opt.output), opt.method, in.rows, 1, 0, seed, result.cv);
    return 0;
  }

  throw std::invalid_argument("unknown method '" + opt.method + "'");
}

struct SimulateOptions {
  std::string suite;
  std::vector<int> scenarios;
  std::vector<int> ns;
  int order = 1;
  double sigma = 1.0;
  int reps = 100;
  std::optional<std::uint64_t> seed_flag;
  std::string out;
  std::string table;
  std::string per_rep;
  int grid_max = -1;
  int jobs = 1;
};

int run_simulate(const SimulateOptions& opt) {
  using namespace cvdenoise;

  const Suite suite = [&] {
    if (opt.suite == "dc") return Suite::dc;
    if (opt.suite == "tf") return Suite::tf;
    throw std::invalid_argument("unknown suite '" + opt.suite + "' (expected dc or tf)");
  }();
  const std::uint64_t seed = resolve_seed(opt.seed_flag);

  std::vector<SimResult> results;
  std::uint64_t combo = 0;
  for (int n : opt.ns) {
    for (int id : opt.scenarios) {
      Scenario scenario{suite, id, n, opt.order};
      validate_scenario(scenario);
      MethodSpec method;
      method.grid_exponent = opt.grid_max;
      method.jobs = opt.jobs;
      results.push_back(
          monte_carlo_mse(method, scenario, opt.sigma, opt.reps, CounterRng::derive(seed, combo)));
      ++combo;
    }
  }

  std::ostringstream flat;
  flat << "suite,scenario,n,order,sigma,reps,failures,mean_mse,std_error\n";
  for (const auto& r : results) {
    flat << (r.scenario.suite == Suite::dc ? "dc" : "tf") << "," << r.scenario.id << ","
         << r.scenario.n << "," << (r.scenario.suite == Suite::tf ? r.scenario.order : 0) << ","
         << format_double(r.sigma) << "," << r.reps << "," << r.failures.size() << ","
         << format_double(r.mean_mse) << "," << format_double(r.std_error) << "\n";
  }
  write_text(opt.out, flat.str());

  if (!opt.table.empty()) write_text(opt.table, sim_table_csv(results));

  if (!opt.per_rep.empty()) {
    std::ostringstream detail;
    detail << "suite,scenario,n,rep,mse\n";
    for (const auto& r : results)
      for (std::size_t k = 0; k < r.rep_mse.size(); ++k)
        detail << (r.scenario.suite == Suite::dc ? "dc" : "tf") << "," << r.scenario.id << ","
               << r.scenario.n << "," << k << ","
               << (std::isnan(r.rep_mse[k]) ? "failed" : format_double(r.rep_mse[k])) << "\n";
    write_text(opt.per_rep, detail.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-validated signal denoising (dyadic CART, trend filtering, lasso, SVT)"};
  app.require_subcommand(1);

  DenoiseOptions dn;
  CLI::App* denoise = app.add_subcommand("denoise", "Denoise a single dataset");
  denoise->add_option("--method", dn.method, "dcart|tf|lasso|svt")->required();
  denoise->add_option("--input", dn.input, "input CSV")->required();
  denoise->add_option("--output", dn.output, "fitted signal CSV")->required();
  denoise->add_option("--design", dn.design, "design matrix CSV (lasso)");
  denoise->add_option("--order", dn.order, "trend filtering order r in [1,4]");
  denoise->add_option("--grid-max", dn.grid_max, "grid exponent N*: lambda in {1,...,2^N*}");
  denoise->add_option("--seed", dn.seed_flag, "fold randomization seed (fallback: CVDENOISE_SEED)");
  denoise->add_option("--folds", dn.folds_flag, "fold count K (fixed per method; checked)");

  SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo MSE of a simulation scenario");
  simulate->add_option("--suite", sim.suite, "dc|tf")->required();
  simulate->add_option("--scenario", sim.scenarios, "scenario id (repeatable)")->required();
  simulate->add_option("--n", sim.ns, "lattice side / series length (repeatable)")->required();
  simulate->add_option("--order", sim.order, "trend filtering order (tf suite)");
  simulate->add_option("--sigma", sim.sigma, "noise level");
  simulate->add_option("--reps", sim.reps, "Monte-Carlo replications");
  simulate->add_option("--seed", sim.seed_flag, "master seed (fallback: CVDENOISE_SEED)");
  simulate->add_option("--out", sim.out, "result CSV")->required();
  simulate->add_option("--table", sim.table, "optional pivot table CSV (rows n, columns scenarios)");
  simulate->add_option("--per-rep", sim.per_rep, "optional per-replication CSV");
  simulate->add_option("--grid-max", sim.grid_max, "grid exponent N*");
  simulate->add_option("--jobs", sim.jobs, "replication worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*denoise) return run_denoise(dn);
    return run_simulate(sim);
  } catch (const cvdenoise::CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
