#include "ssvb_tools/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ssvb/consistency.hpp"
#include "ssvb/fit.hpp"
#include "ssvb/parallel.hpp"
#include "ssvb/simgen.hpp"
#include "ssvb/tuning.hpp"

namespace ssvb::cli {

namespace {

struct HyperOptions {
  double v1 = 1.0;
  double nu = 1.0;
  double lambda = 1.0;
  double a0 = 1.0;
  double b0 = 1.0;
  double c = 1e-3;
  std::string an_policy = "min_eigen";

  Hyperparameters build() const {
    Hyperparameters hp;
    hp.v1 = v1;
    hp.nu = nu;
    hp.lambda = lambda;
    hp.a0 = a0;
    hp.b0 = b0;
    hp.c = c;
    if (an_policy == "min_eigen") {
      hp.an_policy = MinNonzeroEigen{};
    } else if (an_policy == "n") {
      hp.an_policy = FixedN{};
    } else {
      hp.an_policy = ExplicitAn{std::stod(an_policy)};
    }
    return hp;
  }
};

struct SolverOptions {
  std::string algorithm = "alg2";
  int max_iters = 200;
  double tol = 1e-5;
  bool woodbury = false;
  bool no_an_correction = false;
  std::string order = "box";
  std::string numerator = "box";
  std::string denominator = "sum";

  SolverConfig build() const {
    SolverConfig s;
    s.algorithm = parse_algorithm(algorithm);
    const auto denom = denominator == "product" ? SigmaDenominator::Product : SigmaDenominator::Sum;
    s.componentwise.max_sweeps = max_iters;
    s.componentwise.entropy_tol = tol;
    s.componentwise.denominator = denom;
    s.batch.max_iters = max_iters;
    s.batch.entropy_tol = tol;
    s.batch.woodbury = woodbury;
    s.batch.use_an_correction = !no_an_correction;
    s.batch.order = order == "prose" ? UpdateOrder::Prose : UpdateOrder::Box;
    s.batch.numerator = numerator == "plain" ? SigmaNumerator::Plain : SigmaNumerator::Box;
    s.batch.denominator = denom;
    return s;
  }
};

struct CvOptions {
  int folds = 5;
  std::vector<double> grid;
  std::string scoring = "sparse";

  CvConfig build(std::uint64_t seed, int threads) const {
    CvConfig cv;
    cv.folds = folds;
    if (!grid.empty()) cv.v1_grid = grid;
    cv.scoring = scoring == "two_stage" ? Scoring::MspeTwoStage : Scoring::MspeSparse;
    cv.seed = seed;
    cv.threads = threads;
    return cv;
  }
};

void add_hyper(CLI::App* app, HyperOptions& h, bool with_v1 = true) {
  if (with_v1) {
    app->add_option("--v1", h.v1, "slab variance scale")->check(CLI::PositiveNumber);
  }
  app->add_option("--nu", h.nu, "inverse-gamma shape input")->check(CLI::PositiveNumber);
  app->add_option("--lambda", h.lambda, "inverse-gamma scale input")->check(CLI::PositiveNumber);
  app->add_option("--a0", h.a0, "Beta prior a0")->check(CLI::PositiveNumber);
  app->add_option("--b0", h.b0, "Beta prior b0")->check(CLI::PositiveNumber);
  app->add_option("--c", h.c, "phi truncation bound")->check(CLI::Range(1e-300, 0.4999999));
  app->add_option("--an", h.an_policy, "a_n policy: min_eigen, n, or a positive number")
      ->check([](const std::string& s) -> std::string {
        if (s == "min_eigen" || s == "n") return {};
        try {
          std::size_t used = 0;
          const double v = std::stod(s, &used);
          if (used == s.size() && v > 0.0) return {};
        } catch (...) {
        }
        return "expected min_eigen, n, or a positive number";
      });
}

void add_solver(CLI::App* app, SolverOptions& s) {
  app->add_option("--algorithm", s.algorithm, "alg1 (component-wise) or alg2 (batch)")
      ->check(CLI::IsMember({"alg1", "alg2"}));
  app->add_option("--max-iters", s.max_iters, "iteration cap")->check(CLI::PositiveNumber);
  app->add_option("--tol", s.tol, "entropy stopping tolerance (nats)")->check(CLI::PositiveNumber);
  app->add_flag("--woodbury", s.woodbury, "use the Woodbury incremental inverse (alg2)");
  app->add_flag("--no-an-correction", s.no_an_correction, "use a_n = n (alg2)");
  app->add_option("--order", s.order, "alg2 update order")->check(CLI::IsMember({"box", "prose"}));
  app->add_option("--sigma-numerator", s.numerator, "alg2 sigma2 numerator")
      ->check(CLI::IsMember({"box", "plain"}));
  app->add_option("--sigma-denominator", s.denominator, "sigma2 denominator")
      ->check(CLI::IsMember({"sum", "product"}));
}

void add_cv(CLI::App* app, CvOptions& c) {
  app->add_option("--folds", c.folds, "number of folds")->check(CLI::Range(2, 1000000));
  app->add_option("--grid", c.grid, "comma-separated v1 grid")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  app->add_option("--scoring", c.scoring, "validation predictor")
      ->check(CLI::IsMember({"sparse", "two_stage"}));
}

// Writes to `path`, or to `out` when path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Parse, "cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error(ErrorCode::Parse, "failed writing '" + path + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spike-and-slab variational Bayes variable selection", "ssvb"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  std::uint64_t seed = 1;
  app.add_option("--threads", threads, "worker threads (default: SSVB_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit one dataset and write the result as JSON");
  std::string fit_in, fit_out;
  HyperOptions fit_hp;
  SolverOptions fit_solver;
  fit_cmd->add_option("--input", fit_in, "CSV with a 'y' column")->required();
  fit_cmd->add_option("--output", fit_out, "JSON output path (default stdout)");
  add_hyper(fit_cmd, fit_hp);
  add_solver(fit_cmd, fit_solver);

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "cross-validate v1 and write the CV table");
  std::string cv_in, cv_out;
  HyperOptions cv_hp;
  SolverOptions cv_solver;
  CvOptions cv_opts;
  cv_cmd->add_option("--input", cv_in, "CSV with a 'y' column")->required();
  cv_cmd->add_option("--output", cv_out, "CSV output path (default stdout)");
  cv_cmd->add_option("--seed", seed, "fold seed");
  add_hyper(cv_cmd, cv_hp, false);
  add_solver(cv_cmd, cv_solver);
  add_cv(cv_cmd, cv_opts);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run a simulation scenario for both algorithms");
  std::string scenario = "example1", prefix, ex3_noise = "variance";
  Index bench_n = 60;
  double bench_sigma = 1.0;
  int reps = 100;
  std::vector<std::string> algorithms{"alg1", "alg2"};
  HyperOptions bench_hp;
  SolverOptions bench_solver;
  CvOptions bench_cv;
  bench_cmd->add_option("--scenario", scenario, "scenario name")
      ->check(CLI::IsMember({"example1", "example2", "example3a", "example3b"}));
  bench_cmd->add_option("--n", bench_n, "sample size")->check(CLI::Range(Index{2}, Index{1} << 40));
  bench_cmd->add_option("--sigma", bench_sigma, "noise sd (example1)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--reps", reps, "replicates")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", seed, "master seed");
  bench_cmd->add_option("--algorithms", algorithms, "alg1,alg2")
      ->delimiter(',')
      ->check(CLI::IsMember({"alg1", "alg2"}));
  bench_cmd->add_option("--ex3-noise", ex3_noise, "example 3 noise: variance (3) or sd (3)")
      ->check(CLI::IsMember({"variance", "sd"}));
  auto* fixed_v1 = bench_cmd->add_option("--v1", bench_hp.v1, "fixed v1 (skips cross-validation)")
                       ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out-prefix", prefix,
                        "write <prefix>_replicates.csv, _summary.csv, _timing.csv");
  add_hyper(bench_cmd, bench_hp, false);
  add_solver(bench_cmd, bench_solver);
  add_cv(bench_cmd, bench_cv);

  // consistency
  auto* cons_cmd = app.add_subcommand("consistency", "orthogonal-design and consistency experiments");
  std::string experiment = "gap", cons_out;
  std::vector<Index> n_grid;
  int cons_reps = 0;
  HyperOptions cons_hp;
  cons_cmd->add_option("--experiment", experiment, "gap, bayes or one-step")
      ->check(CLI::IsMember({"gap", "bayes", "one-step"}));
  cons_cmd->add_option("--n-grid", n_grid, "comma-separated sample sizes")->delimiter(',');
  cons_cmd->add_option("--reps", cons_reps, "replicates")->check(CLI::PositiveNumber);
  cons_cmd->add_option("--seed", seed, "master seed");
  cons_cmd->add_option("--output", cons_out, "CSV output path (default stdout)");
  add_hyper(cons_cmd, cons_hp, false);
  auto* cons_v1 = cons_cmd->add_option("--v1", cons_hp.v1, "slab variance scale")
                      ->check(CLI::PositiveNumber);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "write one simulated dataset as CSV");
  std::string sim_out;
  sim_cmd->add_option("--scenario", scenario, "scenario name")
      ->check(CLI::IsMember({"example1", "example2", "example3a", "example3b"}));
  sim_cmd->add_option("--n", bench_n, "sample size")->check(CLI::Range(Index{2}, Index{1} << 40));
  sim_cmd->add_option("--sigma", bench_sigma, "noise sd (example1)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", seed, "seed");
  sim_cmd->add_option("--ex3-noise", ex3_noise, "example 3 noise")
      ->check(CLI::IsMember({"variance", "sd"}));
  sim_cmd->add_option("--output", sim_out, "CSV output path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "ssvb: " << e.what() << "\n";
    if (app.get_subcommands().empty()) err << app.help();
    return kUsage;
  }

  const int workers = resolve_threads(threads);
  const Ex3Noise noise = ex3_noise == "sd" ? Ex3Noise::Sd3 : Ex3Noise::Variance3;

  try {
    if (fit_cmd->parsed()) {
      const Hyperparameters hp = fit_hp.build();
      const SolverConfig solver = fit_solver.build();
      const StandardizedDataset data = standardize(read_csv_file(fit_in));
      const FitResult fr = fit(data, hp, solver);
      emit(fit_out, to_json(fr, data) + "\n", out);
      if (!fr.converged) {
        err << "ssvb: not converged after " << fr.iterations << " iterations\n";
        return kNotConverged;
      }
      return kOk;
    }

    if (cv_cmd->parsed()) {
      const RawDataset data = read_csv_file(cv_in);
      const CvResult res = cv_select_v1(data, cv_hp.build(), cv_opts.build(seed, workers),
                                        cv_solver.build());
      std::ostringstream s;
      write_cv_table(s, res);
      emit(cv_out, s.str(), out);
      err << "best v1 = " << res.best_v1 << "\n";
      return kOk;
    }

    if (bench_cmd->parsed()) {
      BenchConfig cfg;
      cfg.scenario = parse_scenario(scenario);
      cfg.n = bench_n;
      cfg.sigma = bench_sigma;
      cfg.reps = reps;
      cfg.seed = seed;
      cfg.algorithms.clear();
      for (const auto& a : algorithms) cfg.algorithms.push_back(parse_algorithm(a));
      cfg.hp = bench_hp.build();
      cfg.use_cv = fixed_v1->count() == 0;
      cfg.cv = bench_cv.build(seed, 1);
      const SolverConfig solver = bench_solver.build();
      cfg.componentwise = solver.componentwise;
      cfg.batch = solver.batch;
      cfg.ex3_noise = noise;
      cfg.threads = workers;
      const BenchResult res = run_bench(cfg);
      std::ostringstream reps_csv, summary_csv, timing_csv;
      write_bench_replicates(reps_csv, res);
      write_bench_summary(summary_csv, res);
      write_bench_timings(timing_csv, res);
      if (prefix.empty()) {
        out << summary_csv.str();
      } else {
        emit(prefix + "_replicates.csv", reps_csv.str(), out);
        emit(prefix + "_summary.csv", summary_csv.str(), out);
        emit(prefix + "_timing.csv", timing_csv.str(), out);
      }
      for (const auto& row : res.rows) {
        if (!row.ok && row.algorithm != "ols") {
          err << "replicate " << row.replicate << " " << row.algorithm << ": " << row.error << "\n";
        }
      }
      return kOk;
    }

    if (cons_cmd->parsed()) {
      std::ostringstream s;
      if (experiment == "gap") {
        GapConfig cfg;
        if (!n_grid.empty()) cfg.n_grid = n_grid;
        if (cons_reps > 0) cfg.reps = cons_reps;
        cfg.seed = seed;
        cfg.threads = workers;
        write_gap_csv(s, gap_experiment(cfg));
      } else if (experiment == "bayes") {
        BayesConsistencyConfig cfg;
        if (!n_grid.empty()) cfg.n_grid = n_grid;
        if (cons_reps > 0) cfg.reps = cons_reps;
        cfg.seed = seed;
        cfg.threads = workers;
        const double default_v1 = cfg.hp.v1;
        cfg.hp = cons_hp.build();
        if (cons_v1->count() == 0) cfg.hp.v1 = default_v1;
        write_consistency_csv(s, bayesian_consistency_experiment(cfg));
      } else {
        const int count = cons_reps > 0 ? cons_reps : 50;
        s << "probe,n,p,v1,max_rel_diff\n" << std::setprecision(6);
        for (int r = 0; r < count; ++r) {
          Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
          OrthogonalProbe probe;
          probe.n = 50 + static_cast<Index>(rng.uniform_index(351));
          probe.p = 2 + static_cast<Index>(rng.uniform_index(19));
          probe.v1 = cons_hp.v1;
          probe.beta_star = Vector::Zero(probe.p);
          for (Index j = 0; j < std::min<Index>(3, probe.p); ++j) {
            probe.beta_star(j) = 1.0 + 2.0 * rng.uniform();
          }
          const auto res = one_step_logits(probe, rng.uniform_index(~std::uint64_t{0}));
          s << r << ',' << probe.n << ',' << probe.p << ',' << probe.v1 << ',' << res.max_rel_diff
            << '\n';
        }
      }
      emit(cons_out, s.str(), out);
      return kOk;
    }

    if (sim_cmd->parsed()) {
      const SimData sim = generate(parse_scenario(scenario), bench_n, bench_sigma, seed, noise);
      std::ostringstream s;
      write_csv(s, sim.data);
      emit(sim_out, s.str(), out);
      return kOk;
    }
  } catch (const Error& e) {
    err << "ssvb: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? kUsage : kInputError;
  } catch (const std::exception& e) {
    err << "ssvb: " << e.what() << "\n";
    return kInputError;
  }
  return kUsage;
}

}  // namespace ssvb::cli
