#include "ssvb/simgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "ssvb/parallel.hpp"

namespace ssvb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vector add_noise(const Matrix& X, const Vector& beta, double sigma, Rng& rng) {
  Vector y = X * beta;
  for (Index i = 0; i < y.size(); ++i) y(i) += sigma * rng.normal();
  return y;
}

std::vector<std::string> default_names(Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace

Matrix sample_gaussian_rows(Index n, const Matrix& Sigma, Rng& rng) {
  Eigen::LLT<Matrix> llt(Sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "covariance is not positive definite");
  }
  const Index p = Sigma.rows();
  Matrix Z(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) Z(i, j) = rng.normal();
  }
  return Z * llt.matrixL().transpose();
}

Matrix sample_ar1_rows(Index n, Index p, double rho, Rng& rng) {
  const double s = std::sqrt(1.0 - rho * rho);
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    for (Index j = 1; j < p; ++j) X(i, j) = rho * X(i, j - 1) + s * rng.normal();
  }
  return X;
}

Matrix ar1_covariance(Index p, double rho) {
  Matrix S(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) S(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return S;
}

SimData gen_example1(Index n, double sigma, std::uint64_t seed) {
  if (n < 9) throw Error(ErrorCode::InvalidArgument, "example 1 needs n >= 9");
  Rng rng(seed);
  SimData out;
  out.beta_star = (Vector(8) << 3, 1.5, 0, 0, 2, 0, 0, 0).finished();
  out.Sigma = ar1_covariance(8, 0.5);
  out.sigma = sigma;
  out.data.X = sample_gaussian_rows(n, out.Sigma, rng);
  out.data.y = add_noise(out.data.X, out.beta_star, sigma, rng);
  out.data.feature_names = default_names(8);
  return out;
}

SimData gen_example2(Index n, std::uint64_t seed, double sigma) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "example 2 needs n >= 2");
  const Index p = 40;
  Rng rng(seed);
  SimData out;
  out.beta_star = Vector::Zero(p);
  out.beta_star.head(6) << 3, 3, -2, 3, 3, -2;
  out.Sigma = Matrix::Identity(p, p);
  for (Index b = 0; b < 2; ++b) {
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 3; ++j) {
        if (i != j) out.Sigma(3 * b + i, 3 * b + j) = 0.9;
      }
    }
  }
  out.sigma = sigma;
  out.data.X = sample_gaussian_rows(n, out.Sigma, rng);
  out.data.y = add_noise(out.data.X, out.beta_star, sigma, rng);
  out.data.feature_names = default_names(p);
  return out;
}

SimData gen_example3(Ex3Variant variant, std::uint64_t seed, Ex3Noise noise, Index n, Index p) {
  if (p < 20) throw Error(ErrorCode::InvalidArgument, "example 3 needs p >= 20");
  Rng rng(seed);
  SimData out;
  out.beta_star = Vector::Zero(p);
  if (variant == Ex3Variant::A) {
    out.beta_star.head(3) << 3, 2, 1;
  } else {
    std::vector<double> vals;
    vals.insert(vals.end(), 10, 1.0);
    vals.insert(vals.end(), 7, 2.0);
    vals.insert(vals.end(), 3, 3.0);
    rng.shuffle(vals.begin(), vals.end());
    for (Index j = 0; j < 20; ++j) out.beta_star(j) = vals[static_cast<std::size_t>(j)];
  }
  out.Sigma = ar1_covariance(p, 0.6);
  out.sigma = noise == Ex3Noise::Variance3 ? std::sqrt(3.0) : 3.0;
  out.data.X = p <= 64 ? sample_gaussian_rows(n, out.Sigma, rng) : sample_ar1_rows(n, p, 0.6, rng);
  out.data.y = add_noise(out.data.X, out.beta_star, out.sigma, rng);
  out.data.feature_names = default_names(p);
  return out;
}

RawDataset gen_noise_augmented(const RawDataset& base, QuadPolicy quad, Index n_noise, Index batch,
                               double noise_sd, std::uint64_t seed) {
  validate(base);
  if (n_noise < 0 || (n_noise > 0 && batch < 1) || noise_sd < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "bad noise augmentation parameters");
  }
  const Index n = base.n();
  const Index p0 = base.p();
  std::vector<std::string> names =
      base.feature_names.empty() ? default_names(p0) : base.feature_names;

  std::vector<Vector> cols;
  for (Index j = 0; j < p0; ++j) cols.emplace_back(base.X.col(j));
  if (quad == QuadPolicy::All) {
    for (Index j = 0; j < p0; ++j) {
      for (Index k = j; k < p0; ++k) {
        cols.emplace_back(base.X.col(j).cwiseProduct(base.X.col(k)));
        names.push_back(names[static_cast<std::size_t>(j)] + "*" + names[static_cast<std::size_t>(k)]);
      }
    }
  }
  const auto n_true = static_cast<std::uint64_t>(cols.size());

  Rng rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index made = 0, b = 0; made < n_noise; ++b) {
    const Index take = std::min(batch, n_noise - made);
    std::iota(perm.begin(), perm.end(), Index{0});
    rng.shuffle(perm.begin(), perm.end());
    for (Index k = 0; k < take; ++k) {
      const auto src = rng.uniform_index(n_true);
      Vector col(n);
      for (Index i = 0; i < n; ++i) {
        col(i) = cols[src](perm[static_cast<std::size_t>(i)]) + noise_sd * rng.normal();
      }
      cols.push_back(std::move(col));
      names.push_back("noise" + std::to_string(b + 1) + "_" + std::to_string(k + 1));
    }
    made += take;
  }

  RawDataset out;
  out.y = base.y;
  out.X.resize(n, static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.X.col(static_cast<Index>(j)) = cols[j];
  out.feature_names = std::move(names);
  return out;
}

Matrix orthogonal_design(Index n, Index p, Rng& rng) {
  if (p + 1 > n) throw Error(ErrorCode::InvalidArgument, "orthogonal design needs p < n");
  Matrix G(n, p + 1);
  G.col(0).setOnes();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 1; j <= p; ++j) G(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, p + 1);
  return Q.rightCols(p) * std::sqrt(static_cast<double>(n));
}

double model_error(const Vector& beta_hat, const Vector& beta_star, const Matrix& Sigma,
                   double sigma2) {
  if (beta_hat.size() != beta_star.size() || Sigma.rows() != beta_star.size()) {
    throw Error(ErrorCode::DimensionMismatch, "model_error dimensions");
  }
  const Vector d = beta_hat - beta_star;
  return d.dot(Sigma.selfadjointView<Eigen::Upper>() * d) / sigma2;
}

double mrme(const std::vector<double>& me, const std::vector<double>& me_ols) {
  if (me.size() != me_ols.size() || me.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "mrme needs paired, non-empty lists");
  }
  std::vector<double> ratio(me.size());
  for (std::size_t i = 0; i < me.size(); ++i) {
    if (me_ols[i] == 0.0) throw Error(ErrorCode::ZeroOlsError, "OLS model error is zero");
    ratio[i] = me[i] / me_ols[i];
  }
  return 100.0 * median(std::move(ratio));
}

SelectionCounts selection_counts(const std::vector<Index>& selected,
                                 const std::vector<Index>& S_star, Index p) {
  std::vector<std::uint8_t> sel(static_cast<std::size_t>(p), 0);
  std::vector<std::uint8_t> truth(static_cast<std::size_t>(p), 0);
  for (const Index j : selected) sel.at(static_cast<std::size_t>(j)) = 1;
  for (const Index j : S_star) truth.at(static_cast<std::size_t>(j)) = 1;
  SelectionCounts c;
  for (std::size_t j = 0; j < sel.size(); ++j) {
    if (!sel[j]) (truth[j] ? c.incorrect_zeros : c.correct_zeros)++;
  }
  return c;
}

std::vector<Index> support(const Vector& beta) {
  std::vector<Index> s;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) s.push_back(j);
  }
  return s;
}

Vector ols_slopes(const RawDataset& data) {
  const StandardizedDataset sd = standardize(data);
  const Vector b = Eigen::CompleteOrthogonalDecomposition<Matrix>(sd.X).solve(sd.y);
  return sd.slopes_to_original(b);
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Example1: return "example1";
    case Scenario::Example2: return "example2";
    case Scenario::Example3a: return "example3a";
    case Scenario::Example3b: return "example3b";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& s) {
  for (const auto sc : {Scenario::Example1, Scenario::Example2, Scenario::Example3a,
                        Scenario::Example3b}) {
    if (to_string(sc) == s) return sc;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + s + "'");
}

SimData generate(Scenario s, Index n, double sigma, std::uint64_t seed, Ex3Noise noise) {
  switch (s) {
    case Scenario::Example1: return gen_example1(n, sigma, seed);
    case Scenario::Example2: return gen_example2(n, seed);
    case Scenario::Example3a: return gen_example3(Ex3Variant::A, seed, noise, n);
    case Scenario::Example3b: return gen_example3(Ex3Variant::B, seed, noise, n);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown scenario");
}

BenchResult run_bench(const BenchConfig& cfg) {
  if (cfg.reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
  if (cfg.algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "no algorithms selected");
  cfg.hp.validate();
  if (cfg.use_cv) cfg.cv.validate();

  const std::size_t A = cfg.algorithms.size();
  const std::size_t R = static_cast<std::size_t>(cfg.reps);
  std::vector<ReplicateRow> rows(R * (A + 1));
  Index p = 0;
  double sigma = 0.0;

  parallel_for(R, cfg.threads, [&](std::size_t r) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, r);
    const SimData sim = generate(cfg.scenario, cfg.n, cfg.sigma, rep_seed, cfg.ex3_noise);
    const Index pp = sim.data.p();
    if (r == 0) {
      p = pp;
      sigma = sim.sigma;
    }
    const double s2 = sim.sigma * sim.sigma;
    const auto S_star = support(sim.beta_star);

    ReplicateRow ols;
    ols.replicate = static_cast<int>(r);
    ols.algorithm = "ols";
    if (pp < sim.data.n() - 1) {
      const Vector b = ols_slopes(sim.data);
      ols.me = model_error(b, sim.beta_star, sim.Sigma, s2);
      ols.linf = (b - sim.beta_star).cwiseAbs().maxCoeff();
      for (Index j = 0; j < pp; ++j) {
        if (sim.beta_star(j) < 0 && b(j) < 0) ols.neg_sign = true;
      }
      ols.exact = static_cast<Index>(S_star.size()) == pp;
    } else {
      ols.ok = false;
      ols.error = "p >= n - 1";
      ols.me = kNaN;
    }
    ols.me_ols = ols.me;
    rows[r * (A + 1)] = ols;

    const StandardizedDataset sd = standardize(sim.data);
    for (std::size_t a = 0; a < A; ++a) {
      ReplicateRow row;
      row.replicate = static_cast<int>(r);
      row.algorithm = to_string(cfg.algorithms[a]);
      row.me_ols = ols.me;
      const auto start = std::chrono::steady_clock::now();
      try {
        SolverConfig solver;
        solver.algorithm = cfg.algorithms[a];
        solver.componentwise = cfg.componentwise;
        solver.batch = cfg.batch;
        Hyperparameters hp = cfg.hp;
        if (cfg.use_cv) {
          CvConfig cv = cfg.cv;
          cv.seed = derive_seed(rep_seed, 1);
          cv.threads = 1;
          hp.v1 = cv_select_v1(sim.data, hp, cv, solver).best_v1;
        }
        const FitResult fr = fit(sd, hp, solver);
        const Vector b = sd.slopes_to_original(fr.sparse_beta);
        row.v1 = hp.v1;
        row.me = model_error(b, sim.beta_star, sim.Sigma, s2);
        const auto counts = selection_counts(fr.selected, S_star, pp);
        row.correct = counts.correct_zeros;
        row.incorrect = counts.incorrect_zeros;
        row.exact = fr.selected == S_star;
        row.linf = (b - sim.beta_star).cwiseAbs().maxCoeff();
        for (Index j = 0; j < pp; ++j) {
          if (sim.beta_star(j) < 0 && b(j) < 0) row.neg_sign = true;
        }
        row.iterations = fr.iterations;
        row.converged = fr.converged;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count();
      rows[r * (A + 1) + 1 + a] = row;
    }
  });

  BenchResult out;
  out.config = cfg;
  out.p = p;
  out.sigma = sigma;
  out.rows = std::move(rows);

  std::vector<std::string> names{"ols"};
  for (const auto a : cfg.algorithms) names.push_back(to_string(a));
  for (std::size_t a = 0; a < names.size(); ++a) {
    SummaryRow s;
    s.algorithm = names[a];
    std::vector<double> me, me_ols, v1;
    double correct = 0, incorrect = 0, exact = 0;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& row = out.rows[r * (A + 1) + a];
      if (!row.ok) {
        ++s.failures;
        continue;
      }
      ++s.reps_ok;
      me.push_back(row.me);
      if (std::isfinite(row.me_ols)) me_ols.push_back(row.me_ols);
      v1.push_back(row.v1);
      correct += row.correct;
      incorrect += row.incorrect;
      exact += row.exact ? 1 : 0;
      s.neg_sign_count += row.neg_sign ? 1 : 0;
    }
    if (s.reps_ok > 0) {
      const double k = s.reps_ok;
      s.mean_me = std::accumulate(me.begin(), me.end(), 0.0) / k;
      double ss = 0.0;
      for (const double v : me) ss += (v - s.mean_me) * (v - s.mean_me);
      s.sd_me = s.reps_ok > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
      s.median_me = median(me);
      s.mrme = me_ols.size() == me.size() ? mrme(me, me_ols) : kNaN;
      s.avg_correct = correct / k;
      s.avg_incorrect = incorrect / k;
      s.exact_rate = exact / k;
      s.median_v1 = a == 0 ? kNaN : median(v1);
    } else {
      s.mean_me = s.sd_me = s.median_me = s.mrme = s.median_v1 = kNaN;
    }
    out.summary.push_back(s);
  }
  return out;
}

void write_bench_replicates(std::ostream& out, const BenchResult& r) {
  out << "replicate,algorithm,ok,v1,me,me_ols,correct,incorrect,exact,neg_sign,linf,iterations,"
         "converged\n";
  out << std::setprecision(10);
  for (const auto& row : r.rows) {
    out << row.replicate << ',' << row.algorithm << ',' << (row.ok ? 1 : 0) << ',' << row.v1
        << ',' << row.me << ',' << row.me_ols << ',' << row.correct << ',' << row.incorrect << ','
        << (row.exact ? 1 : 0) << ',' << (row.neg_sign ? 1 : 0) << ',' << row.linf << ','
        << row.iterations << ',' << (row.converged ? 1 : 0) << '\n';
  }
}

void write_bench_summary(std::ostream& out, const BenchResult& r) {
  out << "scenario,n,p,sigma,reps,algorithm,reps_ok,failures,mrme,mean_me,sd_me,median_me,"
         "avg_correct,avg_incorrect,exact_rate,neg_sign_count,median_v1\n";
  out << std::setprecision(10);
  const auto& c = r.config;
  for (const auto& s : r.summary) {
    out << to_string(c.scenario) << ',' << c.n << ',' << r.p << ',' << r.sigma << ','
        << c.reps << ',' << s.algorithm << ',' << s.reps_ok << ',' << s.failures << ',' << s.mrme
        << ',' << s.mean_me << ',' << s.sd_me << ',' << s.median_me << ',' << s.avg_correct << ','
        << s.avg_incorrect << ',' << s.exact_rate << ',' << s.neg_sign_count << ',' << s.median_v1
        << '\n';
  }
}

void write_bench_timings(std::ostream& out, const BenchResult& r) {
  out << "replicate,algorithm,wall_ms\n";
  out << std::setprecision(6);
  for (const auto& row : r.rows) {
    if (row.algorithm == "ols") continue;
    out << row.replicate << ',' << row.algorithm << ',' << row.wall_ms << '\n';
  }
}

}  // namespace ssvb
