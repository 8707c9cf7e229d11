#include "ssvb/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "ssvb/parallel.hpp"

namespace ssvb {

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

void OrthogonalProbe::validate() const {
  if (p < 1 || p + 1 > n) throw Error(ErrorCode::InvalidArgument, "probe needs 1 <= p < n");
  if (beta_star.size() != p) throw Error(ErrorCode::DimensionMismatch, "beta_star length != p");
  if (!(sigma >= 0.0) || !(v1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad sigma or v1");
}

ProbeDraw draw_probe(const OrthogonalProbe& probe, std::uint64_t seed) {
  probe.validate();
  Rng rng(seed);
  RawDataset raw;
  raw.X = orthogonal_design(probe.n, probe.p, rng);
  raw.y = raw.X * probe.beta_star;
  for (Index i = 0; i < probe.n; ++i) raw.y(i) += probe.sigma * rng.normal();
  ProbeDraw d;
  d.data = standardize(raw);
  d.beta_ols = d.data.X.transpose() * d.data.y / static_cast<double>(probe.n);
  return d;
}

Vector closed_form_logits(const ProbeDraw& draw, double sigma2, double v1) {
  const double n = static_cast<double>(draw.data.n());
  const double shrink = n / (n + 1.0 / v1);
  return 0.5 * (-std::log(v1 * n + 1.0) +
                (n * draw.beta_ols.array().square() / sigma2) * shrink);
}

Vector solver_one_step_logits(const ProbeDraw& draw, double sigma2, double v1) {
  Hyperparameters hp;
  hp.v1 = v1;
  hp.an_policy = FixedN{};
  BatchConfig cfg;
  cfg.max_iters = 1;
  cfg.fixed_theta = 0.5;
  cfg.fixed_sigma2 = sigma2;
  cfg.record_elbo = false;
  return fit_batch(draw.data, hp, cfg).stats.last_logits;
}

OneStepResult one_step_logits(const OrthogonalProbe& probe, std::uint64_t seed, double tol) {
  const ProbeDraw draw = draw_probe(probe, seed);
  const double s2 = probe.sigma * probe.sigma;
  OneStepResult r;
  r.closed_form = closed_form_logits(draw, s2, probe.v1);
  r.solver = solver_one_step_logits(draw, s2, probe.v1);
  r.max_rel_diff = ((r.solver - r.closed_form).array().abs() /
                    r.closed_form.array().abs().max(1.0))
                       .maxCoeff();
  if (!(r.max_rel_diff <= tol)) {
    throw Error(ErrorCode::MismatchBeyondTolerance,
                "one-step logits differ from the closed form by " + std::to_string(r.max_rel_diff));
  }
  return r;
}

std::vector<GapRow> gap_experiment(const GapConfig& cfg) {
  if (cfg.reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
  const auto p_of_n = cfg.p_of_n ? cfg.p_of_n : [](Index n) {
    return static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n))));
  };
  const auto v1_of_n = cfg.v1_of_n ? cfg.v1_of_n : [](Index n) {
    return static_cast<double>(n) * static_cast<double>(n);
  };
  const Index k = cfg.signal.size();
  const double s2 = cfg.sigma * cfg.sigma;

  std::vector<GapRow> out;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    const Index n = cfg.n_grid[g];
    OrthogonalProbe probe;
    probe.n = n;
    probe.p = p_of_n(n);
    probe.v1 = v1_of_n(n);
    probe.sigma = cfg.sigma;
    if (probe.p <= k) throw Error(ErrorCode::InvalidArgument, "p_of_n must exceed |S*|");
    probe.beta_star = Vector::Zero(probe.p);
    probe.beta_star.head(k) = cfg.signal;

    std::vector<double> noise_max(static_cast<std::size_t>(cfg.reps));
    std::vector<double> signal_min(static_cast<std::size_t>(cfg.reps));
    parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
      const ProbeDraw draw = draw_probe(probe, derive_seed(derive_seed(cfg.seed, g), r));
      const Vector z = solver_one_step_logits(draw, s2, probe.v1);
      signal_min[r] = z.head(k).minCoeff();
      noise_max[r] = z.tail(probe.p - k).maxCoeff();
    });

    GapRow row;
    row.n = n;
    row.p = probe.p;
    row.v1 = probe.v1;
    std::vector<double> gap;
    for (std::size_t r = 0; r < noise_max.size(); ++r) {
      row.p_noise_fail += noise_max[r] > -cfg.C / 2.0 ? 1 : 0;
      row.p_signal_fail += signal_min[r] < cfg.C / 2.0 ? 1 : 0;
      row.p_gap_positive += signal_min[r] > noise_max[r] ? 1 : 0;
      gap.push_back(signal_min[r] - noise_max[r]);
    }
    row.p_noise_fail /= cfg.reps;
    row.p_signal_fail /= cfg.reps;
    row.p_gap_positive /= cfg.reps;
    row.median_gap = quantile(gap, 0.5);
    out.push_back(row);
  }
  return out;
}

std::vector<BayesConsistencyRow> bayesian_consistency_experiment(const BayesConsistencyConfig& cfg) {
  if (cfg.reps < 1) throw Error(ErrorCode::InvalidArgument, "reps must be >= 1");
  const auto scenario = cfg.scenario ? cfg.scenario : [](Index n, std::uint64_t seed) {
    return gen_example1(n, 1.0, seed);
  };

  std::vector<BayesConsistencyRow> out;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    const Index n = cfg.n_grid[g];
    std::vector<double> q(static_cast<std::size_t>(cfg.reps));
    std::vector<std::uint8_t> violated(static_cast<std::size_t>(cfg.reps), 0);
    Index p = 0;
    parallel_for(static_cast<std::size_t>(cfg.reps), cfg.threads, [&](std::size_t r) {
      const SimData sim = scenario(n, derive_seed(derive_seed(cfg.seed, g), r));
      const StandardizedDataset sd = standardize(sim.data);
      const FitResult fr = fit_batch(sd, cfg.hp, cfg.batch);
      const auto gamma = indicator(support(sim.beta_star), sd.p());
      q[r] = model_probability(gamma, fr.state.phi);
      const double bound = model_probability_lower_bound(gamma, fr.state.phi);
      violated[r] = bound > q[r] + 1e-12 ? 1 : 0;
      if (r == 0) p = sd.p();
    });
    BayesConsistencyRow row;
    row.n = n;
    row.p = p;
    row.v1 = cfg.hp.v1;
    row.q10 = quantile(q, 0.1);
    row.median_q = quantile(q, 0.5);
    row.q90 = quantile(q, 0.9);
    double sum = 0.0;
    for (const double v : q) sum += v;
    row.mean_q = sum / static_cast<double>(q.size());
    for (const auto v : violated) row.bound_violations += v;
    row.fits = cfg.reps;
    out.push_back(row);
  }
  return out;
}

void write_gap_csv(std::ostream& out, const std::vector<GapRow>& rows) {
  out << "n,p,v1,metric,value\n" << std::setprecision(10);
  for (const auto& r : rows) {
    const auto emit = [&](const char* metric, double v) {
      out << r.n << ',' << r.p << ',' << r.v1 << ',' << metric << ',' << v << '\n';
    };
    emit("p_noise_fail", r.p_noise_fail);
    emit("p_signal_fail", r.p_signal_fail);
    emit("p_gap_positive", r.p_gap_positive);
    emit("median_gap", r.median_gap);
  }
}

void write_consistency_csv(std::ostream& out, const std::vector<BayesConsistencyRow>& rows) {
  out << "n,p,v1,metric,value\n" << std::setprecision(10);
  for (const auto& r : rows) {
    const auto emit = [&](const char* metric, double v) {
      out << r.n << ',' << r.p << ',' << r.v1 << ',' << metric << ',' << v << '\n';
    };
    emit("q10", r.q10);
    emit("median_q", r.median_q);
    emit("q90", r.q90);
    emit("mean_q", r.mean_q);
    emit("bound_violations", r.bound_violations);
  }
}

}  // namespace ssvb
