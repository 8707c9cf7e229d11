#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ssvb/batch.hpp"
#include "ssvb/simgen.hpp"

namespace ssvb {

// Orthogonal design (X^T X = n I) with y = X beta* + N(0, sigma^2).
struct OrthogonalProbe {
  Index n = 200;
  Index p = 10;
  Vector beta_star;  // length p
  double sigma = 1.0;
  double v1 = 1.0;

  void validate() const;
};

struct ProbeDraw {
  StandardizedDataset data;
  Vector beta_ols;  // X^T y / n
};

ProbeDraw draw_probe(const OrthogonalProbe& probe, std::uint64_t seed);

// 2 logit(phi_j) = -log(v1 n + 1) + (n b_j^2 / sigma^2) n / (n + 1/v1), with
// b the OLS estimate, theta = 1/2 and sigma^2 known.
Vector closed_form_logits(const ProbeDraw& draw, double sigma2, double v1);

// Logits after one Algorithm 2 iteration with a_n = n, theta = 1/2 and
// sigma2_hat pinned at sigma^2.
Vector solver_one_step_logits(const ProbeDraw& draw, double sigma2, double v1);

struct OneStepResult {
  Vector closed_form;
  Vector solver;
  double max_rel_diff = 0.0;  // max |a - b| / max(1, |a|)
};

// Runs both and throws MismatchBeyondTolerance when they disagree by more than tol.
OneStepResult one_step_logits(const OrthogonalProbe& probe, std::uint64_t seed, double tol = 1e-8);

struct GapConfig {
  std::vector<Index> n_grid{200, 800, 3200};
  std::function<Index(Index)> p_of_n;    // default ceil(sqrt(n))
  std::function<double(Index)> v1_of_n;  // default n^2
  Vector signal = (Vector(3) << 1.0, -1.5, 2.0).finished();  // beta on S* = {1..k}
  double sigma = 1.0;
  double C = 2.0;
  int reps = 100;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct GapRow {
  Index n = 0;
  Index p = 0;
  double v1 = 0.0;
  double p_noise_fail = 0.0;   // P(max_{j not in S*} logit > -C/2)
  double p_signal_fail = 0.0;  // P(min_{j in S*} logit < C/2)
  double p_gap_positive = 0.0; // P(min signal logit > max noise logit)
  double median_gap = 0.0;
};

std::vector<GapRow> gap_experiment(const GapConfig& cfg);

struct BayesConsistencyConfig {
  std::vector<Index> n_grid{100, 200, 400, 800};
  int reps = 50;
  std::uint64_t seed = 1;
  // v1 = 100: the noise inclusion logit falls like -log(a_n v1)/2, so with
  // v1 = 1 the p = 8 noise coordinates still hold about 0.2 of the mass at n = 800.
  Hyperparameters hp = [] {
    Hyperparameters h;
    h.v1 = 100.0;
    return h;
  }();
  BatchConfig batch;
  // Fixed sparse truth; default Example 1 with sigma = 1.
  std::function<SimData(Index n, std::uint64_t seed)> scenario;
  int threads = 1;
};

struct BayesConsistencyRow {
  Index n = 0;
  Index p = 0;
  double v1 = 0.0;
  double q10 = 0.0;
  double median_q = 0.0;
  double q90 = 0.0;
  double mean_q = 0.0;
  int bound_violations = 0;  // fits where the product lower bound failed
  int fits = 0;
};

std::vector<BayesConsistencyRow> bayesian_consistency_experiment(const BayesConsistencyConfig& cfg);

// Long format: n,p,v1,metric,value.
void write_gap_csv(std::ostream& out, const std::vector<GapRow>& rows);
void write_consistency_csv(std::ostream& out, const std::vector<BayesConsistencyRow>& rows);

}  // namespace ssvb
