#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ssvb/fit.hpp"
#include "ssvb/rng.hpp"
#include "ssvb/tuning.hpp"

namespace ssvb {

// A simulated dataset with the truth needed to score it.
struct SimData {
  RawDataset data;
  Vector beta_star;
  Matrix Sigma;  // population covariance of a row of X
  double sigma = 1.0;
};

// Rows i.i.d. N(0, Sigma) through the Cholesky factor.
Matrix sample_gaussian_rows(Index n, const Matrix& Sigma, Rng& rng);
// Rows i.i.d. with Cov(x_j, x_k) = rho^|j-k| via x_j = rho x_{j-1} + sqrt(1-rho^2) z_j.
Matrix sample_ar1_rows(Index n, Index p, double rho, Rng& rng);
Matrix ar1_covariance(Index p, double rho);

// p = 8, beta* = (3, 1.5, 0, 0, 2, 0, 0, 0), Cov = 0.5^|i-j|.
SimData gen_example1(Index n, double sigma, std::uint64_t seed);

// p = 40, beta* = (3, 3, -2, 3, 3, -2, 0, ...), blocks {1,2,3} and {4,5,6}
// with pairwise correlation 0.9, sigma = 6.
SimData gen_example2(Index n, std::uint64_t seed, double sigma = 6.0);

enum class Ex3Variant { A, B };
enum class Ex3Noise { Variance3, Sd3 };

// p = 1000, Cov = 0.6^|i-j|. A: beta* = (3, 2, 1, 0, ...). B: the first 20
// coefficients are a shuffle of ten 1s, seven 2s and three 3s.
SimData gen_example3(Ex3Variant variant, std::uint64_t seed, Ex3Noise noise = Ex3Noise::Variance3,
                     Index n = 100, Index p = 1000);

enum class QuadPolicy { None, All };

// Appends squares and pairwise products of the base columns (if requested),
// then n_noise pseudo-features built in batches: each batch copies `batch`
// randomly chosen columns, adds N(0, noise_sd^2) noise and shuffles the rows
// with one permutation shared by the batch.
RawDataset gen_noise_augmented(const RawDataset& base, QuadPolicy quad, Index n_noise, Index batch,
                               double noise_sd, std::uint64_t seed);

// Columns with X^T X = n I, orthogonal to the intercept.
Matrix orthogonal_design(Index n, Index p, Rng& rng);

// (b - b*)^T Sigma (b - b*) / sigma2.
double model_error(const Vector& beta_hat, const Vector& beta_star, const Matrix& Sigma,
                   double sigma2);

// 100 * median(me_i / me_ols_i). Throws ZeroOlsError if any OLS error is 0.
double mrme(const std::vector<double>& me, const std::vector<double>& me_ols);

struct SelectionCounts {
  int correct_zeros = 0;
  int incorrect_zeros = 0;
};

SelectionCounts selection_counts(const std::vector<Index>& selected,
                                 const std::vector<Index>& S_star, Index p);

std::vector<Index> support(const Vector& beta);

// Least squares slopes (original units) of y on X with an intercept.
// Least-norm when X is rank deficient.
Vector ols_slopes(const RawDataset& data);

enum class Scenario { Example1, Example2, Example3a, Example3b };
std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

struct BenchConfig {
  Scenario scenario = Scenario::Example1;
  Index n = 60;
  double sigma = 1.0;  // ignored for Example 2 (fixed at 6) and Example 3
  int reps = 100;
  std::uint64_t seed = 1;
  std::vector<Algorithm> algorithms{Algorithm::Componentwise, Algorithm::Batch};
  bool use_cv = true;  // false: hp.v1 is used as is
  CvConfig cv;
  Hyperparameters hp;
  ComponentwiseConfig componentwise;
  BatchConfig batch;
  Ex3Noise ex3_noise = Ex3Noise::Variance3;
  int threads = 1;
};

struct ReplicateRow {
  int replicate = 0;
  std::string algorithm;
  bool ok = true;
  std::string error;
  double v1 = 0.0;
  double me = 0.0;
  double me_ols = 0.0;  // NaN when OLS is undefined (p >= n)
  int correct = 0;
  int incorrect = 0;
  bool exact = false;     // selected set equals the true support
  bool neg_sign = false;  // some negative true coefficient estimated negative
  double linf = 0.0;      // max |beta_hat - beta*|
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
};

struct SummaryRow {
  std::string algorithm;
  int reps_ok = 0;
  int failures = 0;
  double mrme = 0.0;
  double mean_me = 0.0;
  double sd_me = 0.0;
  double median_me = 0.0;
  double avg_correct = 0.0;
  double avg_incorrect = 0.0;
  double exact_rate = 0.0;
  int neg_sign_count = 0;
  double median_v1 = 0.0;
};

struct BenchResult {
  BenchConfig config;
  Index p = 0;
  double sigma = 0.0;  // noise sd actually used by the generator
  std::vector<ReplicateRow> rows;  // ordered by (replicate, algorithm)
  std::vector<SummaryRow> summary;
};

SimData generate(Scenario s, Index n, double sigma, std::uint64_t seed, Ex3Noise noise);

BenchResult run_bench(const BenchConfig& cfg);

// Deterministic columns only; timings go to write_bench_timings.
void write_bench_replicates(std::ostream& out, const BenchResult& r);
void write_bench_summary(std::ostream& out, const BenchResult& r);
void write_bench_timings(std::ostream& out, const BenchResult& r);

}  // namespace ssvb
