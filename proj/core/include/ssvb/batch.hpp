#pragma once

#include <functional>
#include <optional>

#include "ssvb/inference.hpp"
#include "ssvb/updates.hpp"

namespace ssvb {

// Box: mu -> s2_j -> phi -> theta -> s2 (the Algorithm 2 listing).
// Prose: s2_j -> mu -> phi -> theta -> s2. mu does not depend on s2_j, so
// both orders give the same iterates; the flag exists for ablation.
enum class UpdateOrder { Box, Prose };

// Plain is the expected residual sum of squares plus nu lambda; Box adds
// (1/v1) sum phi (mu^2 + s2_j) on top.
enum class SigmaNumerator { Box, Plain };

struct BatchConfig {
  int max_iters = 200;
  double entropy_tol = 1e-5;
  bool use_an_correction = true;  // false: a_n = n regardless of the policy
  bool woodbury = false;
  double linear_solver_tol = 1e-10;
  int woodbury_rebuild_every = 25;
  bool audit_woodbury = false;  // also solve directly and record the deviation
  UpdateOrder order = UpdateOrder::Box;
  SigmaNumerator numerator = SigmaNumerator::Box;
  SigmaDenominator denominator = SigmaDenominator::Sum;
  std::optional<double> fixed_theta;   // pins theta_hat and skips its update
  std::optional<double> fixed_sigma2;  // pins sigma2_hat and skips its update
  bool record_elbo = true;
  // Called after every iteration; used by tests to inspect traces.
  std::function<void(const VariationalState&)> on_iteration;

  void validate() const;
};

// Minimal non-zero eigenvalue of X^T X. Computed from X X^T when p > n, which
// has the same non-zero spectrum. Throws AllZeroSpectrum when X = 0.
double compute_a_n(const StandardizedDataset& data);

// a_n under the policy (n when the correction is off). MinNonzeroEigen
// resolves to min(compute_a_n, n).
double resolve_a_n(const StandardizedDataset& data, const Hyperparameters& hp,
                   bool use_an_correction);

// Precomputed products shared by every mu solve on one dataset.
class BatchSystem {
 public:
  explicit BatchSystem(const StandardizedDataset& data);

  const StandardizedDataset& data() const { return *data_; }
  const Vector& Xty() const { return Xty_; }
  // X^T X, formed only when p <= n or when the Woodbury path asks for it.
  const Matrix& gram();

  // Solves (X^T X Phi + n (I - Phi) + (1/v1) I) mu = X^T y.
  Vector solve_mu(const Vector& phi, double v1) const;

 private:
  const StandardizedDataset* data_;
  Vector Xty_;
  Matrix gram_;
  bool have_gram_ = false;
  bool primal_ = false;  // p <= n: solve in the p-dimensional form
};

// Holds A^{-1} for A = B Phi + (n + 1/v1) I with B = X^T X - n I.
class WoodburyCache {
 public:
  WoodburyCache() = default;

  bool valid() const { return valid_; }
  const Matrix& A_inv() const { return A_inv_; }
  const Vector& last_phi() const { return last_phi_; }

  // Fresh inverse of A = B Phi + (n + 1/v1) I. When X has fewer rows than
  // columns it goes through the n x n system instead of a p x p LU.
  void rebuild(const Matrix& gram, const Matrix& X, const Vector& phi, double n, double v1);

  // Number of coordinates whose phi differs from last_phi.
  Index count_changed(const Vector& phi) const;

  // Rank-q update to the new phi. Returns false, leaving the cache
  // unchanged, when the inner q x q system has rcond below tol.
  bool update(const Matrix& gram, const Vector& phi, double n, double tol, int* q_out = nullptr);

 private:
  Matrix A_inv_;
  Vector last_phi_;
  double kappa_ = 0.0;  // n + 1/v1
  double n_ = 0.0;
  bool valid_ = false;
};

VariationalState update_mu_batch(VariationalState state, const StandardizedDataset& data,
                                 const Hyperparameters& hp);

struct WoodburyStep {
  int q = 0;
  bool rebuilt = false;
  bool fell_back = false;
};

// mu from the Woodbury-updated inverse. Rebuilds the cache from scratch when
// it is invalid or the update is ill-conditioned.
VariationalState update_mu_woodbury(VariationalState state, WoodburyCache& cache,
                                    BatchSystem& system, const Hyperparameters& hp, double tol,
                                    WoodburyStep* step = nullptr);

VariationalState update_sigma_j_batch(VariationalState state, const Hyperparameters& hp,
                                      double a_n);

// Batch phi step with truncation and freezing. logits_out, if given, receives
// the unclamped logits of every coordinate.
VariationalState update_phi_batch(VariationalState state, const Hyperparameters& hp,
                                  Vector* logits_out = nullptr);

VariationalState update_sigma2_batch(VariationalState state, const StandardizedDataset& data,
                                     const Hyperparameters& hp,
                                     SigmaNumerator numerator = SigmaNumerator::Box,
                                     SigmaDenominator denominator = SigmaDenominator::Sum);

// phi = 1-c, theta = 1/2, s2 = 1, nothing frozen.
VariationalState initial_batch_state(Index p, const Hyperparameters& hp, double a_n);

FitResult fit_batch(const StandardizedDataset& data, const Hyperparameters& hp,
                    const BatchConfig& cfg = {});

}  // namespace ssvb
