#pragma once

#include <string>
#include <vector>

#include "ssvb/model.hpp"

namespace ssvb {

enum class Algorithm { Componentwise, Batch };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);  // "alg1" / "alg2"

// Per-iteration bookkeeping that only the batch solver fills in.
struct SolverStats {
  double a_n = 0.0;
  std::vector<int> woodbury_q;            // changed coordinates per iteration
  std::vector<double> woodbury_deviation;  // audit: max |mu_wood - mu_direct| / (1 + |mu_direct|)
  int woodbury_rebuilds = 0;
  int woodbury_fallbacks = 0;
  Vector last_logits;  // unclamped logits from the final phi step
};

struct FitResult {
  VariationalState state;
  std::vector<Index> selected;  // phi_j > 0.5
  Vector sparse_beta;           // mu_j where phi_j >= 0.5
  std::vector<double> elbo_trace;
  std::vector<double> entropy_trace;  // max entropy change per iteration
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  Algorithm algorithm = Algorithm::Batch;
  double v1 = 0.0;
  SolverStats stats;
};

// {j : phi_j > cutoff}; ties are excluded.
std::vector<Index> selected_set(const Vector& phi, double cutoff = 0.5);

// mu_j if phi_j >= cutoff, else 0.
Vector sparse_beta(const VariationalState& state, double cutoff = 0.5);

// Fills selected and sparse_beta from state.
void finalize(FitResult& fit, double cutoff = 0.5);

// q(gamma) = prod phi^gamma (1-phi)^(1-gamma), via its logarithm.
double log_model_probability(const std::vector<std::uint8_t>& gamma, const Vector& phi);
double model_probability(const std::vector<std::uint8_t>& gamma, const Vector& phi);
// 1 - sum_{gamma_j=1} (1-phi_j) - sum_{gamma_j=0} phi_j, a lower bound on q(gamma).
double model_probability_lower_bound(const std::vector<std::uint8_t>& gamma, const Vector& phi);

std::vector<std::uint8_t> indicator(const std::vector<Index>& set, Index p);

// max_j |H(curr_j) - H(prev_j)| in nats.
double max_entropy_change(const Vector& phi_prev, const Vector& phi_curr);

// Method "S": X_new (original units) -> predictions in original units using
// the training standardization.
Vector predict_sparse(const FitResult& fit, const StandardizedDataset& train,
                      const Matrix& X_new);

struct TwoStageInfo {
  Index rank = 0;
  bool rank_deficient = false;
};

// Method "TS": least squares refit on the selected columns, then predict.
// Rank deficiency is reported through info and the least-norm solution is used.
Vector predict_two_stage(const FitResult& fit, const StandardizedDataset& train,
                         const Matrix& X_new, TwoStageInfo* info = nullptr);

// FitResult as a versioned JSON document.
std::string to_json(const FitResult& fit, const StandardizedDataset& data, int indent = 2);

}  // namespace ssvb
