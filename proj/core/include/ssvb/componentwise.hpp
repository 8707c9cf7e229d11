#pragma once

#include <optional>

#include "ssvb/inference.hpp"
#include "ssvb/updates.hpp"

namespace ssvb {

// Starting point for Algorithm 1.
struct InitPolicy {
  double phi = 0.5;
  double theta = 0.5;
  std::optional<double> sigma2;  // default: sample variance of y
};

struct ComponentwiseConfig {
  int max_sweeps = 200;
  double entropy_tol = 1e-5;
  InitPolicy init;
  SigmaDenominator denominator = SigmaDenominator::Sum;
  bool record_elbo = true;

  void validate() const;
};

VariationalState initial_state(const StandardizedDataset& data, const Hyperparameters& hp,
                               const InitPolicy& init);

// Single coordinate update of (mu_j, s2_j, phi_j) against the partial
// residual that excludes j.
VariationalState update_coordinate(Index j, VariationalState state,
                                   const StandardizedDataset& data, const Hyperparameters& hp);

// Same update, in place. `fitted` must equal X (phi .* mu) on entry and is
// kept in sync.
void update_coordinate_inplace(Index j, VariationalState& state, const StandardizedDataset& data,
                               const Hyperparameters& hp, Vector& fitted);

VariationalState update_sigma2_map(VariationalState state, const StandardizedDataset& data,
                                   const Hyperparameters& hp,
                                   SigmaDenominator denominator = SigmaDenominator::Sum);

FitResult fit_componentwise(const StandardizedDataset& data, const Hyperparameters& hp,
                            const ComponentwiseConfig& cfg = {});

}  // namespace ssvb
