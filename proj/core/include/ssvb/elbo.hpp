#pragma once

#include "ssvb/model.hpp"

namespace ssvb {

// Objective with theta_hat and sigma2_hat treated as point estimates. The
// spike contributes no differential entropy. Every constant that depends on
// neither the variational parameters nor the point estimates is dropped, so
// only differences between values are meaningful.
struct ElboValue {
  double total = 0.0;
  double likelihood_term = 0.0;  // E log p(y | beta, s2)
  double slab_prior_term = 0.0;  // E log N(beta_j; 0, v1 s2) over gamma_j = 1
  double bernoulli_term = 0.0;   // E log p(gamma | theta)
  double hyperprior_term = 0.0;  // log Beta(theta) + log IG(s2), up to constants
  double entropy_term = 0.0;     // Bernoulli entropy + phi-weighted Gaussian entropy
};

ElboValue compute_elbo(const VariationalState& state, const StandardizedDataset& data,
                       const Hyperparameters& hp);

}  // namespace ssvb
