#pragma once

#include "ssvb/model.hpp"

namespace ssvb {

// Denominator of the sigma2 MAP update. Sum (n + sum phi + nu + 2) is the
// exact maximizer of the objective; Product keeps the literal printed form.
enum class SigmaDenominator { Sum, Product };

double logit(double p) noexcept;
double sigmoid(double x) noexcept;
// Bernoulli entropy in nats; H(0) = H(1) = 0.
double bernoulli_entropy(double q) noexcept;

// The phi logit shared by both algorithms:
// logit(theta) + 0.5 log(s2_j / (v1 s2_hat)) + mu_j^2 / (2 s2_j).
double phi_logit(double mu_j, double sigma2_j, double theta_hat, double sigma2_hat,
                 double v1) noexcept;

// theta = (sum phi + a0 - 1) / (p + a0 + b0 - 2), clamped to [c, 1-c].
// Throws DegeneratePrior when the denominator is not positive.
double theta_map(const Vector& phi, const Hyperparameters& hp);

// Returns a copy of state with theta_hat updated.
VariationalState update_theta(VariationalState state, const Hyperparameters& hp);

// Numerator of the per-coordinate sigma2 update, without the nu*lambda
// term: ||y - X beta_bar||^2 + sum_j (n(1-phi)+1/v1) phi mu^2 + (n+1/v1) phi s2_j.
double sigma2_core_numerator(const Vector& mu, const Vector& sigma2_j, const Vector& phi,
                             double residual_ss, double n, double v1);

double sigma2_denominator(const Vector& phi, double n, const Hyperparameters& hp,
                          SigmaDenominator kind);

}  // namespace ssvb
