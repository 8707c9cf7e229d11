#include "ssvb/updates.hpp"

#include <algorithm>
#include <cmath>

namespace ssvb {

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double bernoulli_entropy(double q) noexcept {
  if (q <= 0.0 || q >= 1.0) return 0.0;
  return -q * std::log(q) - (1.0 - q) * std::log1p(-q);
}

double phi_logit(double mu_j, double sigma2_j, double theta_hat, double sigma2_hat,
                 double v1) noexcept {
  return logit(theta_hat) + 0.5 * std::log(sigma2_j / (v1 * sigma2_hat)) +
         mu_j * mu_j / (2.0 * sigma2_j);
}

double theta_map(const Vector& phi, const Hyperparameters& hp) {
  const double denom = static_cast<double>(phi.size()) + hp.a0 + hp.b0 - 2.0;
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::DegeneratePrior, "p + a0 + b0 - 2 must be positive");
  }
  const double theta = (phi.sum() + hp.a0 - 1.0) / denom;
  return std::clamp(theta, hp.c, 1.0 - hp.c);
}

VariationalState update_theta(VariationalState state, const Hyperparameters& hp) {
  state.theta_hat = theta_map(state.phi, hp);
  return state;
}

double sigma2_core_numerator(const Vector& mu, const Vector& sigma2_j, const Vector& phi,
                             double residual_ss, double n, double v1) {
  const double iv = 1.0 / v1;
  const auto one_minus = 1.0 - phi.array();
  return residual_ss +
         ((n * one_minus + iv) * phi.array() * mu.array().square()).sum() +
         ((n + iv) * phi.array() * sigma2_j.array()).sum();
}

double sigma2_denominator(const Vector& phi, double n, const Hyperparameters& hp,
                          SigmaDenominator kind) {
  const double mass = kind == SigmaDenominator::Sum ? phi.sum() : phi.prod();
  return n + mass + hp.nu + 2.0;
}

}  // namespace ssvb
