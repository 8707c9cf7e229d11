#include "ssvb/elbo.hpp"

#include <cmath>
#include <numbers>

#include "ssvb/updates.hpp"

namespace ssvb {

ElboValue compute_elbo(const VariationalState& s, const StandardizedDataset& data,
                       const Hyperparameters& hp) {
  const Index p = data.p();
  if (s.mu.size() != p || s.phi.size() != p || s.sigma2_j.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "state length differs from p");
  }
  const double n = static_cast<double>(data.n());
  const double two_pi = 2.0 * std::numbers::pi;
  const double s2 = s.sigma2_hat;
  const double v1 = hp.v1;

  const auto phi = s.phi.array();
  const auto mu2 = s.mu.array().square();
  const auto sj = s.sigma2_j.array();

  // E||y - X beta||^2 = ||y - X beta_bar||^2 + sum_j ||X_j||^2 Var(beta_j),
  // with Var(beta_j) = phi (mu^2 + s2_j) - phi^2 mu^2 and ||X_j||^2 = n.
  const Vector beta_bar = s.phi.cwiseProduct(s.mu);
  const double rss = (data.y - data.X * beta_bar).squaredNorm();
  const double var_sum = (phi * (mu2 + sj) - phi.square() * mu2).sum();
  const double expected_ss = rss + n * var_sum;

  ElboValue e;
  e.likelihood_term = -0.5 * n * std::log(two_pi * s2) - expected_ss / (2.0 * s2);
  e.slab_prior_term =
      (phi * (-0.5 * std::log(two_pi * v1 * s2) - (mu2 + sj) / (2.0 * v1 * s2))).sum();

  const double lt = std::log(s.theta_hat);
  const double l1t = std::log1p(-s.theta_hat);
  e.bernoulli_term = (phi * lt + (1.0 - phi) * l1t).sum();
  e.hyperprior_term = (hp.a0 - 1.0) * lt + (hp.b0 - 1.0) * l1t -
                      (hp.nu / 2.0 + 1.0) * std::log(s2) - hp.nu * hp.lambda / (2.0 * s2);

  double h = 0.0;
  for (Index j = 0; j < p; ++j) {
    h += bernoulli_entropy(s.phi(j)) +
         s.phi(j) * 0.5 * std::log(two_pi * std::numbers::e * s.sigma2_j(j));
  }
  e.entropy_term = h;
  e.total = e.likelihood_term + e.slab_prior_term + e.bernoulli_term + e.hyperprior_term +
            e.entropy_term;
  return e;
}

}  // namespace ssvb
