#include "ssvb/inference.hpp"

#include <cmath>

#include <json.hpp>

#include "ssvb/updates.hpp"

namespace ssvb {

std::string to_string(Algorithm a) {
  return a == Algorithm::Componentwise ? "alg1" : "alg2";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "alg1" || s == "componentwise") return Algorithm::Componentwise;
  if (s == "alg2" || s == "batch") return Algorithm::Batch;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + s + "'");
}

std::vector<Index> selected_set(const Vector& phi, double cutoff) {
  if (!(cutoff > 0.0 && cutoff < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "cutoff must lie in (0, 1)");
  }
  std::vector<Index> out;
  for (Index j = 0; j < phi.size(); ++j) {
    if (phi(j) > cutoff) out.push_back(j);
  }
  return out;
}

Vector sparse_beta(const VariationalState& state, double cutoff) {
  return (state.phi.array() >= cutoff).select(state.mu, 0.0);
}

void finalize(FitResult& fit, double cutoff) {
  fit.selected = selected_set(fit.state.phi, cutoff);
  fit.sparse_beta = sparse_beta(fit.state, cutoff);
}

double log_model_probability(const std::vector<std::uint8_t>& gamma, const Vector& phi) {
  if (static_cast<Index>(gamma.size()) != phi.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gamma length differs from phi");
  }
  double acc = 0.0;
  for (Index j = 0; j < phi.size(); ++j) {
    acc += gamma[static_cast<std::size_t>(j)] ? std::log(phi(j)) : std::log1p(-phi(j));
  }
  return acc;
}

double model_probability(const std::vector<std::uint8_t>& gamma, const Vector& phi) {
  return std::exp(log_model_probability(gamma, phi));
}

double model_probability_lower_bound(const std::vector<std::uint8_t>& gamma, const Vector& phi) {
  if (static_cast<Index>(gamma.size()) != phi.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gamma length differs from phi");
  }
  double miss = 0.0;
  for (Index j = 0; j < phi.size(); ++j) {
    miss += gamma[static_cast<std::size_t>(j)] ? 1.0 - phi(j) : phi(j);
  }
  return 1.0 - miss;
}

std::vector<std::uint8_t> indicator(const std::vector<Index>& set, Index p) {
  std::vector<std::uint8_t> g(static_cast<std::size_t>(p), 0);
  for (const Index j : set) {
    if (j < 0 || j >= p) throw Error(ErrorCode::InvalidArgument, "index out of range");
    g[static_cast<std::size_t>(j)] = 1;
  }
  return g;
}

double max_entropy_change(const Vector& phi_prev, const Vector& phi_curr) {
  if (phi_prev.size() != phi_curr.size()) {
    throw Error(ErrorCode::DimensionMismatch, "phi vectors differ in length");
  }
  double worst = 0.0;
  for (Index j = 0; j < phi_curr.size(); ++j) {
    worst = std::max(worst, std::abs(bernoulli_entropy(phi_curr(j)) -
                                     bernoulli_entropy(phi_prev(j))));
  }
  return worst;
}

Vector predict_sparse(const FitResult& fit, const StandardizedDataset& train,
                      const Matrix& X_new) {
  if (fit.sparse_beta.size() != train.p()) {
    throw Error(ErrorCode::DimensionMismatch, "fit does not match training data");
  }
  const Matrix Z = train.transform(X_new);
  return (Z * fit.sparse_beta).array() + train.y_mean;
}

Vector predict_two_stage(const FitResult& fit, const StandardizedDataset& train,
                         const Matrix& X_new, TwoStageInfo* info) {
  if (fit.state.phi.size() != train.p()) {
    throw Error(ErrorCode::DimensionMismatch, "fit does not match training data");
  }
  const Matrix Z = train.transform(X_new);
  const auto& S = fit.selected;
  if (S.empty()) {
    if (info) *info = TwoStageInfo{};
    return Vector::Constant(X_new.rows(), train.y_mean);
  }
  const auto k = static_cast<Index>(S.size());
  Matrix Xs(train.n(), k);
  Matrix Zs(Z.rows(), k);
  for (Index c = 0; c < k; ++c) {
    Xs.col(c) = train.X.col(S[static_cast<std::size_t>(c)]);
    Zs.col(c) = Z.col(S[static_cast<std::size_t>(c)]);
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xs);
  const Vector b = cod.solve(train.y);
  if (info) {
    info->rank = cod.rank();
    info->rank_deficient = cod.rank() < k;
  }
  return (Zs * b).array() + train.y_mean;
}

std::string to_json(const FitResult& fit, const StandardizedDataset& data, int indent) {
  using nlohmann::json;
  const auto& s = fit.state;
  json doc;
  doc["schema"] = 1;
  doc["algorithm"] = to_string(fit.algorithm);
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;
  doc["theta_hat"] = s.theta_hat;
  doc["sigma2_hat"] = s.sigma2_hat;
  doc["v1"] = fit.v1;
  doc["a_n"] = fit.stats.a_n;
  doc["intercept"] = data.intercept_to_original(fit.sparse_beta);

  const Vector beta_orig = data.slopes_to_original(fit.sparse_beta);
  std::vector<std::uint8_t> in(static_cast<std::size_t>(s.p()), 0);
  for (const Index j : fit.selected) in[static_cast<std::size_t>(j)] = 1;
  json features = json::array();
  for (Index j = 0; j < s.p(); ++j) {
    features.push_back({{"name", data.feature_name(j)},
                        {"mu", s.mu(j)},
                        {"sigma2_j", s.sigma2_j(j)},
                        {"phi", s.phi(j)},
                        {"selected", in[static_cast<std::size_t>(j)] != 0},
                        {"beta", beta_orig(j)}});
  }
  doc["features"] = std::move(features);
  return doc.dump(indent);
}

}  // namespace ssvb
