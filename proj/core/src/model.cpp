#include "ssvb/model.hpp"

#include <cmath>
#include <sstream>

namespace ssvb {

void validate(const RawDataset& raw) {
  if (raw.y.size() != raw.X.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "y has " + std::to_string(raw.y.size()) + " rows, X has " +
                    std::to_string(raw.X.rows()));
  }
  if (raw.n() < 2) throw Error(ErrorCode::InvalidArgument, "need n >= 2 observations");
  if (raw.p() < 1) throw Error(ErrorCode::InvalidArgument, "need p >= 1 features");
  if (!raw.feature_names.empty() && static_cast<Index>(raw.feature_names.size()) != raw.p()) {
    throw Error(ErrorCode::DimensionMismatch, "feature_names length differs from p");
  }
  if (!raw.y.allFinite() || !raw.X.allFinite()) {
    throw Error(ErrorCode::NonFinite, "data contains NaN or Inf");
  }
}

StandardizedDataset standardize(const RawDataset& raw) {
  validate(raw);
  const Index n = raw.n();
  const Index p = raw.p();
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  StandardizedDataset out;
  out.y_mean = raw.y.mean();
  out.y = raw.y.array() - out.y_mean;
  out.col_means = raw.X.colwise().mean().transpose();
  out.col_scales.resize(p);
  out.X.resize(n, p);
  out.feature_names = raw.feature_names;

  for (Index j = 0; j < p; ++j) {
    Vector centered = raw.X.col(j).array() - out.col_means(j);
    const double norm = centered.norm();
    // Relative test: a column whose spread is at rounding level of its mean
    // is constant for our purposes.
    const double ref = std::max(std::abs(out.col_means(j)), raw.X.col(j).cwiseAbs().maxCoeff());
    if (norm == 0.0 || norm <= 1e-13 * ref * sqrt_n) {
      throw Error(ErrorCode::ConstantColumn, "column " + std::to_string(j) + " (" +
                                                 out.feature_name(j) + ") has zero variance");
    }
    out.col_scales(j) = norm / sqrt_n;
    out.X.col(j) = centered / out.col_scales(j);
  }
  return out;
}

Matrix StandardizedDataset::transform(const Eigen::Ref<const Matrix>& X_raw) const {
  if (X_raw.cols() != p()) {
    throw Error(ErrorCode::DimensionMismatch, "new design has " + std::to_string(X_raw.cols()) +
                                                  " columns, expected " + std::to_string(p()));
  }
  Matrix out = X_raw.rowwise() - col_means.transpose();
  out.array().rowwise() /= col_scales.transpose().array();
  return out;
}

Vector StandardizedDataset::slopes_to_original(const Eigen::Ref<const Vector>& beta_std) const {
  if (beta_std.size() != p()) throw Error(ErrorCode::DimensionMismatch, "beta length differs from p");
  return beta_std.cwiseQuotient(col_scales);
}

double StandardizedDataset::intercept_to_original(const Eigen::Ref<const Vector>& beta_std) const {
  return y_mean - col_means.dot(slopes_to_original(beta_std));
}

std::string StandardizedDataset::feature_name(Index j) const {
  if (j >= 0 && j < static_cast<Index>(feature_names.size())) return feature_names[j];
  return "x" + std::to_string(j + 1);
}

RawDataset subset_rows(const RawDataset& raw, const std::vector<Index>& rows) {
  RawDataset out;
  out.y.resize(static_cast<Index>(rows.size()));
  out.X.resize(static_cast<Index>(rows.size()), raw.p());
  out.feature_names = raw.feature_names;
  for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= raw.n()) throw Error(ErrorCode::InvalidArgument, "row index out of range");
    out.y(i) = raw.y(r);
    out.X.row(i) = raw.X.row(r);
  }
  return out;
}

std::string to_string(const AnPolicy& policy) {
  struct Visitor {
    std::string operator()(FixedN) const { return "fixed_n"; }
    std::string operator()(MinNonzeroEigen) const { return "min_nonzero_eigen"; }
    std::string operator()(ExplicitAn e) const {
      std::ostringstream s;
      s << "explicit(" << e.value << ")";
      return s.str();
    }
  };
  return std::visit(Visitor{}, policy);
}

void Hyperparameters::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be positive and finite");
    }
  };
  positive(v1, "v1");
  positive(nu, "nu");
  positive(lambda, "lambda");
  positive(a0, "a0");
  positive(b0, "b0");
  if (!(c > 0.0 && c < 0.5)) throw Error(ErrorCode::InvalidArgument, "c must lie in (0, 0.5)");
  if (const auto* e = std::get_if<ExplicitAn>(&an_policy)) positive(e->value, "a_n");
}

void validate(const VariationalState& s, Index p, double c) {
  if (s.mu.size() != p || s.sigma2_j.size() != p || s.phi.size() != p ||
      static_cast<Index>(s.frozen.size()) != p) {
    throw Error(ErrorCode::DimensionMismatch, "variational state does not match p");
  }
  if (!(s.sigma2_hat > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma2_hat must be positive");
  if ((s.sigma2_j.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "sigma2_j must be positive");
  }
  // Small slack: 1 - (1 - c) is not exactly c in floating point.
  const double slack = 1e-12;
  if ((s.phi.array() < c - slack).any() || (s.phi.array() > 1.0 - c + slack).any()) {
    throw Error(ErrorCode::InvalidArgument, "phi outside [c, 1-c]");
  }
}

}  // namespace ssvb
