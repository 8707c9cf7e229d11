#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ssvb/errors.hpp"

namespace ssvb {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Response y (length n) and design X (n x p) in original units.
struct RawDataset {
  Vector y;
  Matrix X;
  std::vector<std::string> feature_names;  // optional; empty means x1..xp

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }
};

// Throws NonFinite / DimensionMismatch / InvalidArgument when the raw data
// cannot be standardized.
void validate(const RawDataset& raw);

// Centered response and centered design whose columns satisfy ||X_j||^2 = n.
// The means and scales needed to map back to the original units are kept.
struct StandardizedDataset {
  Vector y;
  Matrix X;
  double y_mean = 0.0;
  Vector col_means;
  Vector col_scales;
  std::vector<std::string> feature_names;

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  // Applies this dataset's centering and scaling to new rows in original units.
  Matrix transform(const Eigen::Ref<const Matrix>& X_raw) const;
  // beta on the standardized scale -> slope coefficients in original units.
  Vector slopes_to_original(const Eigen::Ref<const Vector>& beta_std) const;
  // Intercept in original units for the given standardized-scale beta.
  double intercept_to_original(const Eigen::Ref<const Vector>& beta_std) const;
  std::string feature_name(Index j) const;
};

// Each column is centered and multiplied by sqrt(n)/||X_j - mean||, so the
// squared column norm is n (not n-1).
StandardizedDataset standardize(const RawDataset& raw);

// Selects rows (in the given order) of a raw dataset.
RawDataset subset_rows(const RawDataset& raw, const std::vector<Index>& rows);

struct FixedN {};
struct MinNonzeroEigen {};
struct ExplicitAn {
  double value = 0.0;
};
using AnPolicy = std::variant<FixedN, MinNonzeroEigen, ExplicitAn>;

std::string to_string(const AnPolicy& policy);

struct Hyperparameters {
  double v1 = 1.0;      // slab variance scale
  double nu = 1.0;      // inverse-gamma shape input
  double lambda = 1.0;  // inverse-gamma scale input
  double a0 = 1.0;      // Beta prior on theta
  double b0 = 1.0;
  double c = 1e-3;      // phi truncation, phi in [c, 1-c]
  AnPolicy an_policy = MinNonzeroEigen{};

  void validate() const;
};

struct VariationalState {
  Vector mu;        // slab means
  Vector sigma2_j;  // slab variances
  Vector phi;       // inclusion probabilities, in [c, 1-c]
  double theta_hat = 0.5;
  double sigma2_hat = 1.0;
  std::vector<std::uint8_t> frozen;  // 1 once phi_j has hit a truncation bound
  int iter = 0;

  Index p() const { return mu.size(); }
};

// Checks state shape against p and the invariants listed for VariationalState.
void validate(const VariationalState& state, Index p, double c);

// CSV ingestion: header row required; the column named "y" is the response,
// all other columns are features (names kept from the header).
RawDataset read_csv(std::istream& in);
RawDataset read_csv_file(const std::string& path);
void write_csv(std::ostream& out, const RawDataset& data);

}  // namespace ssvb
