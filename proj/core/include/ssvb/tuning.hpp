#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "ssvb/fit.hpp"

namespace ssvb {

enum class Scoring { MspeSparse, MspeTwoStage };

// 9 log-spaced points on [1, 100].
std::vector<double> default_v1_grid();
// n log-spaced points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

struct CvConfig {
  int folds = 5;
  std::vector<double> v1_grid = default_v1_grid();
  Scoring scoring = Scoring::MspeSparse;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct Fold {
  std::vector<Index> train;
  std::vector<Index> valid;
};

// Random partition of 0..n-1 into `folds` parts whose sizes differ by at most one.
std::vector<Fold> kfold_splits(Index n, int folds, std::uint64_t seed);

struct CvRow {
  double v1 = 0.0;
  double mean_mspe = 0.0;
  double stderr_mspe = 0.0;
  int n_folds_ok = 0;
};

struct CvResult {
  double best_v1 = 0.0;
  std::vector<CvRow> table;
};

// Fits every (grid point, fold) pair, standardizing on the training rows
// only, and picks the v1 with the smallest mean validation MSPE. Ties go to
// the larger v1. Grid points where any fold failed are not eligible.
CvResult cv_select_v1(const RawDataset& data, const Hyperparameters& hp_base, const CvConfig& cfg,
                      const SolverConfig& solver);

void write_cv_table(std::ostream& out, const CvResult& result);

}  // namespace ssvb
