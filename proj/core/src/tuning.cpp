#include "ssvb/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "ssvb/parallel.hpp"
#include "ssvb/rng.hpp"

namespace ssvb {

std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0.0) || !(hi >= lo)) {
    throw Error(ErrorCode::InvalidArgument, "bad log grid");
  }
  std::vector<double> g(static_cast<std::size_t>(n));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int k = 0; k < n; ++k) {
    g[static_cast<std::size_t>(k)] = n == 1 ? lo : std::pow(10.0, a + (b - a) * k / (n - 1));
  }
  return g;
}

std::vector<double> default_v1_grid() { return log_grid(1.0, 100.0, 9); }

void CvConfig::validate() const {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "folds must be >= 2");
  if (v1_grid.empty()) throw Error(ErrorCode::InvalidArgument, "v1 grid is empty");
  for (const double v : v1_grid) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "v1 grid values must be positive");
    }
  }
}

std::vector<Fold> kfold_splits(Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "folds must be >= 2");
  if (n < folds) {
    throw Error(ErrorCode::TooFewSamples, std::to_string(n) + " rows cannot form " +
                                              std::to_string(folds) + " folds");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(derive_seed(seed, 0x6b666f6c64ULL));
  rng.shuffle(perm.begin(), perm.end());

  std::vector<int> owner(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) owner[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = static_cast<int>(i % folds);

  std::vector<Fold> out(static_cast<std::size_t>(folds));
  for (Index i = 0; i < n; ++i) {
    const int f = owner[static_cast<std::size_t>(i)];
    for (int k = 0; k < folds; ++k) {
      auto& fold = out[static_cast<std::size_t>(k)];
      (k == f ? fold.valid : fold.train).push_back(i);
    }
  }
  return out;
}

CvResult cv_select_v1(const RawDataset& data, const Hyperparameters& hp_base, const CvConfig& cfg,
                      const SolverConfig& solver) {
  cfg.validate();
  validate(data);
  const auto folds = kfold_splits(data.n(), cfg.folds, cfg.seed);
  const std::size_t G = cfg.v1_grid.size();
  const std::size_t F = folds.size();

  // Standardization depends only on the fold, so do it once per fold.
  std::vector<StandardizedDataset> train(F);
  std::vector<RawDataset> valid(F);
  std::vector<std::uint8_t> fold_ok(F, 1);
  for (std::size_t f = 0; f < F; ++f) {
    try {
      train[f] = standardize(subset_rows(data, folds[f].train));
      valid[f] = subset_rows(data, folds[f].valid);
    } catch (const Error&) {
      fold_ok[f] = 0;  // e.g. a column constant within the training rows
    }
  }

  std::vector<double> mspe(G * F, std::numeric_limits<double>::quiet_NaN());
  parallel_for(G * F, cfg.threads, [&](std::size_t task) {
    const std::size_t g = task / F;
    const std::size_t f = task % F;
    if (!fold_ok[f]) return;
    Hyperparameters hp = hp_base;
    hp.v1 = cfg.v1_grid[g];
    try {
      const FitResult fr = fit(train[f], hp, solver);
      const Vector pred = cfg.scoring == Scoring::MspeSparse
                              ? predict_sparse(fr, train[f], valid[f].X)
                              : predict_two_stage(fr, train[f], valid[f].X);
      mspe[task] = (pred - valid[f].y).squaredNorm() / static_cast<double>(valid[f].y.size());
    } catch (const Error&) {
      // recorded as NaN; the grid point becomes ineligible
    }
  });

  CvResult out;
  out.table.resize(G);
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t g = 0; g < G; ++g) {
    CvRow& row = out.table[g];
    row.v1 = cfg.v1_grid[g];
    std::vector<double> ok;
    for (std::size_t f = 0; f < F; ++f) {
      const double v = mspe[g * F + f];
      if (std::isfinite(v)) ok.push_back(v);
    }
    row.n_folds_ok = static_cast<int>(ok.size());
    if (ok.empty()) {
      row.mean_mspe = row.stderr_mspe = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double k = static_cast<double>(ok.size());
    row.mean_mspe = std::accumulate(ok.begin(), ok.end(), 0.0) / k;
    double ss = 0.0;
    for (const double v : ok) ss += (v - row.mean_mspe) * (v - row.mean_mspe);
    row.stderr_mspe = ok.size() > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;

    if (row.n_folds_ok != static_cast<int>(F)) continue;
    const bool better = row.mean_mspe < best ||
                        (row.mean_mspe == best && found && row.v1 > out.best_v1);
    if (!found || better) {
      best = row.mean_mspe;
      out.best_v1 = row.v1;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::SingularSystem, "every grid point had a failing fold");
  return out;
}

void write_cv_table(std::ostream& out, const CvResult& result) {
  out << "v1,mean_mspe,stderr,n_folds_ok\n";
  out << std::setprecision(10);
  for (const auto& r : result.table) {
    out << r.v1 << ',' << r.mean_mspe << ',' << r.stderr_mspe << ',' << r.n_folds_ok << '\n';
  }
}

}  // namespace ssvb
