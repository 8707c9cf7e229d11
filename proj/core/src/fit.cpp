#include "ssvb/fit.hpp"

namespace ssvb {

FitResult fit(const StandardizedDataset& data, const Hyperparameters& hp, const SolverConfig& cfg) {
  if (cfg.algorithm == Algorithm::Componentwise) {
    return fit_componentwise(data, hp, cfg.componentwise);
  }
  return fit_batch(data, hp, cfg.batch);
}

}  // namespace ssvb
