#pragma once

#include "ssvb/batch.hpp"
#include "ssvb/componentwise.hpp"

namespace ssvb {

// Which solver to run and with what settings.
struct SolverConfig {
  Algorithm algorithm = Algorithm::Batch;
  ComponentwiseConfig componentwise;
  BatchConfig batch;
};

FitResult fit(const StandardizedDataset& data, const Hyperparameters& hp, const SolverConfig& cfg);

}  // namespace ssvb
