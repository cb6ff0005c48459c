#pragma once

#include <iosfwd>
#include <string>

#include "xdef/config.hpp"
#include "xdef/model.hpp"
#include "xdef/runner.hpp"

namespace xdef::train {

struct TrainResult {
    model::Model model;
    int env_steps = 0;
    int updates = 0;
};

// Supervised stage-estimator fit on simulator ground truth, then PPO on
// the shaped reward. The log stream (optional) receives one structured
// record per pretrain epoch and per PPO update.
TrainResult train(const config::ExperimentConfig& cfg, std::uint64_t seed, std::ostream* log);

// cross-entropy fit of the perception stack; exposed for tests
void pretrain_stage_estimator(const config::ExperimentConfig& cfg, model::Model& m,
                              std::uint64_t seed, std::ostream* log);

}  // namespace xdef::train
