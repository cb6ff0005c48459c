#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xdef/aptsim.hpp"
#include "xdef/objective.hpp"
#include "xdef/perception.hpp"
#include "xdef/policy.hpp"

namespace xdef::config {

struct ModelConfig {
    int F = prov::kNodeFeatureDim;
    int d = 32;
    int K = 7;
    int d_b = 64;
    int L = 2;
    int window = 3;  // provenance graph construction window
};

struct ExplainConfig {
    int steps = 100;
    double rate = 1e-2;
    double coverage = 0.9;
    int explain_every = 1;  // 0 disables explanation entirely
    double sparsity = 0.005;
    double entropy_reg = 0.1;
};

struct ObjectiveConfig {
    double lambda1 = 0.1;
    double lambda2 = 0.05;
    double alpha = 0.4;
    double beta = 0.2;
    double gamma = 0.4;
};

struct TrainConfig {
    long total_steps = 50000;
    int eval_episodes = 50;
    int pretrain_episodes = 96;
    int pretrain_epochs = 3;
    double pretrain_lr = 1e-3;
    std::uint64_t seed = 1;
};

struct ExperimentConfig {
    aptsim::SimConfig sim;
    ModelConfig model;
    ExplainConfig explain;
    ObjectiveConfig objective;
    policy::PpoConfig ppo;
    TrainConfig train;
    std::string out_dir = "out";

    percept::Dims dims() const {
        percept::Dims d;
        d.F = model.F;
        d.d = model.d;
        d.K = model.K;
        d.d_b = model.d_b;
        d.L = model.L;
        d.n_actions = policy::kNumActions;
        return d;
    }
    objective::ConfWeights conf_weights() const { return {objective.alpha, objective.beta, objective.gamma}; }
    objective::ShapingConfig shaping() const { return {objective.lambda1, objective.lambda2}; }
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Loads the defaults, merges the optional JSON file on top (unknown keys
// rejected), then applies dotted-path overrides like
// ("objective.lambda1", "0.2"). Range warnings go to stderr.
ExperimentConfig load(const std::string& path_or_empty,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

std::string to_json_text(const ExperimentConfig& c);
std::string config_hash(const ExperimentConfig& c);  // FNV-1a of the canonical dump

}  // namespace xdef::config
