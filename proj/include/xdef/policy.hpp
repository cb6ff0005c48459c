#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "xdef/diffcore.hpp"
#include "xdef/optim.hpp"
#include "xdef/rng.hpp"

namespace xdef::policy {

using diff::Tape;
using diff::Value;

enum class DefenseAction { Monitor = 0, BlockTraffic = 1, RevokeCredentials = 2, IsolateHost = 3 };
constexpr int kNumActions = 4;

std::string_view to_string(DefenseAction a);

// actor: belief -> tanh hidden -> action logits; critic: belief -> tanh hidden -> value
struct PolicyParams {
    Value actor_w1, actor_b1, actor_w2, actor_b2;
    Value critic_w1, critic_b1, critic_w2, critic_b2;
    int belief_dim = 0;
    int hidden = 64;

    static PolicyParams init(int belief_dim, int hidden, Rng& rng);
    std::vector<Value*> all() {
        return {&actor_w1, &actor_b1, &actor_w2, &actor_b2,
                &critic_w1, &critic_b1, &critic_w2, &critic_b2};
    }
};

std::vector<double> actor_logits(const PolicyParams& p, const std::vector<double>& belief);
std::vector<double> action_probs(const PolicyParams& p, const std::vector<double>& belief);
double critic_value(const PolicyParams& p, const std::vector<double>& belief);

enum class ActionMode { Sample, Greedy };

struct ActionResult {
    int action;
    double log_prob;
    double value;
};

// sample mode draws from softmax(logits) with the caller's generator;
// greedy takes argmax with lowest-index tie-break
ActionResult select_action(const std::vector<double>& belief, const PolicyParams& p,
                           ActionMode mode, Rng& rng);

struct StepRecord {
    std::vector<double> belief;
    int action = 0;
    double log_prob = 0.0;
    double value = 0.0;
    double reward = 0.0;  // shaped reward r'
    bool done = false;
    // explanation metrics carried for logging
    bool explained = false;
    double l_align = 0.0;
    double conf = 0.0;
    // filled by compute_advantages
    double advantage = 0.0;
    double ret = 0.0;
};

struct RolloutBuffer {
    std::vector<StepRecord> steps;
    bool advantages_ready = false;
};

// GAE over whole episodes; raw (unnormalized) advantages are stored,
// normalization happens per update batch inside ppo_update
void compute_advantages(RolloutBuffer& buf, double gamma, double gae_lambda);

struct PpoConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip = 0.2;
    int epochs = 4;
    int minibatch = 64;
    double lr = 3e-4;
    double vf_coef = 0.5;
    double ent_coef = 0.01;
    double max_grad_norm = 0.5;
    int rollout_steps = 512;
};

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    int minibatches = 0;
};

struct UpdateDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

UpdateStats ppo_update(const RolloutBuffer& buf, PolicyParams& params, optim::Adam& adam,
                       const PpoConfig& cfg, Rng& rng);

namespace taped {

struct PolicyVars {
    Tape::Var actor_w1, actor_b1, actor_w2, actor_b2;
    Tape::Var critic_w1, critic_b1, critic_w2, critic_b2;
    static PolicyVars make(Tape& t, const PolicyParams& p);
    std::vector<Tape::Var> trainable() const {
        return {actor_w1, actor_b1, actor_w2, actor_b2, critic_w1, critic_b1, critic_w2, critic_b2};
    }
};

Tape::Var actor_probs(Tape& t, const PolicyVars& pv, Tape::Var belief);
Tape::Var critic_value(Tape& t, const PolicyVars& pv, Tape::Var belief);

}  // namespace taped

}  // namespace xdef::policy
