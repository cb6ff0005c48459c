#pragma once

#include <optional>
#include <vector>

#include "xdef/aptsim.hpp"
#include "xdef/config.hpp"
#include "xdef/explain.hpp"
#include "xdef/model.hpp"
#include "xdef/policy.hpp"

namespace xdef::run {

struct ExplanationRecord {
    explain::ExplanationSignal signal;
    double c_graph = 0.0, c_temp = 0.0, c_policy = 0.0, conf = 0.0;
    double l_align = 0.0;
    double compactness = 0.0;
    double fidelity = 0.0;   // clamped to [0,1]
    double p_full = 0.0, p_removed = 0.0;
};

struct StepTrace {
    int step = 0;
    int true_stage = 0;
    int predicted_stage = 0;
    int action = -1;  // -1 on the terminal perception-only row
    double r_env = 0.0;
    double r_shaped = 0.0;
    bool done = false;
    bool advanced = false;
    bool contained = false;
    int event_count = 0;
    bool explained = false;
    std::optional<ExplanationRecord> explanation;
    std::vector<prov::Event> events;  // this step's raw telemetry
};

struct EpisodeTrace {
    std::vector<StepTrace> steps;
    bool reached_critical = false;
    bool contained_success = false;  // ended via the containment hold
    double env_return = 0.0;
};

struct RunOptions {
    policy::ActionMode mode = policy::ActionMode::Sample;
    int explain_every = 1;             // 0 disables explanation
    bool fidelity_metrics = false;     // two extra forward passes per explained step
    bool keep_events = false;          // retain raw telemetry in the trace
};

// Runs one episode, optionally appending to a PPO rollout buffer.
// action_rng drives sampling; explanation mask noise uses per-step streams
// split from explain_rng so explanation never perturbs the trajectory.
EpisodeTrace run_episode(const config::ExperimentConfig& cfg, const model::Model& m,
                         aptsim::Simulator& sim, Rng& action_rng, const Rng& explain_rng,
                         const RunOptions& opt, policy::RolloutBuffer* buffer = nullptr);

std::vector<EpisodeTrace> run_episodes(const config::ExperimentConfig& cfg, const model::Model& m,
                                       int episodes, std::uint64_t seed, const RunOptions& opt);

}  // namespace xdef::run
