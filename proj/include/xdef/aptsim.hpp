#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xdef/policy.hpp"
#include "xdef/provenance.hpp"
#include "xdef/rng.hpp"

namespace xdef::aptsim {

enum class Stage { Benign = 0, Recon, InitAcc, PrivEsc, LatMov, C2, Exfil };
constexpr int kNumStages = 7;
std::string_view to_string(Stage s);

struct SimConfig {
    double p_adv = 0.25;       // attacker advance probability per step
    double p_mit = 0.9;        // mitigation success probability
    int horizon = 64;
    double benign_rate = 5.0;  // Poisson mean of benign events per step
    int hosts = 6;
    std::uint64_t seed = 0;
};

// throws std::invalid_argument on out-of-range fields
void validate(const SimConfig& c);

struct SimState {
    Stage stage = Stage::Benign;
    std::vector<int> compromised_hosts;
    bool pushed_back = false;   // attack has been regressed below Recon
    int calm_steps = 0;         // consecutive benign steps since push-back
    bool contained = false;
    bool reached_critical = false;  // C2 or Exfil ever entered
    int step = 0;
    bool done = false;
};

struct StepOutcome {
    std::vector<prov::Event> events;
    double reward = 0.0;
    bool done = false;
    // ground truth for evaluation only, never part of the observation
    Stage true_stage = Stage::Benign;
    bool advanced = false;
    bool regressed = false;
    bool contained = false;
};

// action that counters a given attack stage
bool is_counter(Stage s, policy::DefenseAction a);

// Single-attacker episode simulator; owns its generator, fully
// deterministic under the configured seed.
class Simulator {
public:
    explicit Simulator(const SimConfig& cfg);

    // returns the first (benign) event batch
    std::vector<prov::Event> reset();
    StepOutcome step(policy::DefenseAction action);

    const SimState& state() const { return state_; }
    const SimConfig& config() const { return cfg_; }

private:
    std::vector<prov::Event> emit_telemetry(Stage stage);
    std::vector<prov::Event> benign_events(int count);
    std::string fresh_id(const char* prefix);
    std::string host_id(int i) const { return "host" + std::to_string(i); }

    SimConfig cfg_;
    SimState state_;
    Rng rng_;
    int id_counter_ = 0;
    int attacker_host_ = 0;
    int latmov_host_ = 0;
};

// per-step reward constants
constexpr double kStepCost = -0.01;
constexpr double kActionCost = -0.05;       // any non-Monitor action
constexpr double kAdvancePenalty = -1.0;
constexpr double kRegressReward = 1.0;
constexpr double kContainBonus = 5.0;
constexpr double kExfilPenalty = -5.0;
constexpr int kContainHold = 3;             // calm steps required after push-back
constexpr std::uint64_t kExfilBytes = 1'000'000;

}  // namespace xdef::aptsim
