#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "xdef/config.hpp"
#include "xdef/runner.hpp"

namespace xdef::evalkit {

using run::EpisodeTrace;

constexpr int kAttackStages = 6;  // Recon..Exfil, stage indices 1..6

struct StageF1 {
    // absent (zero-support) stages are empty optionals, excluded from the mean
    std::array<std::optional<double>, kAttackStages> per_stage;
    double avg_f1 = 0.0;
};

StageF1 stage_f1(const std::vector<EpisodeTrace>& traces);
double avg_f1_of(const std::vector<double>& per_stage_values);

double success_rate(const std::vector<EpisodeTrace>& traces);  // percentage

// fraction of episodes (attack active at t) where the stage's counter
// action is issued within the next `window` decisions, indexed by step
std::vector<double> responsiveness(const std::vector<EpisodeTrace>& traces, int window);

struct ExplanationMetrics {
    double mean_confidence = 0.0;
    double mean_compactness = 0.0;
    double mean_fidelity = 0.0;
    int explained_steps = 0;
};

ExplanationMetrics explanation_metrics(const std::vector<EpisodeTrace>& traces);

struct MetricsReport {
    StageF1 f1;
    double success = 0.0;
    std::vector<double> responsiveness_curve;
    ExplanationMetrics explanation;
};

MetricsReport full_report(const std::vector<EpisodeTrace>& traces, int responsiveness_window = 2);

// CSV emission; column headers are part of the file contract
std::string defense_csv(const MetricsReport& r);
std::string responsiveness_csv(const MetricsReport& r);
std::string explanation_csv(const MetricsReport& r);

struct AblationRow {
    std::string variant;
    double avg_f1_mean = 0.0;
    double avg_f1_std = 0.0;
    double conf_mean = 0.0;
    double conf_std = 0.0;
    bool failed = false;
    int seeds = 0;
};

// Trains and evaluates the five variants over the given seeds:
// full, no_align (lambda1=0), no_conf (lambda2=0), posthoc
// (lambda1=lambda2=0, explanations still computed) and env_only
// (lambda1=lambda2=0, explanation disabled during training).
std::vector<AblationRow> run_ablation(const config::ExperimentConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::ostream* log = nullptr);

std::string ablation_csv(const std::vector<AblationRow>& rows);

// evaluation entry point shared by the CLI and the ablation driver
MetricsReport evaluate_model(const config::ExperimentConfig& cfg, const model::Model& m,
                             int episodes, std::uint64_t seed);

}  // namespace xdef::evalkit
