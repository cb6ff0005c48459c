#include "xdef/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "xdef/trainer.hpp"

namespace xdef::evalkit {

namespace {

// fixed-format numbers so repeated runs produce identical CSV bytes
std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    return buf;
}

const char* kStageColumns[kAttackStages] = {"f1_recon",   "f1_initial_access", "f1_priv_esc",
                                            "f1_lateral", "f1_c2",             "f1_exfil"};

struct MeanStd {
    double mean = 0.0;
    double stdev = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double s = 0.0;
        for (double x : xs) s += (x - out.mean) * (x - out.mean);
        out.stdev = std::sqrt(s / static_cast<double>(xs.size() - 1));
    }
    return out;
}

}  // namespace

StageF1 stage_f1(const std::vector<EpisodeTrace>& traces) {
    if (traces.empty()) throw std::invalid_argument("stage_f1: no traces");
    StageF1 out;
    std::vector<double> present;
    for (int k = 1; k <= kAttackStages; ++k) {
        long tp = 0, fp = 0, fn = 0, support = 0;
        for (const EpisodeTrace& tr : traces) {
            for (const run::StepTrace& st : tr.steps) {
                bool truth = st.true_stage == k;
                bool pred = st.predicted_stage == k;
                if (truth) ++support;
                if (truth && pred) ++tp;
                if (!truth && pred) ++fp;
                if (truth && !pred) ++fn;
            }
        }
        if (support == 0) continue;  // absent stage, excluded from the mean
        double denom = static_cast<double>(2 * tp + fp + fn);
        double f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
        out.per_stage[static_cast<std::size_t>(k - 1)] = f1;
        present.push_back(f1);
    }
    out.avg_f1 = present.empty() ? 0.0 : avg_f1_of(present);
    return out;
}

double avg_f1_of(const std::vector<double>& per_stage_values) {
    if (per_stage_values.empty()) throw std::invalid_argument("avg_f1_of: empty");
    double s = 0.0;
    for (double v : per_stage_values) s += v;
    return s / static_cast<double>(per_stage_values.size());
}

double success_rate(const std::vector<EpisodeTrace>& traces) {
    if (traces.empty()) throw std::invalid_argument("success_rate: no traces");
    long ok = 0;
    for (const EpisodeTrace& tr : traces)
        if (!tr.reached_critical && tr.contained_success) ++ok;
    return 100.0 * static_cast<double>(ok) / static_cast<double>(traces.size());
}

std::vector<double> responsiveness(const std::vector<EpisodeTrace>& traces, int window) {
    if (window < 1) throw std::invalid_argument("responsiveness: window must be >= 1");
    std::size_t max_len = 0;
    for (const EpisodeTrace& tr : traces) max_len = std::max(max_len, tr.steps.size());

    std::vector<double> curve;
    for (std::size_t t = 0; t < max_len; ++t) {
        long active = 0, countered = 0;
        for (const EpisodeTrace& tr : traces) {
            if (t >= tr.steps.size()) continue;
            const run::StepTrace& st = tr.steps[t];
            if (st.action < 0) continue;  // terminal perception-only row
            if (st.true_stage < 1 || st.true_stage > kAttackStages) continue;
            ++active;
            auto stage = static_cast<aptsim::Stage>(st.true_stage);
            for (int off = 0; off < window; ++off) {
                std::size_t u = t + static_cast<std::size_t>(off);
                if (u >= tr.steps.size()) break;
                int a = tr.steps[u].action;
                if (a < 0) break;
                if (aptsim::is_counter(stage, static_cast<policy::DefenseAction>(a))) {
                    ++countered;
                    break;
                }
            }
        }
        // steps with no active attack anywhere contribute 0 so the curve
        // stays indexed by decision step
        curve.push_back(active > 0 ? static_cast<double>(countered) / static_cast<double>(active)
                                   : 0.0);
    }
    return curve;
}

ExplanationMetrics explanation_metrics(const std::vector<EpisodeTrace>& traces) {
    ExplanationMetrics out;
    for (const EpisodeTrace& tr : traces) {
        for (const run::StepTrace& st : tr.steps) {
            if (!st.explanation) continue;
            const run::ExplanationRecord& rec = *st.explanation;
            out.mean_confidence += rec.conf;
            out.mean_compactness += rec.compactness;
            out.mean_fidelity += rec.fidelity;
            ++out.explained_steps;
        }
    }
    if (out.explained_steps == 0)
        throw std::invalid_argument("explanation_metrics: traces carry no explanation records");
    out.mean_confidence /= out.explained_steps;
    out.mean_compactness /= out.explained_steps;
    out.mean_fidelity /= out.explained_steps;
    return out;
}

MetricsReport full_report(const std::vector<EpisodeTrace>& traces, int responsiveness_window) {
    MetricsReport r;
    r.f1 = stage_f1(traces);
    r.success = success_rate(traces);
    r.responsiveness_curve = responsiveness(traces, responsiveness_window);
    try {
        r.explanation = explanation_metrics(traces);
    } catch (const std::invalid_argument&) {
        r.explanation = ExplanationMetrics{};  // no explained steps in these traces
    }
    return r;
}

std::string defense_csv(const MetricsReport& r) {
    std::ostringstream os;
    for (int k = 0; k < kAttackStages; ++k) os << kStageColumns[k] << ",";
    os << "avg_f1,success_rate\n";
    for (int k = 0; k < kAttackStages; ++k) {
        const auto& v = r.f1.per_stage[static_cast<std::size_t>(k)];
        if (v) os << fmt(*v);
        os << ",";
    }
    os << fmt(r.f1.avg_f1) << "," << fmt(r.success) << "\n";
    return os.str();
}

std::string responsiveness_csv(const MetricsReport& r) {
    std::ostringstream os;
    os << "step,value\n";
    for (std::size_t t = 0; t < r.responsiveness_curve.size(); ++t)
        os << t << "," << fmt(r.responsiveness_curve[t]) << "\n";
    return os.str();
}

std::string explanation_csv(const MetricsReport& r) {
    std::ostringstream os;
    os << "confidence,compactness,fidelity\n";
    os << fmt(r.explanation.mean_confidence) << "," << fmt(r.explanation.mean_compactness) << ","
       << fmt(r.explanation.mean_fidelity) << "\n";
    return os.str();
}

MetricsReport evaluate_model(const config::ExperimentConfig& cfg, const model::Model& m,
                             int episodes, std::uint64_t seed) {
    if (episodes <= 0) throw std::invalid_argument("evaluate_model: need at least one episode");
    run::RunOptions opt;
    opt.mode = policy::ActionMode::Greedy;
    opt.explain_every = 1;  // evaluation always scores the explanation pipeline
    opt.fidelity_metrics = true;
    std::vector<EpisodeTrace> traces = run::run_episodes(cfg, m, episodes, seed, opt);
    return full_report(traces);
}

std::vector<AblationRow> run_ablation(const config::ExperimentConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      std::ostream* log) {
    if (seeds.empty()) throw std::invalid_argument("run_ablation: need at least one seed");

    struct Variant {
        const char* name;
        double lambda1, lambda2;
        bool explain_in_training;
    };
    const Variant variants[] = {
        {"full", base.objective.lambda1, base.objective.lambda2, true},
        {"no_align", 0.0, base.objective.lambda2, true},
        {"no_conf", base.objective.lambda1, 0.0, true},
        {"posthoc", 0.0, 0.0, true},
        {"env_only", 0.0, 0.0, false},
    };

    std::vector<AblationRow> rows;
    for (const Variant& v : variants) {
        config::ExperimentConfig cfg = base;
        cfg.objective.lambda1 = v.lambda1;
        cfg.objective.lambda2 = v.lambda2;
        if (!v.explain_in_training) cfg.explain.explain_every = 0;

        AblationRow row;
        row.variant = v.name;
        std::vector<double> f1s, confs;
        for (std::uint64_t seed : seeds) {
            try {
                train::TrainResult tr = train::train(cfg, seed, log);
                MetricsReport rep = evaluate_model(cfg, tr.model, cfg.train.eval_episodes,
                                                   Rng(seed).split(0xE7A1ull).next_u64());
                f1s.push_back(rep.f1.avg_f1);
                confs.push_back(rep.explanation.mean_confidence);
                if (log)
                    (*log) << "ablation variant=" << v.name << " seed=" << seed
                           << " avg_f1=" << rep.f1.avg_f1
                           << " conf=" << rep.explanation.mean_confidence << "\n";
            } catch (const std::exception& e) {
                row.failed = true;
                if (log)
                    (*log) << "ablation variant=" << v.name << " seed=" << seed
                           << " failed: " << e.what() << "\n";
            }
        }
        row.seeds = static_cast<int>(f1s.size());
        if (!row.failed && !f1s.empty()) {
            MeanStd f = mean_std(f1s), c = mean_std(confs);
            row.avg_f1_mean = f.mean;
            row.avg_f1_std = f.stdev;
            row.conf_mean = c.mean;
            row.conf_std = c.stdev;
        } else {
            row.failed = true;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "variant,avg_f1_mean,avg_f1_std,conf_mean,conf_std\n";
    for (const AblationRow& r : rows) {
        os << r.variant << ",";
        if (r.failed) {
            os << "failed,,,\n";
            continue;
        }
        os << fmt(r.avg_f1_mean) << ",";
        if (r.seeds > 1) os << fmt(r.avg_f1_std);
        os << "," << fmt(r.conf_mean) << ",";
        if (r.seeds > 1) os << fmt(r.conf_std);
        os << "\n";
    }
    return os.str();
}

}  // namespace xdef::evalkit
