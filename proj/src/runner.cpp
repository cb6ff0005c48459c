#include "xdef/runner.hpp"

#include <algorithm>
#include <deque>

#include "xdef/objective.hpp"

namespace xdef::run {

using policy::DefenseAction;

namespace {

int argmax(const std::vector<double>& v) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
    return best;
}

}  // namespace

EpisodeTrace run_episode(const config::ExperimentConfig& cfg, const model::Model& m,
                         aptsim::Simulator& sim, Rng& action_rng, const Rng& explain_rng,
                         const RunOptions& opt, policy::RolloutBuffer* buffer) {
    EpisodeTrace trace;
    const int window = cfg.model.window;
    explain::ExplainerConfig xcfg;
    xcfg.steps = cfg.explain.steps;
    xcfg.lr = cfg.explain.rate;
    xcfg.coverage = cfg.explain.coverage;
    xcfg.sparsity = cfg.explain.sparsity;
    xcfg.entropy_reg = cfg.explain.entropy_reg;
    objective::ConfWeights weights = cfg.conf_weights();
    objective::ShapingConfig shaping = cfg.shaping();

    std::vector<prov::Event> history = sim.reset();
    percept::LstmState stage_state = percept::LstmState::zeros(cfg.model.d);
    percept::BeliefState belief = percept::BeliefState::zeros(cfg.model.d_b);
    std::vector<std::vector<double>> embeddings;
    int prev_action = static_cast<int>(DefenseAction::Monitor);

    auto trim_history = [&](int t) {
        history.erase(std::remove_if(history.begin(), history.end(),
                                     [&](const prov::Event& e) { return e.step <= t - window; }),
                      history.end());
    };

    for (int t = 0;; ++t) {
        trim_history(t);
        prov::ProvenanceGraph graph = prov::build_graph(history, t, window);
        percept::LstmState stage_state_prev = stage_state;
        percept::GraphEmbedding emb = percept::encode_graph(graph, m.perception);
        std::vector<double> p_t = percept::estimate_stage_step(stage_state, emb.g, m.perception);
        embeddings.push_back(emb.g);
        int k_hat = argmax(p_t);

        StepTrace st;
        st.step = t;
        st.true_stage = static_cast<int>(sim.state().stage);
        st.predicted_stage = k_hat;
        st.event_count = 0;
        for (const prov::Event& e : history)
            if (e.step == t) ++st.event_count;

        bool episode_done = sim.state().done;
        if (episode_done) {
            // terminal perception-only row: the last telemetry batch is still
            // classified even though no action follows it
            trace.steps.push_back(std::move(st));
            break;
        }

        std::vector<double> obs = percept::make_observation(emb.g, p_t, prev_action, policy::kNumActions);
        belief = percept::update_belief(belief, obs, m.perception);
        policy::ActionResult ar = policy::select_action(belief.h, m.defense, opt.mode, action_rng);

        double l_align = 0.0;
        double conf_total = 0.0;
        bool want_explain = opt.explain_every > 0 && (t % opt.explain_every == 0);
        if (want_explain) {
            explain::TemporalAttribution temporal =
                explain::temporal_attribution(embeddings, m.perception, t);
            explain::PolicyAttribution pattr =
                explain::policy_attribution(m.defense, belief.h, ar.action, t);
            ExplanationRecord rec;
            if (!graph.empty()) {
                Rng step_rng = explain_rng.split(static_cast<std::uint64_t>(t));
                explain::GraphExplanation gx = explain::explain_graph(
                    graph, m.perception, stage_state_prev, k_hat, xcfg, step_rng, t);
                explain::ProjectedEvidence proj = explain::project_explanation(
                    gx.masks, emb.h, p_t, m.projections, t);
                rec.signal = explain::assemble_explanation(gx.masks, gx.subgraph, temporal, pattr, proj);
                rec.l_align = objective::alignment_loss(pattr.phi, proj.phi_xai);
                double cg = objective::conf_graph(gx.masks.node, gx.subgraph.nodes);
                double ct = objective::conf_temporal(temporal.normalized);
                double cp = objective::conf_policy(pattr.phi, proj.phi_xai);
                objective::ConfidenceScore cs = objective::confidence(cg, ct, cp, weights);
                rec.c_graph = cg;
                rec.c_temp = ct;
                rec.c_policy = cp;
                rec.conf = cs.total;
                rec.compactness =
                    static_cast<double>(gx.subgraph.nodes.size() + gx.subgraph.edges.size()) /
                    static_cast<double>(graph.num_nodes() + graph.num_edges());
                if (opt.fidelity_metrics) {
                    rec.p_full = explain::stage_prob_on_graph(graph, m.perception, stage_state_prev, k_hat);
                    prov::ProvenanceGraph reduced =
                        prov::remove_subgraph(graph, gx.subgraph.nodes, gx.subgraph.edges);
                    rec.p_removed =
                        explain::stage_prob_on_graph(reduced, m.perception, stage_state_prev, k_hat);
                    rec.fidelity = std::clamp(rec.p_full - rec.p_removed, 0.0, 1.0);
                }
                st.explained = true;
                l_align = rec.l_align;
                conf_total = rec.conf;
                st.explanation = std::move(rec);
            }
            // empty graph: sentinel step, (l_align, conf) stay (0, 0)
        }

        aptsim::StepOutcome outcome = sim.step(static_cast<DefenseAction>(ar.action));
        double r_shaped = objective::shaped_reward(outcome.reward, l_align, conf_total, shaping);

        st.action = ar.action;
        st.r_env = outcome.reward;
        st.r_shaped = r_shaped;
        st.done = outcome.done;
        st.advanced = outcome.advanced;
        st.contained = outcome.contained;
        trace.env_return += outcome.reward;
        if (opt.keep_events) st.events = outcome.events;

        if (buffer) {
            policy::StepRecord rec;
            rec.belief = belief.h;
            rec.action = ar.action;
            rec.log_prob = ar.log_prob;
            rec.value = ar.value;
            rec.reward = r_shaped;
            rec.done = outcome.done;
            rec.explained = st.explained;
            rec.l_align = l_align;
            rec.conf = conf_total;
            buffer->steps.push_back(std::move(rec));
        }

        trace.steps.push_back(std::move(st));
        history.insert(history.end(), outcome.events.begin(), outcome.events.end());
        prev_action = ar.action;
        if (outcome.done) {
            // one more loop iteration records the terminal row
            continue;
        }
    }

    trace.reached_critical = sim.state().reached_critical;
    trace.contained_success = sim.state().contained && sim.state().calm_steps >= aptsim::kContainHold;
    return trace;
}

std::vector<EpisodeTrace> run_episodes(const config::ExperimentConfig& cfg, const model::Model& m,
                                       int episodes, std::uint64_t seed, const RunOptions& opt) {
    std::vector<EpisodeTrace> out;
    out.reserve(static_cast<std::size_t>(episodes));
    Rng master(seed);
    for (int e = 0; e < episodes; ++e) {
        aptsim::SimConfig sc = cfg.sim;
        sc.seed = master.split(static_cast<std::uint64_t>(e) * 2 + 1).next_u64();
        aptsim::Simulator sim(sc);
        Rng action_rng = master.split(static_cast<std::uint64_t>(e) * 2 + 2);
        Rng explain_rng = master.split(0xE000000 + static_cast<std::uint64_t>(e));
        out.push_back(run_episode(cfg, m, sim, action_rng, explain_rng, opt));
    }
    return out;
}

}  // namespace xdef::run
