#include "xdef/trainer.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <ostream>

#include "xdef/optim.hpp"

namespace xdef::train {

using diff::Tape;
using diff::Value;
using policy::DefenseAction;

namespace {

struct LabeledEpisode {
    std::vector<prov::ProvenanceGraph> graphs;
    std::vector<int> labels;
};

// behavior policy for supervised data: alternate random-action and
// monitor-only episodes so both shallow and deep stages get support
std::vector<LabeledEpisode> collect_pretrain_data(const config::ExperimentConfig& cfg,
                                                  std::uint64_t seed) {
    std::vector<LabeledEpisode> out;
    Rng master(seed);
    for (int e = 0; e < cfg.train.pretrain_episodes; ++e) {
        aptsim::SimConfig sc = cfg.sim;
        sc.seed = master.split(static_cast<std::uint64_t>(e) * 3 + 1).next_u64();
        aptsim::Simulator sim(sc);
        Rng act = master.split(static_cast<std::uint64_t>(e) * 3 + 2);
        bool monitor_only = (e % 2) == 1;

        LabeledEpisode ep;
        std::vector<prov::Event> history = sim.reset();
        for (int t = 0;; ++t) {
            history.erase(std::remove_if(history.begin(), history.end(),
                                         [&](const prov::Event& ev) { return ev.step <= t - cfg.model.window; }),
                          history.end());
            ep.graphs.push_back(prov::build_graph(history, t, cfg.model.window));
            ep.labels.push_back(static_cast<int>(sim.state().stage));
            if (sim.state().done) break;
            DefenseAction a = monitor_only ? DefenseAction::Monitor
                                           : static_cast<DefenseAction>(act.uniform_int(policy::kNumActions));
            aptsim::StepOutcome outcome = sim.step(a);
            history.insert(history.end(), outcome.events.begin(), outcome.events.end());
        }
        out.push_back(std::move(ep));
    }
    return out;
}

}  // namespace

void pretrain_stage_estimator(const config::ExperimentConfig& cfg, model::Model& m,
                              std::uint64_t seed, std::ostream* log) {
    std::vector<LabeledEpisode> data = collect_pretrain_data(cfg, seed);
    if (data.empty()) return;
    optim::Adam adam(cfg.train.pretrain_lr);
    Rng shuffle_rng = Rng(seed).split(0x5E);

    std::vector<Value*> params = {&m.perception.stage_cell.w, &m.perception.stage_cell.b,
                                  &m.perception.stage_head_w, &m.perception.stage_head_b};
    for (auto& layer : m.perception.gnn) {
        params.push_back(&layer.w_self);
        params.push_back(&layer.w_nbr);
        params.push_back(&layer.b);
    }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.train.pretrain_epochs; ++epoch) {
        for (std::size_t i = data.size(); i > 1; --i)
            std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(static_cast<int>(i)))]);
        double epoch_loss = 0.0;
        long total_steps = 0;
        for (std::size_t idx : order) {
            const LabeledEpisode& ep = data[idx];
            Tape t;
            auto pv = percept::taped::PerceptionVars::make(t, m.perception);
            std::vector<Tape::Var> param_vars;
            param_vars.push_back(pv.stage.w);
            param_vars.push_back(pv.stage.b);
            param_vars.push_back(pv.stage_head_w);
            param_vars.push_back(pv.stage_head_b);
            for (auto& l : pv.gnn) {
                param_vars.push_back(l.w_self);
                param_vars.push_back(l.w_nbr);
                param_vars.push_back(l.b);
            }
            auto st = percept::taped::lstm_state_input(t, percept::LstmState::zeros(cfg.model.d));
            Tape::Var loss = -1;
            for (std::size_t s = 0; s < ep.graphs.size(); ++s) {
                auto enc = percept::taped::encode_graph(t, ep.graphs[s], pv);
                st = percept::taped::lstm_step(t, pv.stage, enc.g, st);
                Tape::Var probs = percept::taped::stage_probs(t, pv, st.h);
                Tape::Var nll = t.cmul(t.sum(t.index_select(t.log_(probs), {ep.labels[s]})), -1.0);
                loss = loss < 0 ? nll : t.add(loss, nll);
            }
            loss = t.cmul(loss, 1.0 / static_cast<double>(ep.graphs.size()));
            std::vector<Value> grads = t.gradient(loss, param_vars);
            optim::clip_global_norm(grads, 1.0);
            adam.step(params, grads);
            epoch_loss += t.scalar_value(loss) * static_cast<double>(ep.graphs.size());
            total_steps += static_cast<long>(ep.graphs.size());
        }
        if (log)
            (*log) << "pretrain epoch=" << epoch << " ce=" << epoch_loss / static_cast<double>(total_steps)
                   << "\n";
    }
}

TrainResult train(const config::ExperimentConfig& cfg, std::uint64_t seed, std::ostream* log) {
    TrainResult res;
    res.model = model::Model::init(cfg, seed);
    Rng master(seed);

    pretrain_stage_estimator(cfg, res.model, master.split(11).next_u64(), log);

    optim::Adam adam(cfg.ppo.lr);
    Rng update_rng = master.split(12);
    Rng rollout_master = master.split(13);

    run::RunOptions opt;
    opt.mode = policy::ActionMode::Sample;
    opt.explain_every = cfg.explain.explain_every;
    opt.fidelity_metrics = false;

    long steps_done = 0;
    std::uint64_t episode_counter = 0;
    while (steps_done < cfg.train.total_steps) {
        policy::RolloutBuffer buf;
        while (static_cast<int>(buf.steps.size()) < cfg.ppo.rollout_steps) {
            aptsim::SimConfig sc = cfg.sim;
            sc.seed = rollout_master.split(episode_counter * 2 + 1).next_u64();
            aptsim::Simulator sim(sc);
            Rng action_rng = rollout_master.split(episode_counter * 2 + 2);
            Rng explain_rng = rollout_master.split(0xE0000000ull + episode_counter);
            run_episode(cfg, res.model, sim, action_rng, explain_rng, opt, &buf);
            ++episode_counter;
        }
        policy::compute_advantages(buf, cfg.ppo.gamma, cfg.ppo.gae_lambda);
        policy::UpdateStats stats = policy::ppo_update(buf, res.model.defense, adam, cfg.ppo, update_rng);
        steps_done += static_cast<long>(buf.steps.size());
        res.env_steps = static_cast<int>(steps_done);
        res.updates += 1;
        if (log) {
            double mean_r = 0.0, mean_conf = 0.0;
            int explained = 0;
            for (const auto& s : buf.steps) {
                mean_r += s.reward;
                if (s.explained) {
                    mean_conf += s.conf;
                    ++explained;
                }
            }
            mean_r /= static_cast<double>(buf.steps.size());
            (*log) << "update=" << res.updates << " env_steps=" << steps_done
                   << " mean_shaped_reward=" << mean_r
                   << " policy_loss=" << stats.policy_loss << " value_loss=" << stats.value_loss
                   << " entropy=" << stats.entropy
                   << " mean_conf=" << (explained ? mean_conf / explained : 0.0) << "\n";
        }
    }
    return res;
}

}  // namespace xdef::train
