// Command-line driver: train / evaluate / explain / ablate / report.
// Exit codes: 0 success, 2 usage or config error, 3 runtime failure.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xdef/config.hpp"
#include "xdef/evalkit.hpp"
#include "xdef/explain.hpp"
#include "xdef/model.hpp"
#include "xdef/objective.hpp"
#include "xdef/runner.hpp"
#include "xdef/trainer.hpp"

namespace fs = std::filesystem;
using namespace xdef;

namespace {

constexpr const char* kVersion = "xdef 1.0.0";

struct CommonArgs {
    std::string config_path;
    std::int64_t seed = -1;  // -1: use config value
    int workers = 1;
    std::string out_dir;
    std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* app, CommonArgs& a) {
    app->add_option("--config", a.config_path, "experiment config file (JSON)");
    app->add_option("--seed", a.seed, "master seed, overrides the config");
    app->add_option("--workers", a.workers, "worker count (1 for bit-reproducibility)")
        ->check(CLI::PositiveNumber);
    app->add_option("--out", a.out_dir, "output directory, overrides the config");
    app->allow_extras();  // dotted overrides like --objective.lambda1 0.1
}

// remaining tokens are dotted-path overrides
void collect_overrides(CLI::App* app, CommonArgs& a) {
    std::vector<std::string> extras = app->remaining();
    for (std::size_t i = 0; i < extras.size(); ++i) {
        const std::string& tok = extras[i];
        if (tok.rfind("--", 0) != 0 || tok.find('.') == std::string::npos)
            throw config::ConfigError("unrecognized argument: " + tok);
        std::string key = tok.substr(2);
        std::string value;
        auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= extras.size())
                throw config::ConfigError("override " + tok + " is missing a value");
            value = extras[++i];
        }
        a.overrides.emplace_back(key, value);
    }
}

config::ExperimentConfig load_config(const CommonArgs& a) {
    config::ExperimentConfig cfg = config::load(a.config_path, a.overrides);
    if (a.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(a.seed);
    if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
}

// the manifest is the only artifact allowed to carry a timestamp
void write_manifest(const config::ExperimentConfig& cfg, const std::string& command) {
    nlohmann::json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["config_hash"] = config::config_hash(cfg);
    m["master_seed"] = cfg.train.seed;
    m["written_at_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    write_file(fs::path(cfg.out_dir) / "manifest.json", m.dump(2) + "\n");
}

void prepare_out(const config::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "config.json", config::to_json_text(cfg));
}

int cmd_train(const CommonArgs& a) {
    config::ExperimentConfig cfg = load_config(a);
    prepare_out(cfg);
    std::ofstream log(fs::path(cfg.out_dir) / "train.log", std::ios::binary);
    if (!log) throw std::runtime_error("cannot open training log in " + cfg.out_dir);
    train::TrainResult res = train::train(cfg, cfg.train.seed, &log);
    res.model.save((fs::path(cfg.out_dir) / "model.ckpt").string());
    write_manifest(cfg, "train");
    std::cout << "trained " << res.env_steps << " env steps in " << res.updates
              << " updates; checkpoint at " << cfg.out_dir << "/model.ckpt\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& a, const std::string& ckpt, int episodes) {
    config::ExperimentConfig cfg = load_config(a);
    if (episodes < 0) episodes = cfg.train.eval_episodes;  // flag not given
    if (episodes <= 0) throw config::ConfigError("nothing to evaluate: episodes must be positive");
    model::Model m = model::Model::init(cfg, 0);
    try {
        m.load(ckpt);
    } catch (const std::runtime_error& e) {
        throw config::ConfigError(std::string("checkpoint: ") + e.what());
    }
    prepare_out(cfg);
    evalkit::MetricsReport rep =
        evalkit::evaluate_model(cfg, m, episodes, Rng(cfg.train.seed).split(0xE7A1ull).next_u64());
    write_file(fs::path(cfg.out_dir) / "defense.csv", evalkit::defense_csv(rep));
    write_file(fs::path(cfg.out_dir) / "responsiveness.csv", evalkit::responsiveness_csv(rep));
    write_file(fs::path(cfg.out_dir) / "explanation.csv", evalkit::explanation_csv(rep));
    write_manifest(cfg, "evaluate");
    std::cout << "avg_f1=" << rep.f1.avg_f1 << " success_rate=" << rep.success
              << " mean_conf=" << rep.explanation.mean_confidence << "\n";
    return 0;
}

// replays one greedy episode and dumps the full explanation record at `step`
int cmd_explain(const CommonArgs& a, const std::string& ckpt, std::uint64_t episode_seed,
                int target_step) {
    config::ExperimentConfig cfg = load_config(a);
    model::Model m = model::Model::init(cfg, 0);
    try {
        m.load(ckpt);
    } catch (const std::runtime_error& e) {
        throw config::ConfigError(std::string("checkpoint: ") + e.what());
    }
    prepare_out(cfg);

    aptsim::SimConfig sc = cfg.sim;
    sc.seed = episode_seed;
    aptsim::Simulator sim(sc);
    Rng action_rng(episode_seed);  // unused by greedy selection
    Rng explain_rng = Rng(episode_seed).split(0xD0);

    explain::ExplainerConfig xcfg;
    xcfg.steps = cfg.explain.steps;
    xcfg.lr = cfg.explain.rate;
    xcfg.coverage = cfg.explain.coverage;
    xcfg.sparsity = cfg.explain.sparsity;
    xcfg.entropy_reg = cfg.explain.entropy_reg;
    objective::ConfWeights weights = cfg.conf_weights();

    std::vector<prov::Event> history = sim.reset();
    percept::LstmState stage_state = percept::LstmState::zeros(cfg.model.d);
    percept::BeliefState belief = percept::BeliefState::zeros(cfg.model.d_b);
    std::vector<std::vector<double>> embeddings;
    int prev_action = static_cast<int>(policy::DefenseAction::Monitor);

    for (int t = 0;; ++t) {
        history.erase(std::remove_if(history.begin(), history.end(),
                                     [&](const prov::Event& e) { return e.step <= t - cfg.model.window; }),
                      history.end());
        prov::ProvenanceGraph graph = prov::build_graph(history, t, cfg.model.window);
        percept::LstmState stage_state_prev = stage_state;
        percept::GraphEmbedding emb = percept::encode_graph(graph, m.perception);
        std::vector<double> p_t = percept::estimate_stage_step(stage_state, emb.g, m.perception);
        embeddings.push_back(emb.g);
        int k_hat = 0;
        for (int k = 1; k < static_cast<int>(p_t.size()); ++k)
            if (p_t[static_cast<std::size_t>(k)] > p_t[static_cast<std::size_t>(k_hat)]) k_hat = k;

        if (sim.state().done && t < target_step)
            throw config::ConfigError("step " + std::to_string(target_step) +
                                      " is beyond the end of the episode (ended at " +
                                      std::to_string(t) + ")");

        std::vector<double> obs =
            percept::make_observation(emb.g, p_t, prev_action, policy::kNumActions);
        belief = percept::update_belief(belief, obs, m.perception);
        policy::ActionResult ar =
            policy::select_action(belief.h, m.defense, policy::ActionMode::Greedy, action_rng);

        if (t == target_step) {
            explain::TemporalAttribution temporal =
                explain::temporal_attribution(embeddings, m.perception, t);
            explain::PolicyAttribution pattr =
                explain::policy_attribution(m.defense, belief.h, ar.action, t);
            explain::ExplanationSignal sig;
            double cg = 0.0, ct = 0.0, cp = 0.0, conf = 0.0;
            if (graph.empty()) {
                sig = explain::empty_explanation(t, temporal, pattr);
            } else {
                Rng step_rng = explain_rng.split(static_cast<std::uint64_t>(t));
                explain::GraphExplanation gx = explain::explain_graph(
                    graph, m.perception, stage_state_prev, k_hat, xcfg, step_rng, t);
                explain::ProjectedEvidence proj =
                    explain::project_explanation(gx.masks, emb.h, p_t, m.projections, t);
                sig = explain::assemble_explanation(gx.masks, gx.subgraph, temporal, pattr, proj);
                cg = objective::conf_graph(gx.masks.node, gx.subgraph.nodes);
                ct = objective::conf_temporal(temporal.normalized);
                cp = objective::conf_policy(pattr.phi, proj.phi_xai);
                conf = objective::confidence(cg, ct, cp, weights).total;
            }
            std::string rec = explain::dump_record(sig, graph, k_hat, cg, ct, cp, conf);
            write_file(fs::path(cfg.out_dir) / "explanation.txt", rec);
            write_manifest(cfg, "explain");
            std::cout << rec;
            return 0;
        }

        if (sim.state().done)
            throw config::ConfigError("step " + std::to_string(target_step) +
                                      " is beyond the end of the episode");
        aptsim::StepOutcome outcome = sim.step(static_cast<policy::DefenseAction>(ar.action));
        history.insert(history.end(), outcome.events.begin(), outcome.events.end());
        prev_action = ar.action;
    }
}

int cmd_ablate(const CommonArgs& a, const std::vector<std::uint64_t>& seeds) {
    config::ExperimentConfig cfg = load_config(a);
    if (seeds.empty()) throw config::ConfigError("ablate needs at least one --seeds value");
    prepare_out(cfg);
    std::ofstream log(fs::path(cfg.out_dir) / "ablation.log", std::ios::binary);
    std::vector<evalkit::AblationRow> rows = evalkit::run_ablation(cfg, seeds, &log);
    write_file(fs::path(cfg.out_dir) / "ablation.csv", evalkit::ablation_csv(rows));
    write_manifest(cfg, "ablate");
    for (const auto& r : rows)
        std::cout << r.variant << (r.failed ? " failed" : "") << " avg_f1=" << r.avg_f1_mean
                  << " conf=" << r.conf_mean << "\n";
    return 0;
}

// pretty-prints whatever CSVs are present in the output directory
int cmd_report(const std::string& dir) {
    bool any = false;
    for (const char* name : {"defense.csv", "explanation.csv", "ablation.csv", "responsiveness.csv"}) {
        fs::path p = fs::path(dir) / name;
        std::ifstream f(p);
        if (!f) continue;
        any = true;
        std::cout << "== " << name << " ==\n";
        std::string line;
        int shown = 0;
        while (std::getline(f, line)) {
            std::ostringstream row;
            std::istringstream cells(line);
            std::string cell;
            while (std::getline(cells, cell, ','))
                row << (cell.empty() ? "-" : cell) << "\t";
            std::cout << row.str() << "\n";
            if (++shown >= 20 && std::string(name) == "responsiveness.csv") {
                std::cout << "...\n";
                break;
            }
        }
        std::cout << "\n";
    }
    if (!any) throw config::ConfigError("no CSV outputs found in " + dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"explainable kill-chain defense lab"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonArgs targs, eargs, xargs, aargs;
    std::string eval_ckpt, explain_ckpt;
    int eval_episodes = -1;
    std::uint64_t explain_episode_seed = 1;
    int explain_step = 0;
    std::vector<std::uint64_t> ablate_seeds;
    std::string report_dir = "out";

    CLI::App* train_cmd = app.add_subcommand("train", "supervised pretrain + PPO");
    add_common(train_cmd, targs);

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "greedy evaluation, writes metric CSVs");
    add_common(eval_cmd, eargs);
    eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    eval_cmd->add_option("--episodes", eval_episodes, "episode count (default from config)");

    CLI::App* explain_cmd = app.add_subcommand("explain", "dump one step's explanation record");
    add_common(explain_cmd, xargs);
    explain_cmd->add_option("--checkpoint", explain_ckpt, "model checkpoint")->required();
    explain_cmd->add_option("--episode-seed", explain_episode_seed, "episode seed to replay");
    explain_cmd->add_option("--step", explain_step, "decision step to explain")
        ->check(CLI::NonNegativeNumber);

    CLI::App* ablate_cmd = app.add_subcommand("ablate", "train+evaluate the objective variants");
    add_common(ablate_cmd, aargs);
    ablate_cmd->add_option("--seeds", ablate_seeds, "training seeds");

    CLI::App* report_cmd = app.add_subcommand("report", "print CSV outputs as a table");
    report_cmd->add_option("--out", report_dir, "directory holding the CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            collect_overrides(train_cmd, targs);
            return cmd_train(targs);
        }
        if (eval_cmd->parsed()) {
            collect_overrides(eval_cmd, eargs);
            return cmd_evaluate(eargs, eval_ckpt, eval_episodes);
        }
        if (explain_cmd->parsed()) {
            collect_overrides(explain_cmd, xargs);
            return cmd_explain(xargs, explain_ckpt, explain_episode_seed, explain_step);
        }
        if (ablate_cmd->parsed()) {
            collect_overrides(ablate_cmd, aargs);
            if (ablate_seeds.empty()) ablate_seeds = {load_config(aargs).train.seed};
            return cmd_ablate(aargs, ablate_seeds);
        }
        if (report_cmd->parsed()) return cmd_report(report_dir);
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
