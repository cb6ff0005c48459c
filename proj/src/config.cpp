#include "xdef/config.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace xdef::config {

using nlohmann::json;

namespace {

json defaults() {
    ExperimentConfig c;
    json j;
    j["sim"] = {{"p_adv", c.sim.p_adv},       {"p_mit", c.sim.p_mit},
                {"horizon", c.sim.horizon},   {"benign_rate", c.sim.benign_rate},
                {"hosts", c.sim.hosts},       {"seed", c.sim.seed}};
    j["model"] = {{"F", c.model.F}, {"d", c.model.d}, {"K", c.model.K},
                  {"d_b", c.model.d_b}, {"L", c.model.L}, {"window", c.model.window}};
    j["explain"] = {{"steps", c.explain.steps},
                    {"rate", c.explain.rate},
                    {"coverage", c.explain.coverage},
                    {"explain_every", c.explain.explain_every},
                    {"sparsity", c.explain.sparsity},
                    {"entropy_reg", c.explain.entropy_reg}};
    j["objective"] = {{"lambda1", c.objective.lambda1}, {"lambda2", c.objective.lambda2},
                      {"alpha", c.objective.alpha},     {"beta", c.objective.beta},
                      {"gamma", c.objective.gamma}};
    j["ppo"] = {{"gamma", c.ppo.gamma},         {"gae_lambda", c.ppo.gae_lambda},
                {"clip", c.ppo.clip},           {"epochs", c.ppo.epochs},
                {"minibatch", c.ppo.minibatch}, {"lr", c.ppo.lr},
                {"vf_coef", c.ppo.vf_coef},     {"ent_coef", c.ppo.ent_coef},
                {"max_grad_norm", c.ppo.max_grad_norm}, {"rollout_steps", c.ppo.rollout_steps}};
    j["train"] = {{"total_steps", c.train.total_steps},
                  {"eval_episodes", c.train.eval_episodes},
                  {"pretrain_episodes", c.train.pretrain_episodes},
                  {"pretrain_epochs", c.train.pretrain_epochs},
                  {"pretrain_lr", c.train.pretrain_lr},
                  {"seed", c.train.seed}};
    j["out_dir"] = c.out_dir;
    return j;
}

void merge_strict(json& base, const json& patch, const std::string& prefix) {
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown config key: " + path);
        if (base[it.key()].is_object()) {
            if (!it.value().is_object()) throw ConfigError("config key " + path + " must be a section");
            merge_strict(base[it.key()], it.value(), path);
        } else {
            base[it.key()] = it.value();
        }
    }
}

void apply_override(json& base, const std::string& path, const std::string& text) {
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;  // plain string override
    }
    json* cur = &base;
    std::string key;
    std::istringstream parts(path);
    std::string seg;
    std::vector<std::string> segs;
    while (std::getline(parts, seg, '.')) segs.push_back(seg);
    if (segs.empty()) throw ConfigError("empty override path");
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        if (!cur->contains(segs[i]) || !(*cur)[segs[i]].is_object())
            throw ConfigError("unknown config key: " + path);
        cur = &(*cur)[segs[i]];
    }
    const std::string& leaf = segs.back();
    if (!cur->contains(leaf) || (*cur)[leaf].is_object())
        throw ConfigError("unknown config key: " + path);
    (*cur)[leaf] = value;
}

ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    const json& s = j.at("sim");
    c.sim.p_adv = s.at("p_adv");
    c.sim.p_mit = s.at("p_mit");
    c.sim.horizon = s.at("horizon");
    c.sim.benign_rate = s.at("benign_rate");
    c.sim.hosts = s.at("hosts");
    c.sim.seed = s.at("seed");
    const json& m = j.at("model");
    c.model.F = m.at("F");
    c.model.d = m.at("d");
    c.model.K = m.at("K");
    c.model.d_b = m.at("d_b");
    c.model.L = m.at("L");
    c.model.window = m.at("window");
    const json& e = j.at("explain");
    c.explain.steps = e.at("steps");
    c.explain.rate = e.at("rate");
    c.explain.coverage = e.at("coverage");
    c.explain.explain_every = e.at("explain_every");
    c.explain.sparsity = e.at("sparsity");
    c.explain.entropy_reg = e.at("entropy_reg");
    const json& o = j.at("objective");
    c.objective.lambda1 = o.at("lambda1");
    c.objective.lambda2 = o.at("lambda2");
    c.objective.alpha = o.at("alpha");
    c.objective.beta = o.at("beta");
    c.objective.gamma = o.at("gamma");
    const json& p = j.at("ppo");
    c.ppo.gamma = p.at("gamma");
    c.ppo.gae_lambda = p.at("gae_lambda");
    c.ppo.clip = p.at("clip");
    c.ppo.epochs = p.at("epochs");
    c.ppo.minibatch = p.at("minibatch");
    c.ppo.lr = p.at("lr");
    c.ppo.vf_coef = p.at("vf_coef");
    c.ppo.ent_coef = p.at("ent_coef");
    c.ppo.max_grad_norm = p.at("max_grad_norm");
    c.ppo.rollout_steps = p.at("rollout_steps");
    const json& t = j.at("train");
    c.train.total_steps = t.at("total_steps");
    c.train.eval_episodes = t.at("eval_episodes");
    c.train.pretrain_episodes = t.at("pretrain_episodes");
    c.train.pretrain_epochs = t.at("pretrain_epochs");
    c.train.pretrain_lr = t.at("pretrain_lr");
    c.train.seed = t.at("seed");
    c.out_dir = j.at("out_dir");
    return c;
}

void validate(const ExperimentConfig& c) {
    aptsim::validate(c.sim);
    objective::validate(c.conf_weights());
    if (c.model.F != prov::kNodeFeatureDim)
        throw ConfigError("model.F must equal the provenance feature dimension");
    if (c.model.d < 1 || c.model.d_b < 1 || c.model.L < 1 || c.model.K < 2)
        throw ConfigError("model sizes out of range");
    if (c.explain.steps < 1 || c.explain.rate <= 0.0)
        throw ConfigError("explain.steps/rate out of range");
    if (c.explain.coverage <= 0.0 || c.explain.coverage > 1.0)
        throw ConfigError("explain.coverage out of (0,1]");
    if (c.explain.explain_every < 0) throw ConfigError("explain.explain_every must be >= 0");
    if (c.objective.lambda1 < 0.0 || c.objective.lambda2 < 0.0)
        throw ConfigError("objective lambdas must be nonnegative");
    if (c.train.total_steps < 0 || c.train.eval_episodes < 0)
        throw ConfigError("train budgets must be nonnegative");
    std::string warn = objective::shaping_range_warning(c.shaping());
    if (!warn.empty()) std::cerr << "warning: " << warn << "\n";
}

}  // namespace

ExperimentConfig load(const std::string& path_or_empty,
                      const std::vector<std::pair<std::string, std::string>>& overrides) {
    json j = defaults();
    if (!path_or_empty.empty() && path_or_empty != "default") {
        std::ifstream in(path_or_empty);
        if (!in) throw ConfigError("cannot open config file: " + path_or_empty);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config parse error: " + std::string(e.what()));
        }
        merge_strict(j, file, "");
    }
    for (const auto& [path, text] : overrides) apply_override(j, path, text);
    ExperimentConfig c = from_json(j);
    validate(c);
    return c;
}

std::string to_json_text(const ExperimentConfig& c) {
    json j = defaults();
    json patch;
    // round-trip through the struct so overrides are reflected
    patch["sim"] = {{"p_adv", c.sim.p_adv},     {"p_mit", c.sim.p_mit},
                    {"horizon", c.sim.horizon}, {"benign_rate", c.sim.benign_rate},
                    {"hosts", c.sim.hosts},     {"seed", c.sim.seed}};
    patch["model"] = {{"F", c.model.F}, {"d", c.model.d}, {"K", c.model.K},
                      {"d_b", c.model.d_b}, {"L", c.model.L}, {"window", c.model.window}};
    patch["explain"] = {{"steps", c.explain.steps},
                        {"rate", c.explain.rate},
                        {"coverage", c.explain.coverage},
                        {"explain_every", c.explain.explain_every},
                        {"sparsity", c.explain.sparsity},
                        {"entropy_reg", c.explain.entropy_reg}};
    patch["objective"] = {{"lambda1", c.objective.lambda1}, {"lambda2", c.objective.lambda2},
                          {"alpha", c.objective.alpha},     {"beta", c.objective.beta},
                          {"gamma", c.objective.gamma}};
    patch["ppo"] = {{"gamma", c.ppo.gamma},         {"gae_lambda", c.ppo.gae_lambda},
                    {"clip", c.ppo.clip},           {"epochs", c.ppo.epochs},
                    {"minibatch", c.ppo.minibatch}, {"lr", c.ppo.lr},
                    {"vf_coef", c.ppo.vf_coef},     {"ent_coef", c.ppo.ent_coef},
                    {"max_grad_norm", c.ppo.max_grad_norm}, {"rollout_steps", c.ppo.rollout_steps}};
    patch["train"] = {{"total_steps", c.train.total_steps},
                      {"eval_episodes", c.train.eval_episodes},
                      {"pretrain_episodes", c.train.pretrain_episodes},
                      {"pretrain_epochs", c.train.pretrain_epochs},
                      {"pretrain_lr", c.train.pretrain_lr},
                      {"seed", c.train.seed}};
    patch["out_dir"] = c.out_dir;
    merge_strict(j, patch, "");
    return j.dump(2);
}

std::string config_hash(const ExperimentConfig& c) {
    std::string text = to_json_text(c);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace xdef::config
