#include "xdef/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xdef::policy {

namespace {

Value glorot(int rows, int cols, Rng& rng) {
    double scale = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Value v = Value::zeros({rows, cols});
    for (double& x : v.data) x = rng.uniform(-scale, scale);
    return v;
}

std::vector<double> affine(const Value& w, const Value& b, const std::vector<double>& x) {
    int rows = w.shape[0], cols = w.shape[1];
    if (static_cast<int>(x.size()) != cols)
        throw std::invalid_argument("policy: belief dimension mismatch");
    std::vector<double> out(b.data.begin(), b.data.end());
    for (int r = 0; r < rows; ++r) {
        const double* row = w.data.data() + static_cast<std::size_t>(r) * cols;
        double acc = out[static_cast<std::size_t>(r)];
        for (int j = 0; j < cols; ++j) acc += row[j] * x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(r)] = acc;
    }
    return out;
}

std::vector<double> softmax(const std::vector<double>& z) {
    double mx = *std::max_element(z.begin(), z.end());
    std::vector<double> out(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

}  // namespace

std::string_view to_string(DefenseAction a) {
    switch (a) {
        case DefenseAction::Monitor: return "monitor";
        case DefenseAction::BlockTraffic: return "block_traffic";
        case DefenseAction::RevokeCredentials: return "revoke_credentials";
        case DefenseAction::IsolateHost: return "isolate_host";
    }
    return "?";
}

PolicyParams PolicyParams::init(int belief_dim, int hidden, Rng& rng) {
    PolicyParams p;
    p.belief_dim = belief_dim;
    p.hidden = hidden;
    p.actor_w1 = glorot(hidden, belief_dim, rng);
    p.actor_b1 = Value::zeros({hidden});
    p.actor_w2 = glorot(kNumActions, hidden, rng);
    p.actor_b2 = Value::zeros({kNumActions});
    p.critic_w1 = glorot(hidden, belief_dim, rng);
    p.critic_b1 = Value::zeros({hidden});
    p.critic_w2 = glorot(1, hidden, rng);
    p.critic_b2 = Value::zeros({1});
    return p;
}

std::vector<double> actor_logits(const PolicyParams& p, const std::vector<double>& belief) {
    std::vector<double> h = affine(p.actor_w1, p.actor_b1, belief);
    for (double& v : h) v = std::tanh(v);
    return affine(p.actor_w2, p.actor_b2, h);
}

std::vector<double> action_probs(const PolicyParams& p, const std::vector<double>& belief) {
    return softmax(actor_logits(p, belief));
}

double critic_value(const PolicyParams& p, const std::vector<double>& belief) {
    std::vector<double> h = affine(p.critic_w1, p.critic_b1, belief);
    for (double& v : h) v = std::tanh(v);
    return affine(p.critic_w2, p.critic_b2, h)[0];
}

ActionResult select_action(const std::vector<double>& belief, const PolicyParams& p,
                           ActionMode mode, Rng& rng) {
    std::vector<double> probs = action_probs(p, belief);
    int a = 0;
    if (mode == ActionMode::Greedy) {
        for (int i = 1; i < kNumActions; ++i)
            if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(a)]) a = i;
    } else {
        a = rng.categorical(probs);
    }
    return ActionResult{a, std::log(probs[static_cast<std::size_t>(a)]), critic_value(p, belief)};
}

void compute_advantages(RolloutBuffer& buf, double gamma, double gae_lambda) {
    if (buf.steps.empty()) throw std::invalid_argument("compute_advantages: empty buffer");
    if (!buf.steps.back().done)
        throw std::invalid_argument("compute_advantages: buffer must hold complete episodes");
    double adv = 0.0;
    for (int i = static_cast<int>(buf.steps.size()) - 1; i >= 0; --i) {
        StepRecord& s = buf.steps[static_cast<std::size_t>(i)];
        double next_value = 0.0;
        double not_done = 0.0;
        if (!s.done) {
            next_value = buf.steps[static_cast<std::size_t>(i) + 1].value;
            not_done = 1.0;
        }
        double delta = s.reward + gamma * next_value * (s.done ? 0.0 : 1.0) - s.value;
        adv = delta + gamma * gae_lambda * not_done * adv;
        s.advantage = adv;
        s.ret = adv + s.value;
        // episode boundaries reset the carry via the not_done factor above
    }
    buf.advantages_ready = true;
}

namespace taped {

PolicyVars PolicyVars::make(Tape& t, const PolicyParams& p) {
    PolicyVars v;
    v.actor_w1 = t.input(p.actor_w1);
    v.actor_b1 = t.input(p.actor_b1);
    v.actor_w2 = t.input(p.actor_w2);
    v.actor_b2 = t.input(p.actor_b2);
    v.critic_w1 = t.input(p.critic_w1);
    v.critic_b1 = t.input(p.critic_b1);
    v.critic_w2 = t.input(p.critic_w2);
    v.critic_b2 = t.input(p.critic_b2);
    return v;
}

Tape::Var actor_probs(Tape& t, const PolicyVars& pv, Tape::Var belief) {
    Tape::Var h = t.tanh_(t.add(t.matmul(pv.actor_w1, belief), pv.actor_b1));
    return t.softmax(t.add(t.matmul(pv.actor_w2, h), pv.actor_b2));
}

Tape::Var critic_value(Tape& t, const PolicyVars& pv, Tape::Var belief) {
    Tape::Var h = t.tanh_(t.add(t.matmul(pv.critic_w1, belief), pv.critic_b1));
    return t.sum(t.add(t.matmul(pv.critic_w2, h), pv.critic_b2));
}

}  // namespace taped

namespace {

// min(u, v) = u - relu(u - v)
Tape::Var tape_min(Tape& t, Tape::Var u, Tape::Var v) { return t.sub(u, t.relu(t.sub(u, v))); }

// clamp(x, lo, hi) = lo + relu(x - lo) - relu(x - hi), constants lo < hi
Tape::Var tape_clamp(Tape& t, Tape::Var x, double lo, double hi) {
    Tape::Var lo_c = t.input(Value::scalar(lo));
    Tape::Var hi_c = t.input(Value::scalar(hi));
    return t.add(lo_c, t.sub(t.relu(t.sub(x, lo_c)), t.relu(t.sub(x, hi_c))));
}

}  // namespace

UpdateStats ppo_update(const RolloutBuffer& buf, PolicyParams& params, optim::Adam& adam,
                       const PpoConfig& cfg, Rng& rng) {
    if (!buf.advantages_ready)
        throw std::invalid_argument("ppo_update: advantages not computed");
    std::size_t n = buf.steps.size();

    // normalize advantages per update batch
    double mean = 0.0;
    for (const StepRecord& s : buf.steps) mean += s.advantage;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const StepRecord& s : buf.steps) {
        double d = s.advantage - mean;
        var += d * d;
    }
    double sd = std::sqrt(var / static_cast<double>(n)) + 1e-8;
    std::vector<double> adv(n);
    for (std::size_t i = 0; i < n; ++i) adv[i] = (buf.steps[i].advantage - mean) / sd;

    UpdateStats stats;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with our generator for reproducibility
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.minibatch)) {
            std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.minibatch));
            Tape t;
            auto pv = taped::PolicyVars::make(t, params);
            Tape::Var loss = -1;
            double ent_acc = 0.0, pl_acc = 0.0, vl_acc = 0.0;
            for (std::size_t ii = start; ii < end; ++ii) {
                const StepRecord& s = buf.steps[order[ii]];
                double a_norm = adv[order[ii]];
                Tape::Var b = t.input(Value::vec(s.belief));
                Tape::Var probs = taped::actor_probs(t, pv, b);
                Tape::Var logp_all = t.log_(probs);
                Tape::Var logp = t.sum(t.index_select(logp_all, {s.action}));
                Tape::Var ratio = t.exp_(t.sub(logp, t.input(Value::scalar(s.log_prob))));
                Tape::Var surr1 = t.cmul(ratio, a_norm);
                Tape::Var surr2 = t.cmul(tape_clamp(t, ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), a_norm);
                Tape::Var surrogate = tape_min(t, surr1, surr2);
                Tape::Var entropy = t.cmul(t.sum(t.mul(probs, logp_all)), -1.0);
                Tape::Var v = taped::critic_value(t, pv, b);
                Tape::Var verr = t.sub(v, t.input(Value::scalar(s.ret)));
                Tape::Var vloss = t.mul(verr, verr);
                Tape::Var sample_loss = t.add(
                    t.sub(t.cmul(vloss, cfg.vf_coef), surrogate),
                    t.cmul(entropy, -cfg.ent_coef));
                loss = loss < 0 ? sample_loss : t.add(loss, sample_loss);
                ent_acc += t.scalar_value(entropy);
                pl_acc += -t.scalar_value(surrogate);
                vl_acc += t.scalar_value(vloss);
            }
            double bsz = static_cast<double>(end - start);
            loss = t.cmul(loss, 1.0 / bsz);
            double loss_val = t.scalar_value(loss);
            if (!std::isfinite(loss_val))
                throw UpdateDivergence("ppo_update: non-finite loss at epoch " + std::to_string(epoch) +
                                       " minibatch starting at step " + std::to_string(start));
            std::vector<Value> grads = t.gradient(loss, pv.trainable());
            optim::clip_global_norm(grads, cfg.max_grad_norm);
            adam.step(params.all(), grads);
            stats.policy_loss += pl_acc / bsz;
            stats.value_loss += vl_acc / bsz;
            stats.entropy += ent_acc / bsz;
            stats.minibatches += 1;
        }
    }
    if (stats.minibatches > 0) {
        stats.policy_loss /= stats.minibatches;
        stats.value_loss /= stats.minibatches;
        stats.entropy /= stats.minibatches;
    }
    return stats;
}

}  // namespace xdef::policy
