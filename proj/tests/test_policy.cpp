#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "xdef/policy.hpp"

using namespace xdef;
using namespace xdef::policy;

namespace {

PolicyParams random_policy(std::uint64_t seed, int belief_dim = 8) {
    Rng rng(seed);
    return PolicyParams::init(belief_dim, 16, rng);
}

std::vector<double> random_belief(Rng& rng, int dim) {
    std::vector<double> b(static_cast<std::size_t>(dim));
    for (double& x : b) x = rng.uniform(-1.0, 1.0);
    return b;
}

// PPO loss recomputed from the public forward functions, for before/after checks
double total_loss(const RolloutBuffer& buf, const PolicyParams& p, const PpoConfig& cfg) {
    double loss = 0.0;
    for (const StepRecord& s : buf.steps) {
        std::vector<double> probs = action_probs(p, s.belief);
        double lp = std::log(probs[static_cast<std::size_t>(s.action)]);
        double ratio = std::exp(lp - s.log_prob);
        double clipped = std::min(std::max(ratio, 1.0 - cfg.clip), 1.0 + cfg.clip);
        double surr = std::min(ratio * s.advantage, clipped * s.advantage);
        double v = critic_value(p, s.belief);
        double ent = 0.0;
        for (double q : probs)
            if (q > 0) ent -= q * std::log(q);
        loss += -surr + cfg.vf_coef * (v - s.ret) * (v - s.ret) - cfg.ent_coef * ent;
    }
    return loss / static_cast<double>(buf.steps.size());
}

}  // namespace

TEST_CASE("greedy selection with zero actor weights falls back to Monitor") {
    PolicyParams p = random_policy(1);
    p.actor_w1.data.assign(p.actor_w1.size(), 0.0);
    p.actor_b1.data.assign(p.actor_b1.size(), 0.0);
    p.actor_w2.data.assign(p.actor_w2.size(), 0.0);
    p.actor_b2.data.assign(p.actor_b2.size(), 0.0);
    Rng rng(1);
    std::vector<double> b(8, 0.3);
    CHECK(select_action(b, p, ActionMode::Greedy, rng).action == 0);
}

TEST_CASE("returned log-prob equals the log-softmax of the actor logits") {
    PolicyParams p = random_policy(2);
    Rng rng(3);
    std::vector<double> b = random_belief(rng, 8);
    ActionResult r = select_action(b, p, ActionMode::Greedy, rng);
    std::vector<double> probs = action_probs(p, b);
    CHECK(r.log_prob == doctest::Approx(std::log(probs[static_cast<std::size_t>(r.action)]))
                            .epsilon(1e-12));
    CHECK(r.value == doctest::Approx(critic_value(p, b)).epsilon(1e-12));
}

TEST_CASE("sampling is reproducible and matches softmax frequencies") {
    PolicyParams p = random_policy(4);
    // force logits (1,0,0,0): zero the hidden layer influence, set output bias
    p.actor_w1.data.assign(p.actor_w1.size(), 0.0);
    p.actor_b1.data.assign(p.actor_b1.size(), 0.0);
    p.actor_w2.data.assign(p.actor_w2.size(), 0.0);
    p.actor_b2.data.assign(p.actor_b2.size(), 0.0);
    p.actor_b2.data[0] = 1.0;

    std::vector<double> b(8, 0.0);
    std::vector<double> want = action_probs(p, b);  // softmax(1,0,0,0)

    const int n = 100000;
    std::vector<int> counts(4, 0);
    Rng rng(5);
    for (int i = 0; i < n; ++i)
        ++counts[static_cast<std::size_t>(select_action(b, p, ActionMode::Sample, rng).action)];
    for (int a = 0; a < 4; ++a)
        CHECK(std::fabs(static_cast<double>(counts[static_cast<std::size_t>(a)]) / n -
                        want[static_cast<std::size_t>(a)]) <= 0.01);

    // determinism of the sampled sequence
    Rng r1(6), r2(6);
    for (int i = 0; i < 50; ++i)
        CHECK(select_action(b, p, ActionMode::Sample, r1).action ==
              select_action(b, p, ActionMode::Sample, r2).action);
}

TEST_CASE("GAE base cases") {
    SUBCASE("single step, reward 1, value 0, gamma 1") {
        RolloutBuffer buf;
        StepRecord s;
        s.belief = {0.0};
        s.reward = 1.0;
        s.value = 0.0;
        s.done = true;
        buf.steps.push_back(s);
        compute_advantages(buf, 1.0, 0.95);
        CHECK(buf.steps[0].advantage == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(buf.steps[0].ret == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("all zeros stay zero") {
        RolloutBuffer buf;
        for (int i = 0; i < 4; ++i) {
            StepRecord s;
            s.belief = {0.0};
            s.done = i == 3;
            buf.steps.push_back(s);
        }
        compute_advantages(buf, 0.99, 0.95);
        for (const auto& s : buf.steps) {
            CHECK(s.advantage == 0.0);
            CHECK(s.ret == 0.0);
        }
    }
    SUBCASE("incomplete episode is rejected") {
        RolloutBuffer buf;
        StepRecord s;
        s.belief = {0.0};
        s.done = false;
        buf.steps.push_back(s);
        CHECK_THROWS_AS(compute_advantages(buf, 0.99, 0.95), std::invalid_argument);
    }
}

TEST_CASE("GAE matches an independent recurrence on a random episode") {
    const double gamma = 0.9, lam = 0.8;
    Rng rng(7);
    RolloutBuffer buf;
    std::vector<double> rewards, values;
    for (int i = 0; i < 5; ++i) {
        StepRecord s;
        s.belief = {0.0};
        s.reward = rng.uniform(-1.0, 1.0);
        s.value = rng.uniform(-0.5, 0.5);
        s.done = i == 4;
        rewards.push_back(s.reward);
        values.push_back(s.value);
        buf.steps.push_back(s);
    }
    compute_advantages(buf, gamma, lam);

    // direct evaluation of the recurrence, written independently
    std::vector<double> adv(5);
    double acc = 0.0;
    for (int i = 4; i >= 0; --i) {
        double next_v = i == 4 ? 0.0 : values[static_cast<std::size_t>(i + 1)];
        double delta = rewards[static_cast<std::size_t>(i)] + gamma * next_v -
                       values[static_cast<std::size_t>(i)];
        acc = delta + gamma * lam * acc;
        adv[static_cast<std::size_t>(i)] = acc;
    }
    for (int i = 0; i < 5; ++i) {
        CHECK(buf.steps[static_cast<std::size_t>(i)].advantage ==
              doctest::Approx(adv[static_cast<std::size_t>(i)]).epsilon(1e-12));
        CHECK(buf.steps[static_cast<std::size_t>(i)].ret ==
              doctest::Approx(adv[static_cast<std::size_t>(i)] +
                              values[static_cast<std::size_t>(i)])
                  .epsilon(1e-12));
    }
}

TEST_CASE("ppo_update with learning rate 0 is an identity on parameters") {
    PolicyParams p = random_policy(8);
    PolicyParams before = p;
    Rng rng(9);
    RolloutBuffer buf;
    for (int i = 0; i < 8; ++i) {
        StepRecord s;
        s.belief = random_belief(rng, 8);
        s.action = rng.uniform_int(4);
        s.log_prob = std::log(action_probs(p, s.belief)[static_cast<std::size_t>(s.action)]);
        s.value = critic_value(p, s.belief);
        s.reward = rng.uniform(-1.0, 1.0);
        s.done = i == 7;
        buf.steps.push_back(s);
    }
    compute_advantages(buf, 0.99, 0.95);
    PpoConfig cfg;
    cfg.lr = 0.0;
    cfg.minibatch = 4;
    optim::Adam adam(0.0);
    Rng urng(10);
    ppo_update(buf, p, adam, cfg, urng);
    auto pa = p.all();
    auto pb = before.all();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->data == pb[i]->data);
}

TEST_CASE("fully clipped steps move no actor parameter") {
    // ratio 1.5 with positive advantage contributes as the constant 1.2 (and
    // ratio 0.5 with negative advantage as the constant 0.8), so the actor
    // receives zero surrogate gradient from both
    PolicyParams p = random_policy(11);
    PolicyParams before = p;
    Rng rng(12);
    RolloutBuffer buf;
    for (int i = 0; i < 2; ++i) {
        StepRecord s;
        s.belief = random_belief(rng, 8);
        s.action = i;
        double lp = std::log(action_probs(p, s.belief)[static_cast<std::size_t>(i)]);
        s.log_prob = i == 0 ? lp - std::log(1.5) : lp - std::log(0.5);
        s.value = critic_value(p, s.belief);
        s.reward = 1.0;
        s.done = i == 1;
        buf.steps.push_back(s);
    }
    compute_advantages(buf, 0.99, 0.95);
    // advantages +1/-1 are a fixed point of the batch normalization (up to a
    // sign-preserving scale), so the clip regions stay as constructed
    buf.steps[0].advantage = 1.0;
    buf.steps[1].advantage = -1.0;

    PpoConfig cfg;
    cfg.epochs = 1;
    cfg.minibatch = 2;
    cfg.ent_coef = 0.0;  // isolate the surrogate term
    optim::Adam adam(cfg.lr);
    Rng urng(13);
    ppo_update(buf, p, adam, cfg, urng);

    CHECK(p.actor_w1.data == before.actor_w1.data);
    CHECK(p.actor_w2.data == before.actor_w2.data);
    CHECK(p.actor_b2.data == before.actor_b2.data);
    // ...while the critic still trains on the value target
    CHECK(p.critic_w2.data != before.critic_w2.data);
}

TEST_CASE("zero advantages with zero entropy bonus leave the actor unchanged") {
    PolicyParams p = random_policy(14);
    PolicyParams before = p;
    Rng rng(15);
    RolloutBuffer buf;
    for (int i = 0; i < 4; ++i) {
        StepRecord s;
        s.belief = random_belief(rng, 8);
        s.action = rng.uniform_int(4);
        s.log_prob = std::log(action_probs(p, s.belief)[static_cast<std::size_t>(s.action)]);
        s.value = critic_value(p, s.belief);
        s.done = i == 3;
        buf.steps.push_back(s);
    }
    compute_advantages(buf, 0.99, 0.95);
    for (auto& st : buf.steps) {
        st.advantage = 0.0;
        st.ret = st.value;  // critic already perfect, so nothing should move
    }
    PpoConfig cfg;
    cfg.epochs = 1;
    cfg.minibatch = 4;
    cfg.ent_coef = 0.0;
    optim::Adam adam(cfg.lr);
    Rng urng(16);
    ppo_update(buf, p, adam, cfg, urng);
    CHECK(p.actor_w1.data == before.actor_w1.data);
    CHECK(p.actor_w2.data == before.actor_w2.data);
}

TEST_CASE("the recomputed PPO loss decreases after one update on a tiny batch") {
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PolicyParams p = random_policy(20 + seed);
        Rng rng(40 + seed);
        RolloutBuffer buf;
        for (int i = 0; i < 16; ++i) {
            StepRecord s;
            s.belief = random_belief(rng, 8);
            s.action = rng.uniform_int(4);
            s.log_prob = std::log(action_probs(p, s.belief)[static_cast<std::size_t>(s.action)]);
            s.value = critic_value(p, s.belief);
            s.reward = rng.uniform(-1.0, 1.0);
            s.done = i == 15;
            buf.steps.push_back(s);
        }
        compute_advantages(buf, 0.99, 0.95);
        // normalize here so the before/after comparison uses the same targets
        double mean = 0.0, var = 0.0;
        for (auto& st : buf.steps) mean += st.advantage;
        mean /= static_cast<double>(buf.steps.size());
        for (auto& st : buf.steps) var += (st.advantage - mean) * (st.advantage - mean);
        var /= static_cast<double>(buf.steps.size());
        double sd = std::sqrt(var) + 1e-8;
        for (auto& st : buf.steps) st.advantage = (st.advantage - mean) / sd;

        PpoConfig cfg;
        cfg.minibatch = 16;
        cfg.lr = 1e-3;
        double before = total_loss(buf, p, cfg);
        optim::Adam adam(cfg.lr);
        Rng urng(60 + seed);
        ppo_update(buf, p, adam, cfg, urng);
        if (total_loss(buf, p, cfg) < before) ++improved;
    }
    CHECK(improved >= 9);
}
