#include "xdef/aptsim.hpp"

#include <stdexcept>

namespace xdef::aptsim {

using policy::DefenseAction;
using prov::EntityKind;
using prov::Event;
using prov::Relation;

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Benign: return "benign";
        case Stage::Recon: return "recon";
        case Stage::InitAcc: return "initacc";
        case Stage::PrivEsc: return "privesc";
        case Stage::LatMov: return "latmov";
        case Stage::C2: return "c2";
        case Stage::Exfil: return "exfil";
    }
    return "?";
}

void validate(const SimConfig& c) {
    if (c.p_adv < 0.0 || c.p_adv > 1.0) throw std::invalid_argument("sim: p_adv out of [0,1]");
    if (c.p_mit < 0.0 || c.p_mit > 1.0) throw std::invalid_argument("sim: p_mit out of [0,1]");
    if (c.horizon < 1) throw std::invalid_argument("sim: horizon must be >= 1");
    if (c.benign_rate < 0.0) throw std::invalid_argument("sim: negative benign rate");
    if (c.hosts < 1) throw std::invalid_argument("sim: host count must be >= 1");
}

bool is_counter(Stage s, DefenseAction a) {
    switch (s) {
        case Stage::Recon: return a == DefenseAction::BlockTraffic;
        case Stage::InitAcc: return a == DefenseAction::RevokeCredentials;
        case Stage::PrivEsc: return a == DefenseAction::RevokeCredentials;
        case Stage::LatMov: return a == DefenseAction::IsolateHost;
        case Stage::C2: return a == DefenseAction::BlockTraffic || a == DefenseAction::IsolateHost;
        case Stage::Exfil: return a == DefenseAction::BlockTraffic;
        case Stage::Benign: return false;
    }
    return false;
}

Simulator::Simulator(const SimConfig& cfg) : cfg_(cfg), rng_(cfg.seed) { validate(cfg); }

std::string Simulator::fresh_id(const char* prefix) {
    return std::string(prefix) + std::to_string(id_counter_++);
}

std::vector<Event> Simulator::benign_events(int count) {
    std::vector<Event> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Event e;
        e.step = state_.step;
        e.suspicious_hint = false;
        switch (rng_.uniform_int(4)) {
            case 0:
                e.src = fresh_id("proc");
                e.src_kind = EntityKind::Process;
                e.dst = fresh_id("proc");
                e.dst_kind = EntityKind::Process;
                e.relation = Relation::Spawn;
                break;
            case 1:
                e.src = fresh_id("proc");
                e.src_kind = EntityKind::Process;
                e.dst = fresh_id("file");
                e.dst_kind = EntityKind::File;
                e.relation = Relation::Read;
                e.bytes = static_cast<std::uint64_t>(rng_.uniform_int(1024));
                break;
            case 2:
                e.src = fresh_id("proc");
                e.src_kind = EntityKind::Process;
                e.dst = fresh_id("file");
                e.dst_kind = EntityKind::File;
                e.relation = Relation::Write;
                e.bytes = static_cast<std::uint64_t>(rng_.uniform_int(1024));
                break;
            default:
                e.src = host_id(rng_.uniform_int(cfg_.hosts));
                e.src_kind = EntityKind::Host;
                e.dst = fresh_id("sock");
                e.dst_kind = EntityKind::Socket;
                e.relation = Relation::Connect;
                break;
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<Event> Simulator::emit_telemetry(Stage stage) {
    std::vector<Event> out;
    auto push = [&](std::string src, EntityKind sk, std::string dst, EntityKind dk, Relation rel,
                    std::uint64_t bytes = 0) {
        Event e;
        e.step = state_.step;
        e.src = std::move(src);
        e.src_kind = sk;
        e.dst = std::move(dst);
        e.dst_kind = dk;
        e.relation = rel;
        e.bytes = bytes;
        e.suspicious_hint = true;
        out.push_back(std::move(e));
    };
    std::string atk = host_id(attacker_host_);
    switch (stage) {
        case Stage::Benign:
            break;
        case Stage::Recon: {
            int fan = 4 + rng_.uniform_int(3);
            for (int i = 0; i < fan; ++i)
                push(atk, EntityKind::Host, fresh_id("sock"), EntityKind::Socket, Relation::Connect);
            break;
        }
        case Stage::InitAcc:
            push(fresh_id("file"), EntityKind::File, fresh_id("proc"), EntityKind::Process,
                 Relation::Spawn);
            break;
        case Stage::PrivEsc:
            push(fresh_id("proc"), EntityKind::Process, fresh_id("user"), EntityKind::User,
                 Relation::Auth);
            break;
        case Stage::LatMov: {
            std::string target = host_id(latmov_host_);
            push(atk, EntityKind::Host, target, EntityKind::Host, Relation::Connect);
            push(fresh_id("proc"), EntityKind::Process, fresh_id("proc"), EntityKind::Process,
                 Relation::Spawn);
            break;
        }
        case Stage::C2:
            for (int i = 0; i < 3; ++i)
                push(atk, EntityKind::Host, "ext0", EntityKind::Host, Relation::Connect);
            break;
        case Stage::Exfil:
            push(fresh_id("proc"), EntityKind::Process, fresh_id("file"), EntityKind::File,
                 Relation::Read, static_cast<std::uint64_t>(rng_.uniform_int(4096)));
            push(atk, EntityKind::Host, "ext0", EntityKind::Host, Relation::Transfer,
                 kExfilBytes + static_cast<std::uint64_t>(rng_.uniform_int(1 << 20)));
            break;
    }
    auto noise = benign_events(rng_.poisson(cfg_.benign_rate));
    out.insert(out.end(), noise.begin(), noise.end());
    return out;
}

std::vector<Event> Simulator::reset() {
    state_ = SimState{};
    rng_ = Rng(cfg_.seed);
    id_counter_ = 0;
    attacker_host_ = rng_.uniform_int(cfg_.hosts);
    latmov_host_ = cfg_.hosts > 1 ? (attacker_host_ + 1 + rng_.uniform_int(cfg_.hosts - 1)) % cfg_.hosts
                                  : attacker_host_;
    state_.compromised_hosts = {attacker_host_};
    return emit_telemetry(Stage::Benign);
}

StepOutcome Simulator::step(DefenseAction action) {
    if (state_.done) throw std::logic_error("sim: step after episode end");

    state_.step += 1;
    StepOutcome out;
    out.reward = kStepCost;
    if (action != DefenseAction::Monitor) out.reward += kActionCost;

    Stage s = state_.stage;
    bool mitigated = s != Stage::Benign && is_counter(s, action) && rng_.bernoulli(cfg_.p_mit);
    if (mitigated) {
        state_.stage = static_cast<Stage>(static_cast<int>(s) - 1);
        out.reward += kRegressReward;
        out.regressed = true;
        if (state_.stage == Stage::Benign) {
            state_.pushed_back = true;
            state_.calm_steps = 0;
        }
    } else if (s != Stage::Exfil && rng_.bernoulli(cfg_.p_adv)) {
        state_.stage = static_cast<Stage>(static_cast<int>(s) + 1);
        out.reward += kAdvancePenalty;
        out.advanced = true;
    }

    if (state_.stage == Stage::C2 || state_.stage == Stage::Exfil) state_.reached_critical = true;

    // contained while the attack sits below Recon after a push-back
    if (state_.pushed_back && state_.stage == Stage::Benign) {
        state_.contained = true;
        state_.calm_steps += 1;
    } else {
        state_.contained = false;
        state_.calm_steps = 0;
    }

    out.events = emit_telemetry(state_.stage);
    out.true_stage = state_.stage;
    out.contained = state_.contained;

    if (state_.stage == Stage::Exfil) {
        state_.done = true;
        out.reward += kExfilPenalty;
    } else if (state_.contained && state_.calm_steps >= kContainHold) {
        state_.done = true;
        out.reward += kContainBonus;
    } else if (state_.step >= cfg_.horizon) {
        state_.done = true;
    }
    out.done = state_.done;
    return out;
}

}  // namespace xdef::aptsim
