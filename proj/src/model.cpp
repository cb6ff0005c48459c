#include "xdef/model.hpp"

#include "xdef/checkpoint.hpp"

namespace xdef::model {

Model Model::init(const config::ExperimentConfig& cfg, std::uint64_t seed) {
    Rng master(seed);
    Rng pr = master.split(1);
    Rng po = master.split(2);
    Rng pj = master.split(3);
    Model m;
    m.perception = percept::PerceptionParams::init(cfg.dims(), pr);
    m.defense = policy::PolicyParams::init(cfg.model.d_b, 64, po);
    m.projections = explain::Projections::init(cfg.model.d_b, cfg.model.d, cfg.model.K, pj);
    return m;
}

namespace {

template <typename Self, typename Ptr>
std::vector<std::pair<std::string, Ptr>> list_arrays(Self& m) {
    std::vector<std::pair<std::string, Ptr>> out;
    for (std::size_t l = 0; l < m.perception.gnn.size(); ++l) {
        std::string p = "gnn" + std::to_string(l) + ".";
        out.emplace_back(p + "w_self", &m.perception.gnn[l].w_self);
        out.emplace_back(p + "w_nbr", &m.perception.gnn[l].w_nbr);
        out.emplace_back(p + "b", &m.perception.gnn[l].b);
    }
    out.emplace_back("stage.w", &m.perception.stage_cell.w);
    out.emplace_back("stage.b", &m.perception.stage_cell.b);
    out.emplace_back("stage.head_w", &m.perception.stage_head_w);
    out.emplace_back("stage.head_b", &m.perception.stage_head_b);
    out.emplace_back("belief.w", &m.perception.belief_cell.w);
    out.emplace_back("belief.b", &m.perception.belief_cell.b);
    out.emplace_back("actor.w1", &m.defense.actor_w1);
    out.emplace_back("actor.b1", &m.defense.actor_b1);
    out.emplace_back("actor.w2", &m.defense.actor_w2);
    out.emplace_back("actor.b2", &m.defense.actor_b2);
    out.emplace_back("critic.w1", &m.defense.critic_w1);
    out.emplace_back("critic.b1", &m.defense.critic_b1);
    out.emplace_back("critic.w2", &m.defense.critic_w2);
    out.emplace_back("critic.b2", &m.defense.critic_b2);
    out.emplace_back("proj.w_g", &m.projections.w_g);
    out.emplace_back("proj.w_p", &m.projections.w_p);
    return out;
}

}  // namespace

std::vector<std::pair<std::string, const Value*>> Model::arrays() const {
    return list_arrays<const Model, const Value*>(*this);
}

std::vector<std::pair<std::string, Value*>> Model::arrays_mut() {
    return list_arrays<Model, Value*>(*this);
}

void Model::save(const std::string& path) const { ckpt::save_file(path, arrays()); }

void Model::load(const std::string& path) { ckpt::load_file(path, arrays_mut()); }

}  // namespace xdef::model
