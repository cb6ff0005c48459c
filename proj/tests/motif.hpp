#pragma once

// Planted-motif harness shared by the explainer tests and the acceptance
// suite: 12-node graphs where a 3-node pattern alone determines the class
// of a small trained stage classifier, plus an exhaustive oracle for the
// smallest prediction-preserving node subset.

#include <algorithm>
#include <string>
#include <vector>

#include "xdef/explain.hpp"
#include "xdef/optim.hpp"
#include "xdef/perception.hpp"
#include "xdef/provenance.hpp"
#include "xdef/rng.hpp"

namespace motif {

using namespace xdef;

constexpr int kGraphNodes = 12;
constexpr int kClassPlain = 0;   // label used for background-only graphs
constexpr int kClassMotif = 3;   // label used when the motif is present

// The motif: a process authenticating as a user who then authenticates to a
// host — the only User/Host-kind nodes and the only auth edges in the graph.
inline std::vector<prov::Event> motif_events() {
    std::vector<prov::Event> out;
    prov::Event e;
    e.step = 0;
    e.src = "m_proc";
    e.src_kind = prov::EntityKind::Process;
    e.dst = "m_user";
    e.dst_kind = prov::EntityKind::User;
    e.relation = prov::Relation::Auth;
    out.push_back(e);
    e.src = "m_user";
    e.src_kind = prov::EntityKind::User;
    e.dst = "m_host";
    e.dst_kind = prov::EntityKind::Host;
    out.push_back(e);
    return out;
}

inline prov::ProvenanceGraph make_graph(Rng& rng, bool with_motif, int n_nodes = kGraphNodes) {
    const int background = with_motif ? n_nodes - 3 : n_nodes;
    std::vector<std::string> ids;
    std::vector<prov::EntityKind> kinds;
    for (int i = 0; i < background; ++i) {
        ids.push_back("b" + std::to_string(i));
        int k = rng.uniform_int(3);  // process / file / socket only
        kinds.push_back(static_cast<prov::EntityKind>(k));
    }
    std::vector<prov::Event> events;
    // random sparse background edges; relations exclude auth
    const prov::Relation rels[] = {prov::Relation::Spawn, prov::Relation::Read,
                                   prov::Relation::Write, prov::Relation::Connect};
    int edges = background > 0 ? background + rng.uniform_int(4) : 0;
    for (int i = 0; i < edges; ++i) {
        int a = rng.uniform_int(background);
        int b = rng.uniform_int(background);
        if (a == b) continue;
        prov::Event e;
        e.step = 0;
        e.src = ids[static_cast<std::size_t>(a)];
        e.src_kind = kinds[static_cast<std::size_t>(a)];
        e.dst = ids[static_cast<std::size_t>(b)];
        e.dst_kind = kinds[static_cast<std::size_t>(b)];
        e.relation = rels[rng.uniform_int(4)];
        events.push_back(e);
    }
    // isolated background nodes still need to exist: add a self read
    for (int i = 0; i < background; ++i) {
        bool seen = false;
        for (const auto& e : events)
            if (e.src == ids[static_cast<std::size_t>(i)] || e.dst == ids[static_cast<std::size_t>(i)])
                seen = true;
        if (!seen) {
            prov::Event e;
            e.step = 0;
            e.src = e.dst = ids[static_cast<std::size_t>(i)];
            e.src_kind = e.dst_kind = kinds[static_cast<std::size_t>(i)];
            e.relation = prov::Relation::Read;
            events.push_back(e);
        }
    }
    if (with_motif) {
        auto m = motif_events();
        events.insert(events.end(), m.begin(), m.end());
    }
    return prov::build_graph(events, 0, 1);
}

inline std::vector<int> motif_node_indices(const prov::ProvenanceGraph& g) {
    return {g.node_index("m_proc"), g.node_index("m_user"), g.node_index("m_host")};
}

// single-step class probability from a zero recurrent state
inline int predict(const prov::ProvenanceGraph& g, const percept::PerceptionParams& p) {
    percept::LstmState st = percept::LstmState::zeros(p.dims.d);
    std::vector<double> probs =
        percept::estimate_stage_step(st, percept::encode_graph(g, p).g, p);
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

// supervised fit of the stage stack on labelled motif/background graphs
inline percept::PerceptionParams train_classifier(std::uint64_t seed, int n_graphs = 160,
                                                  int epochs = 150) {
    percept::Dims dims;
    Rng init_rng(seed);
    percept::PerceptionParams p = percept::PerceptionParams::init(dims, init_rng);

    Rng data_rng(seed + 1000);
    struct Sample {
        prov::ProvenanceGraph g;
        std::vector<double> node_mask;  // empty = no mask
        int label;
    };
    std::vector<Sample> samples;
    for (int i = 0; i < n_graphs; ++i) {
        bool with = (i % 2) == 0;
        // varied sizes, down to the bare motif / a single background node, so
        // the class depends on the motif and not on graph size
        int lo = with ? 3 : 1;
        int size = lo + data_rng.uniform_int(kGraphNodes - lo + 1);
        prov::ProvenanceGraph g = make_graph(data_rng, with, size);
        // besides the full graph, train on random induced subgraphs labelled
        // by motif survival, so partial motifs and odd fragments are anchored
        for (int rep = 0; rep < 2; ++rep) {
            prov::ProvenanceGraph sample = g;
            if (rep > 0) {
                std::vector<int> drop;
                for (int v = 0; v < g.num_nodes(); ++v)
                    if (data_rng.bernoulli(0.4)) drop.push_back(v);
                if (static_cast<int>(drop.size()) == g.num_nodes()) drop.pop_back();
                sample = prov::remove_subgraph(g, drop, {});
            }
            bool motif_alive = sample.node_index("m_proc") >= 0 &&
                               sample.node_index("m_user") >= 0 &&
                               sample.node_index("m_host") >= 0;
            samples.push_back({std::move(sample), {}, motif_alive ? kClassMotif : kClassPlain});
        }
        // soft-masked variants teach the class to track continuous feature
        // weights, not just hard removal: down-weighting any single motif
        // node must flip the class, while background weights are free
        if (with) {
            std::vector<int> motif = motif_node_indices(g);
            for (int rep = 0; rep < 2; ++rep) {
                std::vector<double> mask(static_cast<std::size_t>(g.num_nodes()));
                for (double& m : mask) m = data_rng.uniform(0.0, 1.0);
                for (int v : motif)
                    mask[static_cast<std::size_t>(v)] = data_rng.uniform(0.75, 1.0);
                int label = kClassMotif;
                if (rep > 0) {
                    int weak = motif[static_cast<std::size_t>(data_rng.uniform_int(3))];
                    mask[static_cast<std::size_t>(weak)] = data_rng.uniform(0.0, 0.25);
                    label = kClassPlain;
                }
                samples.push_back({g, std::move(mask), label});
            }
        }
    }

    optim::Adam adam(5e-3);
    std::vector<diff::Value*> params = {&p.stage_cell.w, &p.stage_cell.b, &p.stage_head_w,
                                        &p.stage_head_b};
    for (auto& l : p.gnn) {
        params.push_back(&l.w_self);
        params.push_back(&l.w_nbr);
        params.push_back(&l.b);
    }
    for (int epoch = 0; epoch < epochs; ++epoch) {
        diff::Tape t;
        auto pv = percept::taped::PerceptionVars::make(t, p);
        std::vector<diff::Tape::Var> pvars = {pv.stage.w, pv.stage.b, pv.stage_head_w,
                                              pv.stage_head_b};
        for (auto& l : pv.gnn) {
            pvars.push_back(l.w_self);
            pvars.push_back(l.w_nbr);
            pvars.push_back(l.b);
        }
        diff::Tape::Var loss = -1;
        for (const Sample& s : samples) {
            std::optional<percept::taped::Masks> masks;
            if (!s.node_mask.empty()) {
                std::vector<double> edge_mask(static_cast<std::size_t>(s.g.num_edges()), 1.0);
                masks = percept::taped::Masks{t.input(diff::Value::vec(s.node_mask)),
                                              t.input(diff::Value::vec(edge_mask))};
            }
            auto enc = percept::taped::encode_graph(t, s.g, pv, masks);
            auto st = percept::taped::lstm_state_input(t, percept::LstmState::zeros(dims.d));
            st = percept::taped::lstm_step(t, pv.stage, enc.g, st);
            diff::Tape::Var probs = percept::taped::stage_probs(t, pv, st.h);
            diff::Tape::Var nll =
                t.cmul(t.sum(t.index_select(t.log_(probs), {s.label})), -1.0);
            loss = loss < 0 ? nll : t.add(loss, nll);
        }
        loss = t.cmul(loss, 1.0 / static_cast<double>(samples.size()));
        std::vector<diff::Value> grads = t.gradient(loss, pvars);
        optim::clip_global_norm(grads, 1.0);
        adam.step(params, grads);
    }
    return p;
}

// Exhaustive oracle: smallest node subset (size <= max_size) whose induced
// subgraph alone preserves the model's predicted class. Returns empty when
// none exists within the size bound.
inline std::vector<int> smallest_preserving_subset(const prov::ProvenanceGraph& g,
                                                   const percept::PerceptionParams& p,
                                                   int predicted, int max_size = 4) {
    int n = g.num_nodes();
    std::vector<int> best;
    std::vector<int> comb;
    // enumerate subsets by size, smallest first
    for (int size = 1; size <= max_size; ++size) {
        comb.assign(static_cast<std::size_t>(size), 0);
        for (int i = 0; i < size; ++i) comb[static_cast<std::size_t>(i)] = i;
        while (true) {
            // keep only comb: remove the complement
            std::vector<int> complement;
            for (int i = 0; i < n; ++i)
                if (std::find(comb.begin(), comb.end(), i) == comb.end()) complement.push_back(i);
            prov::ProvenanceGraph reduced = prov::remove_subgraph(g, complement, {});
            if (!reduced.empty() && predict(reduced, p) == predicted) return comb;
            // next combination
            int i = size - 1;
            while (i >= 0 && comb[static_cast<std::size_t>(i)] == n - size + i) --i;
            if (i < 0) break;
            ++comb[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < size; ++j)
                comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return best;
}

}  // namespace motif
