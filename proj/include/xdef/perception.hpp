#pragma once

#include <optional>
#include <vector>

#include "xdef/diffcore.hpp"
#include "xdef/provenance.hpp"
#include "xdef/rng.hpp"

namespace xdef::percept {

using diff::Tape;
using diff::Value;

struct Dims {
    int F = prov::kNodeFeatureDim;
    int d = 32;    // graph embedding size
    int K = 7;     // stage count, index 0 = benign
    int d_b = 64;  // belief size
    int L = 2;     // GNN layers
    int n_actions = 4;
    int obs_dim() const { return d + K + n_actions; }
};

// one LSTM cell; w is {4H, in+H} with gate order i,f,g,o
struct LstmParams {
    Value w;
    Value b;
    int input_dim = 0;
    int hidden_dim = 0;
};

struct GnnLayer {
    Value w_self;  // {out, in}
    Value w_nbr;   // {out, in}
    Value b;       // {out}
};

struct PerceptionParams {
    Dims dims;
    std::vector<GnnLayer> gnn;
    LstmParams stage_cell;  // input d, hidden d
    Value stage_head_w;     // {K, d}
    Value stage_head_b;     // {K}
    LstmParams belief_cell;  // input obs_dim, hidden d_b

    static PerceptionParams init(const Dims& dims, Rng& rng);
};

struct LstmState {
    std::vector<double> h, c;
    static LstmState zeros(int hidden) {
        return LstmState{std::vector<double>(static_cast<std::size_t>(hidden), 0.0),
                         std::vector<double>(static_cast<std::size_t>(hidden), 0.0)};
    }
};

using BeliefState = LstmState;

struct GraphEmbedding {
    std::vector<double> g;                   // mean-pooled, zero for the empty graph
    std::vector<std::vector<double>> h;      // final per-node states, canonical node order
};

// ---- plain (inference) forward passes ----

GraphEmbedding encode_graph(const prov::ProvenanceGraph& graph, const PerceptionParams& params);

// advances the recurrent state by one embedding and returns p_t
std::vector<double> estimate_stage_step(LstmState& state, const std::vector<double>& g,
                                        const PerceptionParams& params);
std::vector<double> estimate_stage(const std::vector<std::vector<double>>& embeddings,
                                   const PerceptionParams& params);

BeliefState update_belief(const BeliefState& prev, const std::vector<double>& obs,
                          const PerceptionParams& params);

std::vector<double> make_observation(const std::vector<double>& g, const std::vector<double>& p,
                                     int prev_action, int n_actions);

// ---- taped builders (training and attribution) ----

namespace taped {

struct LstmVars {
    Tape::Var w, b;
    int input_dim, hidden_dim;
};

struct GnnLayerVars {
    Tape::Var w_self, w_nbr, b;
};

struct PerceptionVars {
    std::vector<GnnLayerVars> gnn;
    LstmVars stage;
    Tape::Var stage_head_w, stage_head_b;
    LstmVars belief;
    Dims dims;

    static PerceptionVars make(Tape& t, const PerceptionParams& p);
    std::vector<Tape::Var> trainable() const;
};

struct LstmStateVars {
    Tape::Var h, c;
};

struct EncodeOut {
    Tape::Var g;
    std::vector<Tape::Var> h;
};

struct Masks {
    Tape::Var node_mask;  // vector |V|
    Tape::Var edge_mask;  // vector |E|
};

LstmStateVars lstm_state_input(Tape& t, const LstmState& s);
LstmStateVars lstm_step(Tape& t, const LstmVars& cell, Tape::Var x, const LstmStateVars& prev);

EncodeOut encode_graph(Tape& t, const prov::ProvenanceGraph& graph, const PerceptionVars& pv,
                       const std::optional<Masks>& masks = std::nullopt);

Tape::Var stage_probs(Tape& t, const PerceptionVars& pv, Tape::Var stage_hidden);

}  // namespace taped

}  // namespace xdef::percept
