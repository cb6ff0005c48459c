#pragma once

#include <string>
#include <vector>

#include "xdef/perception.hpp"
#include "xdef/policy.hpp"
#include "xdef/provenance.hpp"
#include "xdef/rng.hpp"

namespace xdef::explain {

using diff::Value;

struct GraphMasks {
    int step = 0;
    std::vector<double> node;  // entries in [0,1], canonical node order
    std::vector<double> edge;  // entries in [0,1], canonical edge order
};

struct ExplanationSubgraph {
    int step = 0;
    std::vector<int> nodes;  // indices into the explained graph, importance-descending
    std::vector<int> edges;  // indices, both endpoints inside nodes
};

struct TemporalAttribution {
    int step = 0;
    std::vector<double> raw;         // I_1..I_t, nonnegative
    std::vector<double> normalized;  // sums to 1; uniform when raw is all zero
};

struct PolicyAttribution {
    int step = 0;
    std::vector<double> raw;  // |dpi/db_i|
    std::vector<double> phi;  // L1-normalized; uniform when raw is all zero
};

struct ProjectedEvidence {
    int step = 0;
    std::vector<double> g_star;   // dimension d
    std::vector<double> phi_xai;  // dimension d_b, nonnegative, L1-normalized
};

struct ExplanationSignal {
    int step = 0;
    bool has_structure = true;  // false for the empty-graph sentinel
    GraphMasks masks;
    ExplanationSubgraph subgraph;
    TemporalAttribution temporal;
    PolicyAttribution policy;
    ProjectedEvidence projected;
};

struct ExplainerConfig {
    int steps = 100;
    double lr = 1e-2;
    double coverage = 0.9;       // top-m cumulative importance threshold
    double sparsity = 0.005;     // weight on mean(M)
    double entropy_reg = 0.1;    // weight on mean binary entropy of M
    double edge_threshold = 0.5;
};

// fixed seeded projections used to map structural evidence into belief space
struct Projections {
    Value w_g;  // {d_b, d}
    Value w_p;  // {d_b, K}
    static Projections init(int d_b, int d, int K, Rng& rng);
};

// Optimizes soft node/edge masks so the masked graph preserves the
// predicted stage, then selects the top-m subgraph covering the requested
// share of cumulative node importance. stage_state is the estimator's
// recurrent state before consuming this step's embedding.
struct GraphExplanation {
    GraphMasks masks;
    ExplanationSubgraph subgraph;
};
GraphExplanation explain_graph(const prov::ProvenanceGraph& graph,
                               const percept::PerceptionParams& params,
                               const percept::LstmState& stage_state, int predicted_stage,
                               const ExplainerConfig& cfg, Rng& rng, int step = 0);

// probability of the predicted stage when the (optionally masked) graph is
// consumed from the given estimator state; shared by the explainer and the
// fidelity evaluation
double stage_prob_on_graph(const prov::ProvenanceGraph& graph,
                           const percept::PerceptionParams& params,
                           const percept::LstmState& stage_state, int stage);

TemporalAttribution temporal_attribution(const std::vector<std::vector<double>>& embeddings,
                                         const percept::PerceptionParams& params, int step = 0);

PolicyAttribution policy_attribution(const policy::PolicyParams& params,
                                     const std::vector<double>& belief, int action, int step = 0);

ProjectedEvidence project_explanation(const GraphMasks& masks,
                                      const std::vector<std::vector<double>>& node_embeddings,
                                      const std::vector<double>& p_t, const Projections& proj,
                                      int step = 0);

// bundles components from the same step; throws when step indices disagree
ExplanationSignal assemble_explanation(const GraphMasks& masks, const ExplanationSubgraph& subgraph,
                                       const TemporalAttribution& temporal,
                                       const PolicyAttribution& policy_attr,
                                       const ProjectedEvidence& projected);
ExplanationSignal empty_explanation(int step, const TemporalAttribution& temporal,
                                    const PolicyAttribution& policy_attr);

// one structured text record per explained step
std::string dump_record(const ExplanationSignal& s, const prov::ProvenanceGraph& graph,
                        int predicted_stage, double c_graph, double c_temp, double c_policy,
                        double conf_total);

}  // namespace xdef::explain
