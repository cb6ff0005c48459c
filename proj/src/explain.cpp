#include "xdef/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "xdef/optim.hpp"

namespace xdef::explain {

using diff::Tape;
using percept::taped::Masks;
using percept::taped::PerceptionVars;

Projections Projections::init(int d_b, int d, int K, Rng& rng) {
    Projections p;
    p.w_g = Value::zeros({d_b, d});
    p.w_p = Value::zeros({d_b, K});
    double sg = 1.0 / std::sqrt(static_cast<double>(d));
    double sp = 1.0 / std::sqrt(static_cast<double>(K));
    for (double& x : p.w_g.data) x = rng.normal() * sg;
    for (double& x : p.w_p.data) x = rng.normal() * sp;
    return p;
}

namespace {

std::vector<double> l1_normalize_or_uniform(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    std::vector<double> out(v.size());
    if (sum <= 0.0) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(v.size()));
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / sum;
    }
    return out;
}

// masked (or plain) forward: encode graph, one estimator step from the
// frozen state, softmax head; returns the predicted-stage probability var
Tape::Var masked_stage_prob(Tape& t, const prov::ProvenanceGraph& graph,
                            const PerceptionVars& pv, const percept::LstmState& stage_state,
                            int stage, const std::optional<Masks>& masks) {
    auto enc = percept::taped::encode_graph(t, graph, pv, masks);
    auto st = percept::taped::lstm_state_input(t, stage_state);
    auto next = percept::taped::lstm_step(t, pv.stage, enc.g, st);
    Tape::Var probs = percept::taped::stage_probs(t, pv, next.h);
    return t.sum(t.index_select(probs, {stage}));
}

}  // namespace

double stage_prob_on_graph(const prov::ProvenanceGraph& graph,
                           const percept::PerceptionParams& params,
                           const percept::LstmState& stage_state, int stage) {
    percept::GraphEmbedding emb = percept::encode_graph(graph, params);
    percept::LstmState st = stage_state;
    std::vector<double> p = percept::estimate_stage_step(st, emb.g, params);
    return p[static_cast<std::size_t>(stage)];
}

GraphExplanation explain_graph(const prov::ProvenanceGraph& graph,
                               const percept::PerceptionParams& params,
                               const percept::LstmState& stage_state, int predicted_stage,
                               const ExplainerConfig& cfg, Rng& rng, int step) {
    if (graph.empty())
        throw std::invalid_argument("explain_graph: empty graph has no structural evidence");
    if (predicted_stage < 0 || predicted_stage >= params.dims.K)
        throw std::invalid_argument("explain_graph: stage index out of range");

    int n = graph.num_nodes();
    int m = graph.num_edges();

    Value node_logits = Value::zeros({n});
    Value edge_logits = Value::zeros({std::max(m, 1)});
    for (double& x : node_logits.data) x = rng.uniform(-0.01, 0.01);
    for (double& x : edge_logits.data) x = rng.uniform(-0.01, 0.01);

    optim::Adam adam(cfg.lr);
    std::vector<Value*> logit_ptrs = {&node_logits, &edge_logits};

    for (int it = 0; it < cfg.steps; ++it) {
        Tape t;
        PerceptionVars pv = PerceptionVars::make(t, params);
        Tape::Var nl = t.input(node_logits);
        Tape::Var el = t.input(edge_logits);
        Tape::Var mv = t.sigmoid(nl);
        Tape::Var me = t.sigmoid(el);
        Masks masks{mv, me};
        Tape::Var p_hat = masked_stage_prob(t, graph, pv, stage_state, predicted_stage, masks);

        Tape::Var all_masks = m > 0 ? t.concat({mv, me}) : mv;
        Tape::Var sparsity = t.mean(all_masks);
        // binary entropy: -M log M - (1-M) log(1-M); sigmoid keeps M in (0,1)
        Value one_val = t.value(all_masks);
        std::fill(one_val.data.begin(), one_val.data.end(), 1.0);
        Tape::Var one = t.input(one_val);
        Tape::Var comp = t.sub(one, all_masks);
        Tape::Var ent = t.mean(t.cmul(
            t.add(t.mul(all_masks, t.log_(all_masks)), t.mul(comp, t.log_(comp))), -1.0));

        Tape::Var loss = t.add(t.cmul(t.log_(p_hat), -1.0),
                               t.add(t.cmul(sparsity, cfg.sparsity), t.cmul(ent, cfg.entropy_reg)));
        std::vector<Value> grads = t.gradient(loss, {nl, el});
        adam.step(logit_ptrs, grads);
    }

    GraphExplanation out;
    out.masks.step = step;
    out.masks.node.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.masks.node[static_cast<std::size_t>(i)] =
            1.0 / (1.0 + std::exp(-node_logits.data[static_cast<std::size_t>(i)]));
    out.masks.edge.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        out.masks.edge[static_cast<std::size_t>(i)] =
            1.0 / (1.0 + std::exp(-edge_logits.data[static_cast<std::size_t>(i)]));

    // top-m rule: smallest importance-descending prefix covering the target share
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double wa = out.masks.node[static_cast<std::size_t>(a)];
        double wb = out.masks.node[static_cast<std::size_t>(b)];
        if (wa != wb) return wa > wb;
        return a < b;
    });
    double total = std::accumulate(out.masks.node.begin(), out.masks.node.end(), 0.0);
    double acc = 0.0;
    out.subgraph.step = step;
    for (int v : order) {
        out.subgraph.nodes.push_back(v);
        acc += out.masks.node[static_cast<std::size_t>(v)];
        if (acc >= cfg.coverage * total) break;
    }
    std::vector<char> in_star(static_cast<std::size_t>(n), 0);
    for (int v : out.subgraph.nodes) in_star[static_cast<std::size_t>(v)] = 1;
    for (int e = 0; e < m; ++e) {
        const prov::GraphEdge& ge = graph.edges[static_cast<std::size_t>(e)];
        if (in_star[static_cast<std::size_t>(ge.src)] && in_star[static_cast<std::size_t>(ge.dst)] &&
            out.masks.edge[static_cast<std::size_t>(e)] >= cfg.edge_threshold)
            out.subgraph.edges.push_back(e);
    }
    return out;
}

TemporalAttribution temporal_attribution(const std::vector<std::vector<double>>& embeddings,
                                         const percept::PerceptionParams& params, int step) {
    if (embeddings.empty())
        throw std::invalid_argument("temporal_attribution: empty embedding sequence");
    Tape t;
    PerceptionVars pv = PerceptionVars::make(t, params);
    std::vector<Tape::Var> g_vars;
    g_vars.reserve(embeddings.size());
    percept::taped::LstmStateVars st =
        percept::taped::lstm_state_input(t, percept::LstmState::zeros(params.dims.d));
    for (const auto& g : embeddings) {
        Tape::Var gv = t.input(Value::vec(g));
        g_vars.push_back(gv);
        st = percept::taped::lstm_step(t, pv.stage, gv, st);
    }
    Tape::Var probs = percept::taped::stage_probs(t, pv, st.h);
    const Value& pval = t.value(probs);
    int k_hat = 0;
    for (int k = 1; k < params.dims.K; ++k)
        if (pval.data[static_cast<std::size_t>(k)] > pval.data[static_cast<std::size_t>(k_hat)]) k_hat = k;
    Tape::Var p_hat = t.sum(t.index_select(probs, {k_hat}));
    std::vector<Value> grads = t.gradient(p_hat, g_vars);

    TemporalAttribution out;
    out.step = step;
    out.raw.reserve(grads.size());
    for (const Value& g : grads) {
        double l1 = 0.0;
        for (double x : g.data) l1 += std::fabs(x);
        out.raw.push_back(l1);
    }
    out.normalized = l1_normalize_or_uniform(out.raw);
    return out;
}

PolicyAttribution policy_attribution(const policy::PolicyParams& params,
                                     const std::vector<double>& belief, int action, int step) {
    if (action < 0 || action >= policy::kNumActions)
        throw std::invalid_argument("policy_attribution: invalid action index");
    Tape t;
    auto pv = policy::taped::PolicyVars::make(t, params);
    Tape::Var b = t.input(Value::vec(belief));
    Tape::Var probs = policy::taped::actor_probs(t, pv, b);
    Tape::Var pa = t.sum(t.index_select(probs, {action}));
    std::vector<Value> grads = t.gradient(pa, {b});

    PolicyAttribution out;
    out.step = step;
    out.raw.reserve(belief.size());
    for (double x : grads[0].data) out.raw.push_back(std::fabs(x));
    out.phi = l1_normalize_or_uniform(out.raw);
    return out;
}

ProjectedEvidence project_explanation(const GraphMasks& masks,
                                      const std::vector<std::vector<double>>& node_embeddings,
                                      const std::vector<double>& p_t, const Projections& proj,
                                      int step) {
    if (masks.node.size() != node_embeddings.size())
        throw std::invalid_argument("project_explanation: mask/embedding count mismatch");
    int d_b = proj.w_g.shape[0];
    int d = proj.w_g.shape[1];
    int K = proj.w_p.shape[1];
    if (static_cast<int>(p_t.size()) != K)
        throw std::invalid_argument("project_explanation: stage distribution dimension mismatch");

    ProjectedEvidence out;
    out.step = step;
    out.g_star.assign(static_cast<std::size_t>(d), 0.0);
    for (std::size_t v = 0; v < node_embeddings.size(); ++v) {
        if (static_cast<int>(node_embeddings[v].size()) != d)
            throw std::invalid_argument("project_explanation: node embedding dimension mismatch");
        double w = masks.node[v];
        for (int j = 0; j < d; ++j) out.g_star[static_cast<std::size_t>(j)] += w * node_embeddings[v][static_cast<std::size_t>(j)];
    }

    std::vector<double> pre(static_cast<std::size_t>(d_b), 0.0);
    for (int r = 0; r < d_b; ++r) {
        double acc = 0.0;
        const double* wg = proj.w_g.data.data() + static_cast<std::size_t>(r) * d;
        for (int j = 0; j < d; ++j) acc += wg[j] * out.g_star[static_cast<std::size_t>(j)];
        const double* wp = proj.w_p.data.data() + static_cast<std::size_t>(r) * K;
        for (int j = 0; j < K; ++j) acc += wp[j] * p_t[static_cast<std::size_t>(j)];
        pre[static_cast<std::size_t>(r)] = std::max(acc, 0.0);  // rectified before normalization
    }
    out.phi_xai = l1_normalize_or_uniform(pre);
    return out;
}

ExplanationSignal assemble_explanation(const GraphMasks& masks, const ExplanationSubgraph& subgraph,
                                       const TemporalAttribution& temporal,
                                       const PolicyAttribution& policy_attr,
                                       const ProjectedEvidence& projected) {
    int t = masks.step;
    if (subgraph.step != t || temporal.step != t || policy_attr.step != t || projected.step != t)
        throw std::invalid_argument("assemble_explanation: component step indices disagree");
    ExplanationSignal s;
    s.step = t;
    s.has_structure = true;
    s.masks = masks;
    s.subgraph = subgraph;
    s.temporal = temporal;
    s.policy = policy_attr;
    s.projected = projected;
    return s;
}

ExplanationSignal empty_explanation(int step, const TemporalAttribution& temporal,
                                    const PolicyAttribution& policy_attr) {
    if (temporal.step != step || policy_attr.step != step)
        throw std::invalid_argument("empty_explanation: component step indices disagree");
    ExplanationSignal s;
    s.step = step;
    s.has_structure = false;
    s.temporal = temporal;
    s.policy = policy_attr;
    return s;
}

namespace {

void append_vec(std::ostringstream& out, const char* key, const std::vector<double>& v) {
    out << " " << key << "=[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ",";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v[i]);
        out << buf;
    }
    out << "]";
}

}  // namespace

std::string dump_record(const ExplanationSignal& s, const prov::ProvenanceGraph& graph,
                        int predicted_stage, double c_graph, double c_temp, double c_policy,
                        double conf_total) {
    std::ostringstream out;
    out << "explain step=" << s.step << " stage=" << predicted_stage;
    if (!s.has_structure) {
        out << " structure=none";
    } else {
        out << " nodes=[";
        for (std::size_t i = 0; i < s.subgraph.nodes.size(); ++i) {
            int v = s.subgraph.nodes[i];
            if (i) out << ",";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", s.masks.node[static_cast<std::size_t>(v)]);
            out << graph.nodes[static_cast<std::size_t>(v)].id << ":" << buf;
        }
        out << "] edges=[";
        for (std::size_t i = 0; i < s.subgraph.edges.size(); ++i) {
            const prov::GraphEdge& e = graph.edges[static_cast<std::size_t>(s.subgraph.edges[i])];
            if (i) out << ",";
            out << graph.nodes[static_cast<std::size_t>(e.src)].id << ">"
                << graph.nodes[static_cast<std::size_t>(e.dst)].id << ":" << prov::to_string(e.relation);
        }
        out << "]";
    }
    append_vec(out, "temporal", s.temporal.normalized);
    append_vec(out, "phi_policy", s.policy.phi);
    if (s.has_structure) append_vec(out, "phi_xai", s.projected.phi_xai);
    char buf[128];
    std::snprintf(buf, sizeof buf, " conf_graph=%.6f conf_temp=%.6f conf_policy=%.6f conf=%.6f",
                  c_graph, c_temp, c_policy, conf_total);
    out << buf;
    return out.str();
}

}  // namespace xdef::explain
