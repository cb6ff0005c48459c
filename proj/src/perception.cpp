#include "xdef/perception.hpp"

#include <cmath>
#include <stdexcept>

namespace xdef::percept {

namespace {

Value glorot(int rows, int cols, Rng& rng) {
    double scale = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Value v = Value::zeros({rows, cols});
    for (double& x : v.data) x = rng.uniform(-scale, scale);
    return v;
}

LstmParams init_lstm(int input, int hidden, Rng& rng) {
    LstmParams p;
    p.input_dim = input;
    p.hidden_dim = hidden;
    p.w = glorot(4 * hidden, input + hidden, rng);
    p.b = Value::zeros({4 * hidden});
    return p;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// z = W [x;h] + b
std::vector<double> lstm_preact(const LstmParams& p, const std::vector<double>& x,
                                const std::vector<double>& h) {
    int H = p.hidden_dim, in = p.input_dim;
    if (static_cast<int>(x.size()) != in)
        throw std::invalid_argument("lstm: input dimension mismatch");
    std::vector<double> z(p.b.data.begin(), p.b.data.end());
    int cols = in + H;
    for (int r = 0; r < 4 * H; ++r) {
        const double* row = p.w.data.data() + static_cast<std::size_t>(r) * cols;
        double acc = z[static_cast<std::size_t>(r)];
        for (int j = 0; j < in; ++j) acc += row[j] * x[static_cast<std::size_t>(j)];
        for (int j = 0; j < H; ++j) acc += row[in + j] * h[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(r)] = acc;
    }
    return z;
}

LstmState lstm_step_plain(const LstmParams& p, const std::vector<double>& x, const LstmState& prev) {
    int H = p.hidden_dim;
    std::vector<double> z = lstm_preact(p, x, prev.h);
    LstmState out = LstmState::zeros(H);
    for (int j = 0; j < H; ++j) {
        double i = sigmoid(z[static_cast<std::size_t>(j)]);
        double f = sigmoid(z[static_cast<std::size_t>(H + j)]);
        double g = std::tanh(z[static_cast<std::size_t>(2 * H + j)]);
        double o = sigmoid(z[static_cast<std::size_t>(3 * H + j)]);
        double c = f * prev.c[static_cast<std::size_t>(j)] + i * g;
        out.c[static_cast<std::size_t>(j)] = c;
        out.h[static_cast<std::size_t>(j)] = o * std::tanh(c);
    }
    return out;
}

std::vector<double> softmax_plain(const std::vector<double>& z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    std::vector<double> out(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

// in-edges grouped per destination node
std::vector<std::vector<int>> in_edges(const prov::ProvenanceGraph& g) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.num_nodes()));
    for (int e = 0; e < g.num_edges(); ++e)
        adj[static_cast<std::size_t>(g.edges[static_cast<std::size_t>(e)].dst)].push_back(e);
    return adj;
}

}  // namespace

PerceptionParams PerceptionParams::init(const Dims& dims, Rng& rng) {
    PerceptionParams p;
    p.dims = dims;
    int in = dims.F;
    for (int l = 0; l < dims.L; ++l) {
        GnnLayer layer;
        layer.w_self = glorot(dims.d, in, rng);
        layer.w_nbr = glorot(dims.d, in, rng);
        layer.b = Value::zeros({dims.d});
        p.gnn.push_back(std::move(layer));
        in = dims.d;
    }
    p.stage_cell = init_lstm(dims.d, dims.d, rng);
    p.stage_head_w = glorot(dims.K, dims.d, rng);
    p.stage_head_b = Value::zeros({dims.K});
    p.belief_cell = init_lstm(dims.obs_dim(), dims.d_b, rng);
    return p;
}

GraphEmbedding encode_graph(const prov::ProvenanceGraph& graph, const PerceptionParams& params) {
    const Dims& dims = params.dims;
    if (static_cast<int>(params.gnn.size()) != dims.L)
        throw std::invalid_argument("encode_graph: layer count mismatch");
    GraphEmbedding out;
    out.g.assign(static_cast<std::size_t>(dims.d), 0.0);
    if (graph.empty()) return out;
    if (params.gnn[0].w_self.shape[1] != prov::kNodeFeatureDim)
        throw std::invalid_argument("encode_graph: feature dimension mismatch");

    int n = graph.num_nodes();
    std::vector<std::vector<int>> adj = in_edges(graph);

    std::vector<std::vector<double>> h(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        const auto& f = prov::node_features(graph, v);
        h[static_cast<std::size_t>(v)].assign(f.begin(), f.end());
    }

    for (const GnnLayer& layer : params.gnn) {
        int in_dim = layer.w_self.shape[1];
        int out_dim = layer.w_self.shape[0];
        std::vector<std::vector<double>> next(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            std::vector<double> nbr(static_cast<std::size_t>(in_dim), 0.0);
            const auto& edges = adj[static_cast<std::size_t>(v)];
            if (!edges.empty()) {
                for (int e : edges) {
                    int u = graph.edges[static_cast<std::size_t>(e)].src;
                    const auto& hu = h[static_cast<std::size_t>(u)];
                    for (int j = 0; j < in_dim; ++j) nbr[static_cast<std::size_t>(j)] += hu[static_cast<std::size_t>(j)];
                }
                double inv = 1.0 / static_cast<double>(edges.size());
                for (double& x : nbr) x *= inv;
            }
            std::vector<double> hv(static_cast<std::size_t>(out_dim));
            const auto& hself = h[static_cast<std::size_t>(v)];
            for (int r = 0; r < out_dim; ++r) {
                double acc = layer.b.data[static_cast<std::size_t>(r)];
                const double* ws = layer.w_self.data.data() + static_cast<std::size_t>(r) * in_dim;
                const double* wn = layer.w_nbr.data.data() + static_cast<std::size_t>(r) * in_dim;
                for (int j = 0; j < in_dim; ++j)
                    acc += ws[j] * hself[static_cast<std::size_t>(j)] + wn[j] * nbr[static_cast<std::size_t>(j)];
                hv[static_cast<std::size_t>(r)] = std::tanh(acc);
            }
            next[static_cast<std::size_t>(v)] = std::move(hv);
        }
        h = std::move(next);
    }

    for (int v = 0; v < n; ++v)
        for (int j = 0; j < dims.d; ++j)
            out.g[static_cast<std::size_t>(j)] += h[static_cast<std::size_t>(v)][static_cast<std::size_t>(j)];
    double inv = 1.0 / static_cast<double>(n);
    for (double& x : out.g) x *= inv;
    out.h = std::move(h);
    return out;
}

std::vector<double> estimate_stage_step(LstmState& state, const std::vector<double>& g,
                                        const PerceptionParams& params) {
    state = lstm_step_plain(params.stage_cell, g, state);
    int K = params.dims.K, d = params.dims.d;
    std::vector<double> logits(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        double acc = params.stage_head_b.data[static_cast<std::size_t>(k)];
        const double* row = params.stage_head_w.data.data() + static_cast<std::size_t>(k) * d;
        for (int j = 0; j < d; ++j) acc += row[j] * state.h[static_cast<std::size_t>(j)];
        logits[static_cast<std::size_t>(k)] = acc;
    }
    return softmax_plain(logits);
}

std::vector<double> estimate_stage(const std::vector<std::vector<double>>& embeddings,
                                   const PerceptionParams& params) {
    if (embeddings.empty()) throw std::invalid_argument("estimate_stage: empty sequence");
    LstmState state = LstmState::zeros(params.dims.d);
    std::vector<double> p;
    for (const auto& g : embeddings) p = estimate_stage_step(state, g, params);
    return p;
}

BeliefState update_belief(const BeliefState& prev, const std::vector<double>& obs,
                          const PerceptionParams& params) {
    if (static_cast<int>(obs.size()) != params.dims.obs_dim())
        throw std::invalid_argument("update_belief: observation dimension mismatch");
    return lstm_step_plain(params.belief_cell, obs, prev);
}

std::vector<double> make_observation(const std::vector<double>& g, const std::vector<double>& p,
                                     int prev_action, int n_actions) {
    std::vector<double> obs;
    obs.reserve(g.size() + p.size() + static_cast<std::size_t>(n_actions));
    obs.insert(obs.end(), g.begin(), g.end());
    obs.insert(obs.end(), p.begin(), p.end());
    for (int a = 0; a < n_actions; ++a) obs.push_back(a == prev_action ? 1.0 : 0.0);
    return obs;
}

namespace taped {

PerceptionVars PerceptionVars::make(Tape& t, const PerceptionParams& p) {
    PerceptionVars pv;
    pv.dims = p.dims;
    for (const GnnLayer& layer : p.gnn)
        pv.gnn.push_back(GnnLayerVars{t.input(layer.w_self), t.input(layer.w_nbr), t.input(layer.b)});
    pv.stage = LstmVars{t.input(p.stage_cell.w), t.input(p.stage_cell.b), p.stage_cell.input_dim,
                        p.stage_cell.hidden_dim};
    pv.stage_head_w = t.input(p.stage_head_w);
    pv.stage_head_b = t.input(p.stage_head_b);
    pv.belief = LstmVars{t.input(p.belief_cell.w), t.input(p.belief_cell.b), p.belief_cell.input_dim,
                         p.belief_cell.hidden_dim};
    return pv;
}

std::vector<Tape::Var> PerceptionVars::trainable() const {
    std::vector<Tape::Var> out;
    for (const auto& l : gnn) {
        out.push_back(l.w_self);
        out.push_back(l.w_nbr);
        out.push_back(l.b);
    }
    out.push_back(stage.w);
    out.push_back(stage.b);
    out.push_back(stage_head_w);
    out.push_back(stage_head_b);
    out.push_back(belief.w);
    out.push_back(belief.b);
    return out;
}

LstmStateVars lstm_state_input(Tape& t, const LstmState& s) {
    return LstmStateVars{t.input(Value::vec(s.h)), t.input(Value::vec(s.c))};
}

LstmStateVars lstm_step(Tape& t, const LstmVars& cell, Tape::Var x, const LstmStateVars& prev) {
    int H = cell.hidden_dim;
    Tape::Var xh = t.concat({x, prev.h});
    Tape::Var z = t.add(t.matmul(cell.w, xh), cell.b);
    std::vector<int> idx_i(static_cast<std::size_t>(H)), idx_f(static_cast<std::size_t>(H)),
        idx_g(static_cast<std::size_t>(H)), idx_o(static_cast<std::size_t>(H));
    for (int j = 0; j < H; ++j) {
        idx_i[static_cast<std::size_t>(j)] = j;
        idx_f[static_cast<std::size_t>(j)] = H + j;
        idx_g[static_cast<std::size_t>(j)] = 2 * H + j;
        idx_o[static_cast<std::size_t>(j)] = 3 * H + j;
    }
    Tape::Var gi = t.sigmoid(t.index_select(z, idx_i));
    Tape::Var gf = t.sigmoid(t.index_select(z, idx_f));
    Tape::Var gg = t.tanh_(t.index_select(z, idx_g));
    Tape::Var go = t.sigmoid(t.index_select(z, idx_o));
    Tape::Var c = t.add(t.mul(gf, prev.c), t.mul(gi, gg));
    Tape::Var h = t.mul(go, t.tanh_(c));
    return LstmStateVars{h, c};
}

EncodeOut encode_graph(Tape& t, const prov::ProvenanceGraph& graph, const PerceptionVars& pv,
                       const std::optional<Masks>& masks) {
    const Dims& dims = pv.dims;
    EncodeOut out;
    if (graph.empty()) {
        out.g = t.input(Value::zeros({dims.d}));
        return out;
    }
    int n = graph.num_nodes();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int e = 0; e < graph.num_edges(); ++e)
        adj[static_cast<std::size_t>(graph.edges[static_cast<std::size_t>(e)].dst)].push_back(e);

    std::vector<Tape::Var> h(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        const auto& f = prov::node_features(graph, v);
        Tape::Var fv = t.input(Value::vec({f.begin(), f.end()}));
        if (masks) {
            Tape::Var mv = t.index_select(masks->node_mask, {v});
            Tape::Var mvs = t.sum(mv);  // 1-vector -> scalar
            fv = t.scale(fv, mvs);
        }
        h[static_cast<std::size_t>(v)] = fv;
    }

    for (const auto& layer : pv.gnn) {
        std::vector<Tape::Var> next(static_cast<std::size_t>(n));
        for (int v = 0; v < n; ++v) {
            Tape::Var pre = t.add(t.matmul(layer.w_self, h[static_cast<std::size_t>(v)]), layer.b);
            const auto& edges = adj[static_cast<std::size_t>(v)];
            if (!edges.empty()) {
                Tape::Var acc = -1;
                for (int e : edges) {
                    int u = graph.edges[static_cast<std::size_t>(e)].src;
                    Tape::Var msg = h[static_cast<std::size_t>(u)];
                    if (masks) {
                        Tape::Var me = t.sum(t.index_select(masks->edge_mask, {e}));
                        msg = t.scale(msg, me);
                    }
                    acc = acc < 0 ? msg : t.add(acc, msg);
                }
                Tape::Var nbr = t.cmul(acc, 1.0 / static_cast<double>(edges.size()));
                pre = t.add(pre, t.matmul(layer.w_nbr, nbr));
            }
            next[static_cast<std::size_t>(v)] = t.tanh_(pre);
        }
        h = std::move(next);
    }

    Tape::Var pooled = h[0];
    for (int v = 1; v < n; ++v) pooled = t.add(pooled, h[static_cast<std::size_t>(v)]);
    out.g = t.cmul(pooled, 1.0 / static_cast<double>(n));
    out.h = std::move(h);
    return out;
}

Tape::Var stage_probs(Tape& t, const PerceptionVars& pv, Tape::Var stage_hidden) {
    return t.softmax(t.add(t.matmul(pv.stage_head_w, stage_hidden), pv.stage_head_b));
}

}  // namespace taped

}  // namespace xdef::percept
