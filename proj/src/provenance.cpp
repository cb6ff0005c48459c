#include "xdef/provenance.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace xdef::prov {

namespace {

constexpr std::string_view kKindNames[] = {"process", "file", "socket", "user", "host"};
constexpr std::string_view kRelationNames[] = {"spawn", "read", "write", "connect", "auth", "transfer"};

void recompute_features(ProvenanceGraph& g) {
    int n = g.num_nodes();
    std::vector<double> in_deg(n, 0.0), out_deg(n, 0.0), bytes_out(n, 0.0);
    for (const GraphEdge& e : g.edges) {
        out_deg[static_cast<std::size_t>(e.src)] += e.count;
        in_deg[static_cast<std::size_t>(e.dst)] += e.count;
        bytes_out[static_cast<std::size_t>(e.src)] += static_cast<double>(e.total_bytes);
    }
    for (int i = 0; i < n; ++i) {
        GraphNode& v = g.nodes[static_cast<std::size_t>(i)];
        v.features.fill(0.0);
        v.features[static_cast<std::size_t>(v.kind)] = 1.0;
        v.features[5] = std::log1p(in_deg[static_cast<std::size_t>(i)]);
        v.features[6] = std::log1p(out_deg[static_cast<std::size_t>(i)]);
        v.features[7] = std::log1p(bytes_out[static_cast<std::size_t>(i)]);
    }
}

void sort_edges(ProvenanceGraph& g) {
    std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
        if (a.src != b.src) return a.src < b.src;
        if (a.dst != b.dst) return a.dst < b.dst;
        return static_cast<int>(a.relation) < static_cast<int>(b.relation);
    });
}

}  // namespace

std::string_view to_string(EntityKind k) { return kKindNames[static_cast<int>(k)]; }
std::string_view to_string(Relation r) { return kRelationNames[static_cast<int>(r)]; }

EntityKind parse_kind(std::string_view s) {
    for (int i = 0; i < kNumKinds; ++i)
        if (s == kKindNames[i]) return static_cast<EntityKind>(i);
    throw std::invalid_argument("unknown entity kind: " + std::string(s));
}

Relation parse_relation(std::string_view s) {
    for (int i = 0; i < 6; ++i)
        if (s == kRelationNames[i]) return static_cast<Relation>(i);
    throw std::invalid_argument("unknown relation: " + std::string(s));
}

void validate(const Event& e) {
    if (e.step < 0) throw std::invalid_argument("event: negative step");
    if (e.src == e.dst && e.relation != Relation::Read && e.relation != Relation::Write)
        throw std::invalid_argument("event: self-reference only allowed for read/write (" + e.src + ")");
    if (e.src.empty() || e.dst.empty()) throw std::invalid_argument("event: empty entity id");
}

int ProvenanceGraph::node_index(std::string_view id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const GraphNode& n, std::string_view v) { return n.id < v; });
    if (it == nodes.end() || it->id != id) return -1;
    return static_cast<int>(it - nodes.begin());
}

ProvenanceGraph build_graph(const std::vector<Event>& events, int t, int window) {
    if (window < 1) throw std::invalid_argument("build_graph: window must be >= 1");
    int lo = t - window + 1;

    std::map<std::string, EntityKind> ents;
    auto declare = [&](const std::string& id, EntityKind k) {
        auto [it, inserted] = ents.emplace(id, k);
        if (!inserted && it->second != k)
            throw std::invalid_argument("build_graph: entity " + id + " redeclared with a different kind");
    };

    struct EdgeKey {
        std::string src, dst;
        Relation rel;
        bool operator<(const EdgeKey& o) const {
            if (src != o.src) return src < o.src;
            if (dst != o.dst) return dst < o.dst;
            return static_cast<int>(rel) < static_cast<int>(o.rel);
        }
    };
    std::map<EdgeKey, std::pair<int, std::uint64_t>> collapsed;

    for (const Event& e : events) {
        if (e.step < lo || e.step > t) continue;
        validate(e);
        declare(e.src, e.src_kind);
        declare(e.dst, e.dst_kind);
        auto& slot = collapsed[EdgeKey{e.src, e.dst, e.relation}];
        slot.first += 1;
        slot.second += e.bytes;
    }

    ProvenanceGraph g;
    g.window_index = t;
    g.nodes.reserve(ents.size());
    for (auto& [id, kind] : ents) g.nodes.push_back(GraphNode{id, kind, {}});
    for (auto& [key, agg] : collapsed) {
        GraphEdge e;
        e.src = g.node_index(key.src);
        e.dst = g.node_index(key.dst);
        e.relation = key.rel;
        e.count = agg.first;
        e.total_bytes = agg.second;
        g.edges.push_back(e);
    }
    sort_edges(g);
    recompute_features(g);
    return g;
}

const std::array<double, kNodeFeatureDim>& node_features(const ProvenanceGraph& g, int node) {
    if (node < 0 || node >= g.num_nodes())
        throw std::invalid_argument("node_features: node index out of range");
    return g.nodes[static_cast<std::size_t>(node)].features;
}

ProvenanceGraph remove_subgraph(const ProvenanceGraph& g,
                                const std::vector<int>& node_subset,
                                const std::vector<int>& edge_subset) {
    std::vector<char> drop_node(static_cast<std::size_t>(g.num_nodes()), 0);
    std::vector<char> drop_edge(static_cast<std::size_t>(g.num_edges()), 0);
    for (int v : node_subset) {
        if (v < 0 || v >= g.num_nodes()) throw std::invalid_argument("remove_subgraph: unknown node id");
        drop_node[static_cast<std::size_t>(v)] = 1;
    }
    for (int e : edge_subset) {
        if (e < 0 || e >= g.num_edges()) throw std::invalid_argument("remove_subgraph: unknown edge id");
        drop_edge[static_cast<std::size_t>(e)] = 1;
    }

    ProvenanceGraph out;
    out.window_index = g.window_index;
    std::vector<int> remap(static_cast<std::size_t>(g.num_nodes()), -1);
    for (int i = 0; i < g.num_nodes(); ++i) {
        if (drop_node[static_cast<std::size_t>(i)]) continue;
        remap[static_cast<std::size_t>(i)] = static_cast<int>(out.nodes.size());
        out.nodes.push_back(g.nodes[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < g.num_edges(); ++i) {
        if (drop_edge[static_cast<std::size_t>(i)]) continue;
        const GraphEdge& e = g.edges[static_cast<std::size_t>(i)];
        int s = remap[static_cast<std::size_t>(e.src)];
        int d = remap[static_cast<std::size_t>(e.dst)];
        if (s < 0 || d < 0) continue;  // incident to a removed node
        GraphEdge ne = e;
        ne.src = s;
        ne.dst = d;
        out.edges.push_back(ne);
    }
    recompute_features(out);
    return out;
}

std::string canonical_text(const ProvenanceGraph& g) {
    std::ostringstream out;
    out << "graph t=" << g.window_index << " nodes=" << g.num_nodes() << " edges=" << g.num_edges() << "\n";
    for (const GraphNode& n : g.nodes)
        out << "node " << n.id << " " << to_string(n.kind) << "\n";
    for (const GraphEdge& e : g.edges)
        out << "edge " << g.nodes[static_cast<std::size_t>(e.src)].id << " "
            << g.nodes[static_cast<std::size_t>(e.dst)].id << " " << to_string(e.relation) << " "
            << e.count << " " << e.total_bytes << "\n";
    return out.str();
}

std::string format_event(const Event& e) {
    std::ostringstream out;
    out << e.step << "," << e.src << "," << to_string(e.src_kind) << "," << e.dst << ","
        << to_string(e.dst_kind) << "," << to_string(e.relation) << "," << e.bytes << ","
        << (e.suspicious_hint ? 1 : 0);
    return out.str();
}

Event parse_event_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    if (fields.size() != 8)
        throw std::invalid_argument("event line: expected 8 fields, got " + std::to_string(fields.size()));
    Event e;
    e.step = std::stoi(fields[0]);
    e.src = fields[1];
    e.src_kind = parse_kind(fields[2]);
    e.dst = fields[3];
    e.dst_kind = parse_kind(fields[4]);
    e.relation = parse_relation(fields[5]);
    e.bytes = std::stoull(fields[6]);
    if (fields[7] != "0" && fields[7] != "1")
        throw std::invalid_argument("event line: suspicious_hint must be 0 or 1");
    e.suspicious_hint = fields[7] == "1";
    validate(e);
    return e;
}

std::vector<Event> read_events(std::istream& in) {
    std::vector<Event> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(parse_event_line(line));
    }
    return out;
}

void write_events(std::ostream& out, const std::vector<Event>& events) {
    for (const Event& e : events) out << format_event(e) << "\n";
}

}  // namespace xdef::prov
