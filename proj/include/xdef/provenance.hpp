#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace xdef::prov {

enum class EntityKind { Process, File, Socket, User, Host };
enum class Relation { Spawn, Read, Write, Connect, Auth, Transfer };

constexpr int kNumKinds = 5;
constexpr int kNodeFeatureDim = 8;  // one-hot(kind) || log degrees || log bytes out

std::string_view to_string(EntityKind k);
std::string_view to_string(Relation r);
EntityKind parse_kind(std::string_view s);
Relation parse_relation(std::string_view s);

struct Event {
    int step = 0;
    std::string src;
    EntityKind src_kind = EntityKind::Process;
    std::string dst;
    EntityKind dst_kind = EntityKind::Process;
    Relation relation = Relation::Spawn;
    std::uint64_t bytes = 0;
    bool suspicious_hint = false;
};

// throws std::invalid_argument on negative step or invalid self-reference
void validate(const Event& e);

struct GraphNode {
    std::string id;
    EntityKind kind;
    std::array<double, kNodeFeatureDim> features{};
};

struct GraphEdge {
    int src = 0;  // node indices into ProvenanceGraph::nodes
    int dst = 0;
    Relation relation = Relation::Spawn;
    int count = 0;
    std::uint64_t total_bytes = 0;
};

// Windowed causal graph. Nodes are sorted lexicographically by id and
// edges by (src, dst, relation), so equal event sets serialize equally.
struct ProvenanceGraph {
    int window_index = 0;
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;

    bool empty() const { return nodes.empty(); }
    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_edges() const { return static_cast<int>(edges.size()); }
    int node_index(std::string_view id) const;  // -1 when absent
};

// Collapses events with step in [t-window+1, t] into a canonical graph.
ProvenanceGraph build_graph(const std::vector<Event>& events, int t, int window);

const std::array<double, kNodeFeatureDim>& node_features(const ProvenanceGraph& g, int node);

// Deletes the listed nodes (with incident edges) and edges; features of the
// surviving nodes are recomputed on the reduced graph.
ProvenanceGraph remove_subgraph(const ProvenanceGraph& g,
                                const std::vector<int>& node_subset,
                                const std::vector<int>& edge_subset);

std::string canonical_text(const ProvenanceGraph& g);

// Event stream file format: one event per line,
// step,src,kind_src,dst,kind_dst,relation,bytes,suspicious_hint
std::string format_event(const Event& e);
Event parse_event_line(std::string_view line);
std::vector<Event> read_events(std::istream& in);
void write_events(std::ostream& out, const std::vector<Event>& events);

}  // namespace xdef::prov
