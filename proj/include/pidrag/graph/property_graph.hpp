#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pidrag::graph {

using Scalar = std::variant<std::string, double, bool>;
using Properties = std::map<std::string, Scalar>;

std::string scalar_to_string(const Scalar& v);

struct GraphNode {
    std::string id;
    std::vector<std::string> labels;
    Properties properties;

    bool has_label(const std::string& label) const;
    /// tagName property if present and a string.
    const std::string* tag() const;

    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    std::string source;
    std::string target;
    std::string type;
    Properties properties;

    bool operator==(const GraphEdge&) const = default;
    auto operator<=>(const GraphEdge&) const = default;
};

/// Closed relationship vocabulary; has_<ClassName> is the only open-ended family.
bool is_known_edge_type(const std::string& type);

class PropertyGraph {
public:
    /// Throws BuildError on duplicate id or empty label list.
    void add_node(GraphNode node);
    /// Throws BuildError when an endpoint is missing.
    void add_edge(GraphEdge edge);
    /// Adds unless an edge with the same (source, target, type) exists. Returns true if added.
    bool add_edge_unique(GraphEdge edge);
    /// Removes the node and every incident edge.
    void remove_node(const std::string& id);

    bool contains(const std::string& id) const { return nodes_.count(id) > 0; }
    const GraphNode* node(const std::string& id) const;
    GraphNode* node(const std::string& id);

    const std::map<std::string, GraphNode>& nodes() const { return nodes_; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    std::vector<GraphEdge>& edges() { return edges_; }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    /// Edges in canonical (source, target, type, properties) order.
    std::vector<GraphEdge> sorted_edges() const;

    /// Equal nodes and equal edge multisets; edge order is ignored.
    bool operator==(const PropertyGraph& other) const;

private:
    std::map<std::string, GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
};

} // namespace pidrag::graph
