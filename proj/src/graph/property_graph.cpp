#include "pidrag/graph/property_graph.hpp"

#include "pidrag/error.hpp"
#include "pidrag/text.hpp"

#include <algorithm>
#include <set>

namespace pidrag::graph {

std::string scalar_to_string(const Scalar& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* d = std::get_if<double>(&v)) return text::format_number(*d);
    return std::get<bool>(v) ? "true" : "false";
}

bool GraphNode::has_label(const std::string& label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

const std::string* GraphNode::tag() const {
    auto it = properties.find("tagName");
    if (it == properties.end()) return nullptr;
    return std::get_if<std::string>(&it->second);
}

bool is_known_edge_type(const std::string& type) {
    static const std::set<std::string> fixed = {
        "is_located_in", "send_to", "control", "send_signal_to", "is_logical_end_of", "measured_by",
    };
    if (fixed.count(type)) return true;
    return type.size() > 4 && type.compare(0, 4, "has_") == 0;
}

void PropertyGraph::add_node(GraphNode node) {
    if (node.labels.empty()) {
        throw BuildError("node '" + node.id + "' has no labels");
    }
    auto id = node.id;
    if (!nodes_.emplace(id, std::move(node)).second) {
        throw BuildError("duplicate node id '" + id + "'");
    }
}

void PropertyGraph::add_edge(GraphEdge edge) {
    if (!contains(edge.source)) {
        throw BuildError("edge source '" + edge.source + "' is not a node");
    }
    if (!contains(edge.target)) {
        throw BuildError("edge target '" + edge.target + "' is not a node");
    }
    edges_.push_back(std::move(edge));
}

bool PropertyGraph::add_edge_unique(GraphEdge edge) {
    for (const auto& e : edges_) {
        if (e.source == edge.source && e.target == edge.target && e.type == edge.type) {
            return false;
        }
    }
    add_edge(std::move(edge));
    return true;
}

void PropertyGraph::remove_node(const std::string& id) {
    nodes_.erase(id);
    std::erase_if(edges_, [&](const GraphEdge& e) { return e.source == id || e.target == id; });
}

const GraphNode* PropertyGraph::node(const std::string& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

GraphNode* PropertyGraph::node(const std::string& id) {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

std::vector<GraphEdge> PropertyGraph::sorted_edges() const {
    auto out = edges_;
    std::sort(out.begin(), out.end());
    return out;
}

bool PropertyGraph::operator==(const PropertyGraph& other) const {
    return nodes_ == other.nodes_ && sorted_edges() == other.sorted_edges();
}

} // namespace pidrag::graph
