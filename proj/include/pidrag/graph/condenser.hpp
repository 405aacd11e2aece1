#pragma once

#include "pidrag/graph/property_graph.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace pidrag::graph {

struct CondensationPolicy {
    std::set<std::string> retained_labels;
    std::set<std::string> prunable_labels;
    /// Case-insensitive globs matched against the last dotted segment of a key.
    std::vector<std::string> property_allowlist;
    /// Globs (same matching) that override the allowlist: reference-data URIs and the like.
    std::vector<std::string> property_denylist;

    static CondensationPolicy defaults();
    /// Missing fields fall back to the defaults. Throws ConfigError on malformed input.
    static CondensationPolicy from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    /// Stable hash of the canonical JSON form.
    std::string fingerprint() const;

    /// Throws ConfigError when retained and prunable labels overlap.
    void check() const;

    bool allows(const std::string& key) const;

    bool operator==(const CondensationPolicy&) const = default;
};

/// A node is kept by policy when it carries a retained label or a tagName, is an endpoint of a
/// measured_by / send_signal_to / control edge, or is equipment with no containing parent.
bool is_retained(const PropertyGraph& g, const std::string& id, const CondensationPolicy& policy);

struct StepCounts {
    std::size_t nodes = 0;
    std::size_t edges = 0;
};

struct CondensationReport {
    std::size_t nodes_before = 0;
    std::size_t nodes_after = 0;
    std::size_t edges_before = 0;
    std::size_t edges_after = 0;
    std::size_t tokens_before = 0;
    std::size_t tokens_after = 0;
    std::size_t chars_before = 0;
    std::size_t chars_after = 0;
    std::vector<std::pair<std::string, StepCounts>> steps; ///< after each step, in order
    std::map<std::string, std::vector<std::string>> removals; ///< rule -> node ids

    nlohmann::json to_json() const;
    static CondensationReport from_json(const nlohmann::json& doc);
};

/// Step 1: drops prunable nodes and has_-descendants of kept nodes, re-stitching flow around
/// them and folding allowlisted properties of removed non-prunable descendants into their kept
/// ancestor.
PropertyGraph prune_structural(const PropertyGraph& g, const CondensationPolicy& policy,
                               CondensationReport* report = nullptr);

/// Step 2: replaces runs of property-empty pass-through nodes by single send_to edges.
PropertyGraph collapse_chains(const PropertyGraph& g,
                              const CondensationPolicy& policy = CondensationPolicy::defaults(),
                              CondensationReport* report = nullptr);

/// Step 3: keeps only allowlisted node and edge properties.
PropertyGraph strip_properties(const PropertyGraph& g, const CondensationPolicy& policy);

struct CondensationResult {
    PropertyGraph graph;
    CondensationReport report;
};

CondensationResult condense(const PropertyGraph& g,
                            const CondensationPolicy& policy = CondensationPolicy::defaults());

} // namespace pidrag::graph
