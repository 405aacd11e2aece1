#include "pidrag/graph/condenser.hpp"

#include "pidrag/error.hpp"
#include "pidrag/graph/graph_io.hpp"
#include "pidrag/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

namespace pidrag::graph {

namespace {

const std::set<std::string> kControlEdges = {"measured_by", "send_signal_to", "control"};
const std::set<std::string> kLiftedEdges = {"measured_by", "send_signal_to", "control", "is_logical_end_of"};

bool is_has(const GraphEdge& e) {
    return e.type.size() > 4 && e.type.compare(0, 4, "has_") == 0;
}

std::string via_of(const GraphEdge& e) {
    auto it = e.properties.find("via");
    if (it == e.properties.end()) return {};
    return scalar_to_string(it->second);
}

std::string join_via(const std::string& a, const std::string& mid, const std::string& b) {
    std::string out = a;
    for (const auto* part : {&mid, &b}) {
        if (part->empty()) continue;
        if (!out.empty()) out += ',';
        out += *part;
    }
    return out;
}

std::string class_of(const GraphNode& n) {
    auto it = n.properties.find("className");
    if (it != n.properties.end()) return scalar_to_string(it->second);
    return n.labels.empty() ? std::string() : n.labels.back();
}

// "Nozzle-2" < "Nozzle-10"
std::vector<std::string> default_allowlist() {
    return {"tagName", "className", "nominalDiameter*", "*designPressure*", "*designTemperature*",
            "*power*", "setPressure*", "failAction*", "description*"};
}

/// Containment parent of every node (smallest id when several has_ edges point at it).
std::unordered_map<std::string, std::string> parent_map(const PropertyGraph& g) {
    std::unordered_map<std::string, std::string> parent;
    for (const auto& e : g.edges()) {
        if (!is_has(e)) continue;
        auto [it, inserted] = parent.emplace(e.target, e.source);
        if (!inserted && e.source < it->second) it->second = e.source;
    }
    return parent;
}

std::unordered_set<std::string> retained_set(const PropertyGraph& g, const CondensationPolicy& policy) {
    std::unordered_set<std::string> control_endpoints, contained;
    for (const auto& e : g.edges()) {
        if (kControlEdges.count(e.type)) {
            control_endpoints.insert(e.source);
            control_endpoints.insert(e.target);
        }
        if (is_has(e)) contained.insert(e.target);
    }
    std::unordered_set<std::string> out;
    for (const auto& [id, n] : g.nodes()) {
        bool keep = n.tag() != nullptr || control_endpoints.count(id) > 0;
        keep = keep || (!n.labels.empty() && n.labels.front() == "equipment" && !contained.count(id));
        for (const auto& l : n.labels) keep = keep || policy.retained_labels.count(l) > 0;
        if (keep) out.insert(id);
    }
    return out;
}

void check_nodes(const PropertyGraph& g, const CondensationPolicy& policy) {
    for (const auto& [id, n] : g.nodes()) {
        std::string kept, pruned;
        for (const auto& l : n.labels) {
            if (policy.retained_labels.count(l)) kept = l;
            if (policy.prunable_labels.count(l)) pruned = l;
        }
        if (!kept.empty() && !pruned.empty()) {
            throw ConfigError("node '" + id + "' carries retained label '" + kept + "' and prunable label '" +
                              pruned + "'");
        }
    }
}

std::string fold_prefix(const PropertyGraph& g, const std::string& id,
                        const std::unordered_map<std::string, std::string>& parent) {
    const auto& n = *g.node(id);
    auto sub = n.properties.find("subTagName");
    if (sub != n.properties.end()) {
        auto p = text::lower_camel(scalar_to_string(sub->second));
        if (!p.empty() && !std::isdigit(static_cast<unsigned char>(p.front()))) return p;
    }
    const auto cls = class_of(n);
    std::vector<std::string> siblings;
    auto pit = parent.find(id);
    for (const auto& [other, on] : g.nodes()) {
        auto oit = parent.find(other);
        const bool same_parent = (pit == parent.end() && oit == parent.end()) ||
                                 (pit != parent.end() && oit != parent.end() && oit->second == pit->second);
        if (same_parent && class_of(on) == cls) siblings.push_back(other);
    }
    std::sort(siblings.begin(), siblings.end(), text::natural_less);
    const auto pos = std::find(siblings.begin(), siblings.end(), id) - siblings.begin();
    return text::lower_camel(cls) + std::to_string(pos + 1);
}

void record(CondensationReport* report, const std::string& step, const PropertyGraph& g) {
    if (report) report->steps.push_back({step, {g.node_count(), g.edge_count()}});
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

CondensationPolicy CondensationPolicy::defaults() {
    CondensationPolicy p;
    p.retained_labels = {
        // equipment classes
        "vessel", "pump", "compressor", "heatExchanger", "furnace", "mixer", "separator", "dryer", "driver",
        // valve tiers
        "valve", "checkValve", "safetyValve",
        // instrumentation tiers
        "instrumentation", "instrumentationFunction", "informationFlow", "actuatingSystem",
        "actuatingSystemComponent",
    };
    p.prunable_labels = {"nozzle", "pipe", "flange", "reducer", "propertyBreak", "pipingNode",
                         "pipingNetworkSystem", "pipingNetworkSegment"};
    p.property_allowlist = default_allowlist();
    p.property_denylist = {"*URI"};
    return p;
}

CondensationPolicy CondensationPolicy::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("policy must be a JSON object");
    auto p = defaults();
    try {
        if (doc.contains("retained_labels")) p.retained_labels = doc["retained_labels"].get<std::set<std::string>>();
        if (doc.contains("prunable_labels")) p.prunable_labels = doc["prunable_labels"].get<std::set<std::string>>();
        if (doc.contains("property_allowlist")) {
            p.property_allowlist = doc["property_allowlist"].get<std::vector<std::string>>();
        }
        if (doc.contains("property_denylist")) {
            p.property_denylist = doc["property_denylist"].get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid policy: ") + e.what());
    }
    p.check();
    return p;
}

nlohmann::json CondensationPolicy::to_json() const {
    return {{"retained_labels", retained_labels},
            {"prunable_labels", prunable_labels},
            {"property_allowlist", property_allowlist},
            {"property_denylist", property_denylist}};
}

std::string CondensationPolicy::fingerprint() const {
    return fnv1a_hex(to_json().dump());
}

void CondensationPolicy::check() const {
    for (const auto& l : retained_labels) {
        if (prunable_labels.count(l)) {
            throw ConfigError("label '" + l + "' is both retained and prunable");
        }
    }
}

bool CondensationPolicy::allows(const std::string& key) const {
    const auto dot = key.rfind('.');
    const std::string_view base = dot == std::string::npos ? std::string_view(key)
                                                           : std::string_view(key).substr(dot + 1);
    for (const auto& pattern : property_denylist) {
        if (text::glob_match(pattern, base)) return false;
    }
    for (const auto& pattern : property_allowlist) {
        if (text::glob_match(pattern, base)) return true;
    }
    return false;
}

bool is_retained(const PropertyGraph& g, const std::string& id, const CondensationPolicy& policy) {
    return retained_set(g, policy).count(id) > 0;
}

PropertyGraph prune_structural(const PropertyGraph& g, const CondensationPolicy& policy,
                               CondensationReport* report) {
    policy.check();
    check_nodes(g, policy);
    const auto retained = retained_set(g, policy);
    const auto parent = parent_map(g);

    auto kept_ancestor = [&](const std::string& id) -> std::optional<std::string> {
        std::unordered_set<std::string> seen{id};
        auto it = parent.find(id);
        while (it != parent.end() && seen.insert(it->second).second) {
            if (retained.count(it->second)) return it->second;
            it = parent.find(it->second);
        }
        return std::nullopt;
    };

    std::set<std::string> removed;
    std::map<std::string, std::string> rule;
    for (const auto& [id, n] : g.nodes()) {
        if (retained.count(id)) continue;
        const bool prunable = std::any_of(n.labels.begin(), n.labels.end(),
                                          [&](const auto& l) { return policy.prunable_labels.count(l) > 0; });
        if (prunable) {
            removed.insert(id);
            rule[id] = "prune_structural";
        } else if (kept_ancestor(id)) {
            removed.insert(id);
            rule[id] = "fold_into_parent";
        }
    }

    PropertyGraph out = g;

    // fold allowlisted properties of removed non-structural descendants into the kept ancestor
    std::unordered_map<std::string, std::string> prefix_cache;
    auto prefix = [&](const std::string& id) -> const std::string& {
        auto it = prefix_cache.find(id);
        if (it == prefix_cache.end()) it = prefix_cache.emplace(id, fold_prefix(g, id, parent)).first;
        return it->second;
    };
    for (const auto& id : removed) {
        if (rule[id] != "fold_into_parent") continue;
        auto anc = kept_ancestor(id);
        if (!anc) continue;
        std::string path = prefix(id);
        for (auto it = parent.find(id); it != parent.end() && it->second != *anc; it = parent.find(it->second)) {
            path = prefix(it->second) + "." + path;
        }
        auto& target = out.node(*anc)->properties;
        for (const auto& [k, v] : g.node(id)->properties) {
            if (k == "className" || k == "tagName" || !policy.allows(k)) continue;
            target.emplace(path + "." + k, v);
        }
    }

    for (const auto& x : removed) {
        auto& edges = out.edges();
        std::vector<GraphEdge> ins, outs, lifted;
        for (const auto& e : edges) {
            if (e.source != x && e.target != x) continue;
            if (e.type == "send_to") {
                if (e.target == x && e.source != x) ins.push_back(e);
                if (e.source == x && e.target != x) outs.push_back(e);
            } else if (kLiftedEdges.count(e.type)) {
                lifted.push_back(e);
            }
        }
        const auto cls = class_of(*out.node(x));
        const auto anc = kept_ancestor(x);
        out.remove_node(x);
        for (auto e : lifted) {
            if (!anc) continue;
            if (e.source == x) e.source = *anc;
            if (e.target == x) e.target = *anc;
            if (e.source != e.target && out.contains(e.source) && out.contains(e.target)) {
                out.add_edge_unique(std::move(e));
            }
        }
        for (const auto& a : ins) {
            for (const auto& b : outs) {
                if (a.source == b.target) continue;
                GraphEdge e{a.source, b.target, "send_to", {}};
                const auto via = join_via(via_of(a), cls, via_of(b));
                if (!via.empty()) e.properties["via"] = via;
                out.add_edge_unique(std::move(e));
            }
        }
    }

    if (report) {
        for (const auto& [id, r] : rule) report->removals[r].push_back(id);
    }
    record(report, "prune_structural", out);
    return out;
}

PropertyGraph collapse_chains(const PropertyGraph& g, const CondensationPolicy& policy,
                              CondensationReport* report) {
    const auto retained = retained_set(g, policy);
    PropertyGraph out = g;
    std::vector<std::string> collapsed;
    for (const auto& [id, n] : g.nodes()) {
        if (retained.count(id)) continue;
        const bool informative = std::any_of(n.properties.begin(), n.properties.end(), [&](const auto& kv) {
            return kv.first != "className" && policy.allows(kv.first);
        });
        if (informative) continue;

        const GraphEdge* in = nullptr;
        const GraphEdge* outgoing = nullptr;
        int ins = 0, outs = 0, others = 0;
        for (const auto& e : out.edges()) {
            if (e.source != id && e.target != id) continue;
            if (e.type != "send_to" || e.source == e.target) {
                ++others;
            } else if (e.target == id) {
                ++ins;
                in = &e;
            } else {
                ++outs;
                outgoing = &e;
            }
        }
        if (ins != 1 || outs != 1 || others != 0 || in->source == outgoing->target) continue;

        GraphEdge e{in->source, outgoing->target, "send_to", {}};
        e.properties["via"] = join_via(via_of(*in), class_of(n), via_of(*outgoing));
        out.remove_node(id);
        out.add_edge_unique(std::move(e));
        collapsed.push_back(id);
    }
    if (report) {
        auto& list = report->removals["collapse_chains"];
        list.insert(list.end(), collapsed.begin(), collapsed.end());
    }
    record(report, "collapse_chains", out);
    return out;
}

PropertyGraph strip_properties(const PropertyGraph& g, const CondensationPolicy& policy) {
    PropertyGraph out = g;
    for (const auto& [id, n] : g.nodes()) {
        auto& props = out.node(id)->properties;
        std::erase_if(props, [&](const auto& kv) { return !policy.allows(kv.first); });
    }
    for (auto& e : out.edges()) {
        std::erase_if(e.properties, [&](const auto& kv) { return kv.first != "via" && !policy.allows(kv.first); });
    }
    return out;
}

CondensationResult condense(const PropertyGraph& g, const CondensationPolicy& policy) {
    CondensationReport report;
    report.removals["prune_structural"];
    report.removals["fold_into_parent"];
    report.removals["collapse_chains"];

    auto step1 = prune_structural(g, policy, &report);
    auto step2 = collapse_chains(step1, policy, &report);
    auto step3 = strip_properties(step2, policy);
    record(&report, "strip_properties", step3);

    const auto before = estimate_tokens(export_graphml(g));
    const auto after = estimate_tokens(export_graphml(step3));
    report.nodes_before = g.node_count();
    report.edges_before = g.edge_count();
    report.nodes_after = step3.node_count();
    report.edges_after = step3.edge_count();
    report.chars_before = before.char_count;
    report.chars_after = after.char_count;
    report.tokens_before = before.token_count;
    report.tokens_after = after.token_count;
    return {std::move(step3), std::move(report)};
}

nlohmann::json CondensationReport::to_json() const {
    auto steps_json = nlohmann::json::array();
    for (const auto& [name, c] : steps) {
        steps_json.push_back({{"step", name}, {"nodes", c.nodes}, {"edges", c.edges}});
    }
    return {{"nodes_before", nodes_before}, {"nodes_after", nodes_after},
            {"edges_before", edges_before}, {"edges_after", edges_after},
            {"tokens_before", tokens_before}, {"tokens_after", tokens_after},
            {"chars_before", chars_before}, {"chars_after", chars_after},
            {"steps", steps_json}, {"removals", removals}};
}

CondensationReport CondensationReport::from_json(const nlohmann::json& doc) {
    CondensationReport r;
    try {
        r.nodes_before = doc.at("nodes_before").get<std::size_t>();
        r.nodes_after = doc.at("nodes_after").get<std::size_t>();
        r.edges_before = doc.at("edges_before").get<std::size_t>();
        r.edges_after = doc.at("edges_after").get<std::size_t>();
        r.tokens_before = doc.at("tokens_before").get<std::size_t>();
        r.tokens_after = doc.at("tokens_after").get<std::size_t>();
        r.chars_before = doc.value("chars_before", std::size_t{0});
        r.chars_after = doc.value("chars_after", std::size_t{0});
        for (const auto& s : doc.value("steps", nlohmann::json::array())) {
            r.steps.push_back({s.at("step").get<std::string>(),
                               {s.at("nodes").get<std::size_t>(), s.at("edges").get<std::size_t>()}});
        }
        r.removals = doc.value("removals", std::map<std::string, std::vector<std::string>>{});
    } catch (const nlohmann::json::exception& e) {
        throw ImportError(std::string("invalid condensation report: ") + e.what());
    }
    return r;
}

} // namespace pidrag::graph
