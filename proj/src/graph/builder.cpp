#include "pidrag/graph/builder.hpp"

#include "pidrag/error.hpp"
#include "pidrag/text.hpp"

#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace pidrag::graph {

using dexpi::Diagnostic;
using dexpi::PidModel;
using dexpi::PlantItem;
using dexpi::Severity;

namespace {

Scalar to_scalar(const std::string& value) {
    if (auto d = text::parse_lossless_number(value)) return *d;
    return value;
}

const std::string kUnresolved = "unresolved reference: ";

class EdgeSink {
public:
    explicit EdgeSink(std::vector<GraphEdge>& out) : out_(out) {
        for (const auto& e : out_) seen_.insert({e.source, e.target, e.type});
    }

    void add(const std::string& source, const std::string& target, const std::string& type) {
        if (source == target) return;
        if (seen_.insert({source, target, type}).second) {
            out_.push_back({source, target, type, {}});
        }
    }

private:
    std::vector<GraphEdge>& out_;
    std::set<std::tuple<std::string, std::string, std::string>> seen_;
};

std::unordered_map<std::string, const PlantItem*> index_items(const PidModel& model) {
    std::unordered_map<std::string, const PlantItem*> index;
    for (const auto& item : model.items) index.emplace(item.id, &item);
    return index;
}

} // namespace

std::vector<std::string> derive_labels(const PlantItem& item, const dexpi::Taxonomy& taxonomy) {
    return taxonomy.labels(item.class_name, item.package);
}

Properties item_properties(const PlantItem& item, bool include_presentation) {
    Properties p;
    p["className"] = item.class_name;
    if (item.tag) p["tagName"] = *item.tag;
    for (const auto& [name, v] : item.attributes) {
        auto key = text::property_key(name);
        if (key.empty() || p.count(key)) key = text::lower_camel(name);
        if (key.empty() || p.count(key)) continue;
        p[key] = to_scalar(v.value);
        if (v.units) p.emplace(key + "Units", *v.units);
    }
    if (include_presentation) {
        for (const auto& [key, v] : item.presentation) {
            p.emplace(key, to_scalar(v.value));
        }
    }
    return p;
}

std::vector<GraphEdge> lexical_edges(const PidModel& model, std::vector<Diagnostic>* diagnostics) {
    std::vector<GraphEdge> out;
    EdgeSink sink(out);
    const auto index = index_items(model);
    auto item = [&](const std::string& id) -> const PlantItem* {
        auto it = index.find(id);
        return it == index.end() ? nullptr : it->second;
    };
    auto report = [&](Severity sev, const std::string& id, std::string message) {
        if (diagnostics) diagnostics->push_back({sev, id, std::move(message)});
    };

    std::unordered_set<std::string> flow_sources, flow_targets;
    for (const auto& c : model.piping_connections) {
        if (!item(c.from_item) || !item(c.to_item)) {
            const auto& missing = item(c.from_item) ? c.to_item : c.from_item;
            report(Severity::error, missing, kUnresolved + "piping connection endpoint '" + missing + "'");
            continue;
        }
        std::vector<std::string> hops{c.from_item};
        for (const auto* port : {&c.from_port, &c.to_port}) {
            if (!*port) continue;
            if (item(**port)) {
                hops.push_back(**port);
            } else {
                report(Severity::error, **port, kUnresolved + "port '" + **port + "'");
            }
        }
        hops.push_back(c.to_item);
        for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
            sink.add(hops[i], hops[i + 1], "send_to");
        }
        flow_sources.insert(c.from_item);
        flow_targets.insert(c.to_item);
    }

    // flow passes through the owning equipment of a nozzle
    for (const auto& it : model.items) {
        if (it.class_name != "Nozzle" || !it.parent || !item(*it.parent)) continue;
        if (flow_targets.count(it.id)) sink.add(it.id, *it.parent, "send_to");
        if (flow_sources.count(it.id)) sink.add(*it.parent, it.id, "send_to");
    }

    for (const auto& s : model.signal_connections) {
        const auto* source = item(s.source);
        if (!source || !item(s.target)) {
            const auto& missing = source ? s.target : s.source;
            report(Severity::error, missing, kUnresolved + "signal endpoint '" + missing + "'");
            continue;
        }
        switch (s.kind) {
            case dexpi::SignalKind::measurement: {
                // a sensor placed in a nozzle measures the equipment that owns it
                std::string measured = s.source;
                if (source->class_name == "Nozzle" && source->parent && item(*source->parent)) {
                    measured = *source->parent;
                }
                sink.add(measured, s.target, "measured_by");
                break;
            }
            case dexpi::SignalKind::signal: sink.add(s.source, s.target, "send_signal_to"); break;
            case dexpi::SignalKind::actuation: sink.add(s.source, s.target, "control"); break;
            case dexpi::SignalKind::logical_end: sink.add(s.source, s.target, "is_logical_end_of"); break;
            case dexpi::SignalKind::unknown:
                report(Severity::warning, s.source,
                       "signal connection of unknown kind from '" + s.source + "' to '" + s.target +
                           "' skipped");
                break;
        }
    }
    return out;
}

PropertyGraph build_graph(const PidModel& model, const BuildOptions& options,
                          std::vector<Diagnostic>* diagnostics) {
    const auto& taxonomy = options.taxonomy ? *options.taxonomy : dexpi::Taxonomy::builtin();
    std::vector<Diagnostic> diags;
    auto fail_or_report = [&](const std::string& id, const std::string& what) {
        if (options.strict) throw BuildError(kUnresolved + what + " '" + id + "'");
        diags.push_back({Severity::error, id, kUnresolved + what + " '" + id + "'"});
    };

    PropertyGraph g;
    for (const auto& item : model.items) {
        if (g.contains(item.id)) {
            throw BuildError("duplicate id '" + item.id + "'; validate the model before building");
        }
        g.add_node({item.id, derive_labels(item, taxonomy),
                    item_properties(item, options.include_presentation)});
    }

    const auto index = index_items(model);
    auto find = [&](const std::string& id) -> const PlantItem* {
        auto it = index.find(id);
        return it == index.end() ? nullptr : it->second;
    };
    std::vector<GraphEdge> edges;
    EdgeSink sink(edges);
    for (const auto& item : model.items) {
        for (const auto& child : item.children) {
            const auto* c = find(child);
            if (!c) {
                fail_or_report(child, "child");
                continue;
            }
            sink.add(item.id, child, "has_" + c->class_name);
        }
        for (const auto& a : item.associations) {
            const bool collection = a.type == "is a collection including";
            const bool location = a.type == "is located in" && item.package != dexpi::Package::instrumentation;
            if (!collection && !location) continue;
            const auto* target = find(a.target_id);
            if (!target) {
                fail_or_report(a.target_id, "association target");
                continue;
            }
            if (collection) sink.add(item.id, a.target_id, "has_" + target->class_name);
            if (location) sink.add(item.id, a.target_id, "is_located_in");
        }
    }

    std::vector<Diagnostic> lexical;
    for (auto& e : lexical_edges(model, &lexical)) {
        sink.add(e.source, e.target, e.type);
    }
    for (auto& d : lexical) {
        if (options.strict && d.message.rfind(kUnresolved, 0) == 0) throw BuildError(d.message);
        diags.push_back(std::move(d));
    }

    for (auto& e : edges) g.add_edge(std::move(e));
    if (diagnostics) diagnostics->insert(diagnostics->end(), diags.begin(), diags.end());
    return g;
}

} // namespace pidrag::graph
