#include "pidrag/dexpi/parser.hpp"

#include "pidrag/dexpi/taxonomy.hpp"
#include "pidrag/error.hpp"
#include "pidrag/text.hpp"
#include "pidrag/xml_dom.hpp"

#include <charconv>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace pidrag::dexpi {

namespace {

// Elements that never contribute plant items (drawing furniture, metadata, annotations).
const std::set<std::string, std::less<>> kIgnoredElements = {
    "Drawing", "ShapeCatalogue", "Label", "MetaData", "PlantInformation",
    "GenericAttributes", "ConnectionPoints",
};

std::optional<Package> package_for_element(std::string_view name) {
    static const std::unordered_map<std::string_view, Package> table = {
        {"Equipment", Package::equipment},
        {"Nozzle", Package::equipment},
        {"PipingNetworkSystem", Package::piping},
        {"PipingNetworkSegment", Package::piping},
        {"PipingComponent", Package::piping},
        {"PipeOffPageConnector", Package::piping},
        {"PropertyBreak", Package::piping},
        {"ProcessInstrumentationFunction", Package::instrumentation},
        {"ProcessSignalGeneratingFunction", Package::instrumentation},
        {"ActuatingFunction", Package::instrumentation},
        {"ActuatingElectricalFunction", Package::instrumentation},
        {"ActuatingSystem", Package::instrumentation},
        {"ActuatingSystemComponent", Package::instrumentation},
        {"InformationFlow", Package::instrumentation},
        {"InstrumentationLoopFunction", Package::instrumentation},
        {"InstrumentComponent", Package::instrumentation},
        {"SignalOffPageConnector", Package::instrumentation},
    };
    auto it = table.find(name);
    if (it == table.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<int> parse_int(const std::string* s) {
    if (s == nullptr) {
        return std::nullopt;
    }
    int value = 0;
    auto res = std::from_chars(s->data(), s->data() + s->size(), value);
    if (res.ec != std::errc() || res.ptr != s->data() + s->size()) {
        return std::nullopt;
    }
    return value;
}

void read_generic_attributes(const xml::Element& e, AttributeMap& out) {
    for (const auto* block : e.children_named("GenericAttributes")) {
        for (const auto* attr : block->children_named("GenericAttribute")) {
            const auto* name = attr->attribute("Name");
            const auto* value = attr->attribute("Value");
            if (name == nullptr || value == nullptr || name->empty()) {
                continue;
            }
            AttributeValue v{*value, std::nullopt};
            if (const auto* units = attr->attribute("Units")) {
                v.units = *units;
            }
            out.set(*name, std::move(v));
        }
    }
}

void set_plain(AttributeMap& out, const std::string& key, const std::string& value) {
    out.set(key, AttributeValue{value, std::nullopt});
}

void read_xyz(const xml::Element& e, const std::string& prefix, AttributeMap& out) {
    for (const char* axis : {"X", "Y", "Z"}) {
        if (const auto* v = e.attribute(axis)) {
            set_plain(out, prefix + axis, *v);
        }
    }
}

void read_style(const xml::Element& presentation, const std::string& prefix, AttributeMap& out) {
    for (const char* key : {"Layer", "LineType", "LineWeight"}) {
        if (const auto* v = presentation.attribute(key)) {
            set_plain(out, prefix + key, *v);
        }
    }
    const auto* r = presentation.attribute("R");
    const auto* g = presentation.attribute("G");
    const auto* b = presentation.attribute("B");
    if (r && g && b) {
        set_plain(out, prefix + "Color", *r + "," + *g + "," + *b);
    }
}

std::string read_coordinates(const xml::Element& line) {
    std::string out;
    for (const auto* c : line.children_named("Coordinate")) {
        if (!out.empty()) {
            out += ' ';
        }
        out += c->attribute_or("X") + "," + c->attribute_or("Y");
        if (const auto* z = c->attribute("Z")) {
            out += "," + *z;
        }
    }
    return out;
}

// Drawing-layer data: symbol names, URIs, placement, styling, polyline geometry.
void read_presentation(const xml::Element& e, AttributeMap& out) {
    if (const auto* v = e.attribute("ComponentName")) {
        set_plain(out, "componentName", *v);
    }
    if (const auto* v = e.attribute("ComponentClassURI")) {
        set_plain(out, "componentClassURI", *v);
    }
    for (const auto& child : e.children) {
        const auto& name = child->name;
        if (name == "Position") {
            if (const auto* loc = child->child("Location")) read_xyz(*loc, "position", out);
            if (const auto* axis = child->child("Axis")) read_xyz(*axis, "axis", out);
            if (const auto* ref = child->child("Reference")) read_xyz(*ref, "reference", out);
        } else if (name == "Scale") {
            read_xyz(*child, "scale", out);
        } else if (name == "Extent") {
            if (const auto* mn = child->child("Min")) read_xyz(*mn, "extentMin", out);
            if (const auto* mx = child->child("Max")) read_xyz(*mx, "extentMax", out);
        } else if (name == "Presentation") {
            read_style(*child, "presentation", out);
        } else if (name == "CenterLine" || name == "PolyLine") {
            const std::string key = text::lower_camel(name);
            set_plain(out, key, read_coordinates(*child));
            if (const auto* style = child->child("Presentation")) {
                read_style(*style, key, out);
            }
        }
    }
    for (const auto* block : e.children_named("GenericAttributes")) {
        for (const auto* attr : block->children_named("GenericAttribute")) {
            const auto* name = attr->attribute("Name");
            if (name == nullptr || attr->attribute("Value") == nullptr) {
                continue;
            }
            const auto key = text::property_key(*name);
            if (const auto* uri = attr->attribute("AttributeURI")) {
                set_plain(out, key + "URI", *uri);
            }
            if (const auto* uri = attr->attribute("UnitsURI")) {
                set_plain(out, key + "UnitsURI", *uri);
            }
        }
    }
}

std::optional<std::string> non_empty(const AttributeMap& a, const char* key) {
    const auto* v = a.find(key);
    if (v == nullptr || text::trim(v->value).empty()) {
        return std::nullopt;
    }
    return text::trim(v->value);
}

std::optional<std::string> derive_tag(const AttributeMap& a, const std::string& line_number) {
    if (auto t = non_empty(a, "TagNameAssignmentClass")) {
        return t;
    }
    if (auto t = non_empty(a, "PositionNumberAssignmentClass")) {
        return t;
    }
    if (auto n = non_empty(a, "ProcessInstrumentationFunctionNumberAssignmentClass")) {
        return non_empty(a, "ProcessInstrumentationFunctionCategoryAssignmentClass").value_or("") +
               non_empty(a, "ProcessInstrumentationFunctionsAssignmentClass").value_or("") + *n;
    }
    for (const char* key : {"ProcessSignalGeneratingFunctionNumberAssignmentClass",
                            "ActuatingFunctionNumberAssignmentClass",
                            "ActuatingSystemNumberAssignmentClass"}) {
        if (auto t = non_empty(a, key)) {
            return t;
        }
    }
    if (auto n = non_empty(a, "PipingComponentNumberAssignmentClass")) {
        return line_number.empty() ? *n : line_number + "-" + *n;
    }
    return std::nullopt;
}

class Parser {
public:
    explicit Parser(const xml::Document& doc) : doc_(doc) {}

    PidModel run() {
        read_metadata(*doc_.root);
        for (const auto& child : doc_.root->children) {
            walk(*child, Context{});
        }
        route_segments();
        derive_signals();
        return std::move(model_);
    }

private:
    struct Context {
        std::optional<std::size_t> parent;
        std::optional<Package> section;
        std::string line_number;
    };

    struct Ports {
        std::vector<std::optional<std::string>> nodes; ///< by node index; process nodes only
        std::optional<int> flow_in;
        std::optional<int> flow_out;
    };

    struct Hop {
        std::string id;
        std::optional<int> in_node;
        std::optional<int> out_node;
    };

    struct Segment {
        std::string id;
        std::vector<std::string> sequence;
        const xml::Element* connection = nullptr;
    };

    void read_metadata(const xml::Element& root) {
        if (const auto* info = root.child("PlantInformation")) {
            for (const auto& [k, v] : info->attributes) {
                model_.metadata[text::lower_camel(k)] = v;
            }
        }
        if (const auto* drawing = root.child("Drawing")) {
            if (const auto* name = drawing->attribute("Name")) {
                model_.metadata["drawingName"] = *name;
            }
        }
        if (const auto* meta = root.child("MetaData")) {
            AttributeMap attrs;
            read_generic_attributes(*meta, attrs);
            if (!model_.metadata.count("drawingName")) {
                if (auto name = non_empty(attrs, "DrawingNameAssignmentClass")) {
                    model_.metadata["drawingName"] = *name;
                }
            }
        }
    }

    std::string id_for(const xml::Element& e) const {
        if (const auto* id = e.attribute("ID"); id && !id->empty()) {
            return *id;
        }
        return "gen-" + std::to_string(e.document_index);
    }

    std::size_t push_item(PlantItem item, const Context& ctx) {
        if (ctx.parent) {
            item.parent = model_.items[*ctx.parent].id;
            model_.items[*ctx.parent].children.push_back(item.id);
        }
        index_.emplace(item.id, model_.items.size());
        model_.items.push_back(std::move(item));
        return model_.items.size() - 1;
    }

    Package resolve_package(const xml::Element& e, const std::string& class_name,
                            const Context& ctx) const {
        if (auto p = Taxonomy::builtin().package_of(class_name)) return *p;
        if (auto p = package_for_element(e.name)) return *p;
        if (ctx.section) return *ctx.section;
        return Package::equipment;
    }

    // Returns the index of the created item, if the element is one.
    std::optional<std::size_t> walk(const xml::Element& e, const Context& ctx) {
        if (kIgnoredElements.count(e.name)) {
            return std::nullopt;
        }
        const auto* cls = e.attribute("ComponentClass");
        if (cls == nullptr || cls->empty()) {
            for (const auto& child : e.children) {
                walk(*child, ctx);
            }
            return std::nullopt;
        }

        PlantItem item;
        item.id = id_for(e);
        item.class_name = *cls;
        item.package = resolve_package(e, *cls, ctx);
        item.xml_element = e.name;
        item.line = e.line;
        read_generic_attributes(e, item.attributes);
        read_presentation(e, item.presentation);
        for (const auto* assoc : e.children_named("Association")) {
            item.associations.push_back({assoc->attribute_or("Type"), assoc->attribute_or("ItemID")});
        }

        Context inner = ctx;
        inner.section = item.package;
        if (e.name == "PipingNetworkSystem") {
            inner.line_number = non_empty(item.attributes, "LineNumberAssignmentClass").value_or("");
        }
        item.tag = derive_tag(item.attributes, ctx.line_number);

        const auto self = push_item(std::move(item), ctx);
        inner.parent = self;
        read_ports(e, self);

        if (e.name == "PipingNetworkSegment") {
            walk_segment(e, inner, self);
        } else {
            for (const auto& child : e.children) {
                walk(*child, inner);
            }
        }
        return self;
    }

    void read_ports(const xml::Element& e, std::size_t owner) {
        const auto* cp = e.child("ConnectionPoints");
        if (cp == nullptr) {
            return;
        }
        Ports ports;
        ports.flow_in = parse_int(cp->attribute("FlowIn"));
        ports.flow_out = parse_int(cp->attribute("FlowOut"));
        Context ctx{owner, Package::piping, {}};
        for (const auto* node : cp->children_named("Node")) {
            if (node->attribute_or("Type") != "process") {
                ports.nodes.emplace_back(std::nullopt);
                continue;
            }
            PlantItem item;
            item.id = id_for(*node);
            item.class_name = "PipingNode";
            item.package = Package::piping;
            item.xml_element = node->name;
            item.line = node->line;
            read_generic_attributes(*node, item.attributes);
            read_presentation(*node, item.presentation);
            ports.nodes.emplace_back(item.id);
            push_item(std::move(item), ctx);
        }
        ports_.emplace(model_.items[owner].id, std::move(ports));
    }

    void walk_segment(const xml::Element& e, const Context& ctx, std::size_t self) {
        Segment segment{model_.items[self].id, {}, nullptr};
        for (const auto& child : e.children) {
            if (child->name == "CenterLine") {
                PlantItem pipe;
                pipe.id = "gen-" + std::to_string(child->document_index);
                pipe.class_name = "Pipe";
                pipe.package = Package::piping;
                pipe.xml_element = child->name;
                pipe.line = child->line;
                set_plain(pipe.presentation, "centerLine", read_coordinates(*child));
                if (const auto* n = child->attribute("NumPoints")) {
                    set_plain(pipe.presentation, "numPoints", *n);
                }
                if (const auto* style = child->child("Presentation")) {
                    read_style(*style, "presentation", pipe.presentation);
                }
                segment.sequence.push_back(pipe.id);
                push_item(std::move(pipe), ctx);
            } else if (child->name == "Connection") {
                segment.connection = child.get();
            } else if (auto idx = walk(*child, ctx)) {
                segment.sequence.push_back(model_.items[*idx].id);
            }
        }
        segments_.push_back(std::move(segment));
    }

    std::optional<std::string> node_at(const std::string& item, int index) const {
        auto it = ports_.find(item);
        if (it == ports_.end() || index < 0 ||
            static_cast<std::size_t>(index) >= it->second.nodes.size()) {
            return std::nullopt;
        }
        return it->second.nodes[static_cast<std::size_t>(index)];
    }

    std::vector<std::string> process_nodes(const Ports& ports) const {
        std::vector<std::string> out;
        for (const auto& n : ports.nodes) {
            if (n) out.push_back(*n);
        }
        return out;
    }

    // Port resolution order: explicit segment-end node, declared flow port,
    // the remaining port of a two-port item, the single port.
    std::optional<std::string> exit_port(const Hop& hop) const {
        if (hop.out_node) return node_at(hop.id, *hop.out_node);
        auto it = ports_.find(hop.id);
        if (it == ports_.end()) return std::nullopt;
        const auto& ports = it->second;
        if (ports.flow_out) return node_at(hop.id, *ports.flow_out);
        auto nodes = process_nodes(ports);
        if (nodes.size() == 1) return nodes.front();
        if (nodes.size() == 2 && ports.flow_in) {
            auto in = node_at(hop.id, *ports.flow_in);
            return nodes[0] == in ? nodes[1] : nodes[0];
        }
        return std::nullopt;
    }

    std::optional<std::string> entry_port(const Hop& hop) const {
        if (hop.in_node) return node_at(hop.id, *hop.in_node);
        auto it = ports_.find(hop.id);
        if (it == ports_.end()) return std::nullopt;
        const auto& ports = it->second;
        if (ports.flow_in) return node_at(hop.id, *ports.flow_in);
        auto nodes = process_nodes(ports);
        if (nodes.size() == 1) return nodes.front();
        if (nodes.size() == 2 && ports.flow_out) {
            auto out = node_at(hop.id, *ports.flow_out);
            return nodes[0] == out ? nodes[1] : nodes[0];
        }
        return std::nullopt;
    }

    void route_segments() {
        auto& conns = model_.piping_connections;
        for (const auto& segment : segments_) {
            std::vector<Hop> hops;
            for (const auto& id : segment.sequence) {
                hops.push_back({id, std::nullopt, std::nullopt});
            }
            if (const auto* c = segment.connection) {
                // an endpoint equal to the first/last contained item is a self-reference
                const auto* from = c->attribute("FromID");
                if (from && !from->empty() && (hops.empty() || hops.front().id != *from)) {
                    hops.insert(hops.begin(), {*from, std::nullopt, parse_int(c->attribute("FromNode"))});
                }
                const auto* to = c->attribute("ToID");
                if (to && !to->empty() && (hops.empty() || hops.back().id != *to)) {
                    hops.push_back({*to, parse_int(c->attribute("ToNode")), std::nullopt});
                }
            }
            for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
                conns.push_back({hops[i].id, exit_port(hops[i]), hops[i + 1].id,
                                 entry_port(hops[i + 1]), segment.id});
            }
        }

        // A port used for both inflow and outflow cannot carry a direction; keep it
        // as an entry and route the outflow from the item itself.
        std::unordered_set<std::string> entries;
        for (const auto& c : conns) {
            if (c.to_port) entries.insert(*c.to_port);
        }
        std::set<std::string> reported;
        for (auto& c : conns) {
            if (c.from_port && entries.count(*c.from_port)) {
                if (reported.insert(*c.from_port).second) {
                    model_.diagnostics.push_back(
                        {Severity::warning, c.from_item,
                         "ambiguous flow direction: port '" + *c.from_port +
                             "' is used for inflow and outflow"});
                }
                c.from_port.reset();
            }
        }
    }

    const PlantItem* item(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &model_.items[it->second];
    }

    static std::optional<std::string> association(const PlantItem& item, std::string_view type) {
        for (const auto& a : item.associations) {
            if (a.type == type) return a.target_id;
        }
        return std::nullopt;
    }

    void derive_signals() {
        auto& out = model_.signal_connections;
        for (const auto& it : model_.items) {
            if (it.xml_element == "InformationFlow") {
                auto start = association(it, "has logical start");
                auto end = association(it, "has logical end");
                if (start && end) {
                    out.push_back({*start, *end, SignalKind::signal, it.id});
                    out.push_back({*end, it.id, SignalKind::logical_end, {}});
                } else {
                    model_.diagnostics.push_back(
                        {Severity::warning, it.id, "information flow without logical start and end"});
                }
                continue;
            }
            if (it.package == Package::instrumentation) {
                if (auto loc = association(it, "is located in")) {
                    out.push_back({*loc, it.id, SignalKind::measurement, {}});
                }
            }
            if (it.xml_element == "ActuatingSystem") {
                auto function = association(it, "fulfills");
                for (const auto& child_id : it.children) {
                    const auto* child = item(child_id);
                    if (child == nullptr) continue;
                    if (auto target = association(*child, "refers to")) {
                        out.push_back({function.value_or(it.id), *target, SignalKind::actuation, it.id});
                    }
                }
            }
            if (it.xml_element == "PipeOffPageConnector") {
                // off-page connectors terminate their piping network system on this sheet
                const PlantItem* p = it.parent ? item(*it.parent) : nullptr;
                while (p && p->class_name != "PipingNetworkSystem" && p->parent) {
                    p = item(*p->parent);
                }
                if (p) {
                    out.push_back({it.id, p->id, SignalKind::logical_end, {}});
                }
            }
        }
    }

    const xml::Document& doc_;
    PidModel model_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, Ports> ports_;
    std::vector<Segment> segments_;
};

} // namespace

PidModel parse_dexpi(std::string_view xml_text, const ParseOptions& options) {
    const auto doc = xml::parse(xml_text);
    PidModel model = Parser(doc).run();
    auto checks = validate(model);
    model.diagnostics.insert(model.diagnostics.end(), checks.begin(), checks.end());
    if (options.strict && !model.diagnostics.empty()) {
        const auto& first = model.diagnostics.front();
        throw ParseError("strict parse failed with " + std::to_string(model.diagnostics.size()) +
                         " diagnostic(s); first: " + first.message +
                         (first.item_id.empty() ? "" : " [" + first.item_id + "]"));
    }
    return model;
}

std::vector<Diagnostic> validate(const PidModel& model) {
    std::vector<Diagnostic> out;
    std::unordered_map<std::string, int> counts;
    std::vector<std::string> order;
    for (const auto& it : model.items) {
        if (counts[it.id]++ == 0) order.push_back(it.id);
    }
    for (const auto& id : order) {
        if (counts[id] > 1) {
            out.push_back({Severity::error, id,
                           "duplicate id '" + id + "' (" + std::to_string(counts[id]) + " items)"});
        }
    }
    auto exists = [&](const std::string& id) { return counts.count(id) > 0; };
    auto unresolved = [&](const std::string& owner, const std::string& what, const std::string& id) {
        out.push_back({Severity::error, owner, "unresolved reference: " + what + " '" + id + "'"});
    };

    for (const auto& it : model.items) {
        for (const auto& c : it.children) {
            if (!exists(c)) unresolved(it.id, "child", c);
        }
        if (it.parent && !exists(*it.parent)) unresolved(it.id, "parent", *it.parent);
        for (const auto& a : it.associations) {
            if (!a.target_id.empty() && !exists(a.target_id)) {
                out.push_back({Severity::warning, it.id,
                               "unresolved reference: association '" + a.type + "' target '" +
                                   a.target_id + "'"});
            }
        }
    }
    for (const auto& c : model.piping_connections) {
        if (!exists(c.from_item)) unresolved(c.segment_id, "piping connection source", c.from_item);
        if (!exists(c.to_item)) unresolved(c.segment_id, "piping connection target", c.to_item);
        if (c.from_port && !exists(*c.from_port)) unresolved(c.segment_id, "port", *c.from_port);
        if (c.to_port && !exists(*c.to_port)) unresolved(c.segment_id, "port", *c.to_port);
        if (c.from_item == c.to_item && c.from_port == c.to_port) {
            out.push_back({Severity::error, c.from_item, "piping connection loops back to the same port"});
        }
    }
    for (const auto& s : model.signal_connections) {
        if (!exists(s.source)) unresolved(s.via, "signal source", s.source);
        if (!exists(s.target)) unresolved(s.via, "signal target", s.target);
        if (s.kind == SignalKind::unknown) {
            out.push_back({Severity::warning, s.source,
                           "signal connection of unknown kind to '" + s.target + "'"});
        }
    }
    return out;
}

namespace {

nlohmann::json attributes_json(const AttributeMap& attrs) {
    auto out = nlohmann::json::array();
    for (const auto& [name, v] : attrs) {
        nlohmann::json a = {{"name", name}, {"value", v.value}};
        if (v.units) a["units"] = *v.units;
        out.push_back(std::move(a));
    }
    return out;
}

AttributeMap attributes_from(const nlohmann::json& arr) {
    AttributeMap out;
    for (const auto& a : arr) {
        AttributeValue v{a.at("value").get<std::string>(), std::nullopt};
        if (a.contains("units")) v.units = a["units"].get<std::string>();
        out.set(a.at("name").get<std::string>(), std::move(v));
    }
    return out;
}

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
    return std::nullopt;
}

} // namespace

nlohmann::json to_json(const PidModel& model) {
    nlohmann::json doc;
    doc["metadata"] = model.metadata;
    auto items = nlohmann::json::array();
    for (const auto& it : model.items) {
        nlohmann::json j = {
            {"id", it.id},
            {"class_name", it.class_name},
            {"package", to_string(it.package)},
            {"attributes", attributes_json(it.attributes)},
            {"presentation", attributes_json(it.presentation)},
            {"children", it.children},
            {"xml_element", it.xml_element},
            {"line", it.line},
        };
        if (it.tag) j["tag"] = *it.tag;
        if (it.parent) j["parent"] = *it.parent;
        auto assoc = nlohmann::json::array();
        for (const auto& a : it.associations) {
            assoc.push_back({{"type", a.type}, {"target", a.target_id}});
        }
        j["associations"] = std::move(assoc);
        items.push_back(std::move(j));
    }
    doc["items"] = std::move(items);

    auto piping = nlohmann::json::array();
    for (const auto& c : model.piping_connections) {
        nlohmann::json j = {{"from_item", c.from_item}, {"to_item", c.to_item}, {"segment", c.segment_id}};
        if (c.from_port) j["from_port"] = *c.from_port;
        if (c.to_port) j["to_port"] = *c.to_port;
        piping.push_back(std::move(j));
    }
    doc["piping_connections"] = std::move(piping);

    auto signals = nlohmann::json::array();
    for (const auto& s : model.signal_connections) {
        signals.push_back({{"source", s.source}, {"target", s.target},
                           {"kind", to_string(s.kind)}, {"via", s.via}});
    }
    doc["signal_connections"] = std::move(signals);

    doc["diagnostics"] = diagnostics_to_json(model.diagnostics);
    return doc;
}

nlohmann::json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics) {
    auto diags = nlohmann::json::array();
    for (const auto& d : diagnostics) {
        diags.push_back({{"severity", to_string(d.severity)}, {"item_id", d.item_id}, {"message", d.message}});
    }
    return diags;
}

PidModel model_from_json(const nlohmann::json& doc) {
    try {
        PidModel model;
        if (doc.contains("metadata")) {
            model.metadata = doc["metadata"].get<std::map<std::string, std::string>>();
        }
        for (const auto& j : doc.value("items", nlohmann::json::array())) {
            PlantItem it;
            it.id = j.at("id").get<std::string>();
            it.class_name = j.at("class_name").get<std::string>();
            auto package = package_from_string(j.value("package", "equipment"));
            if (!package) throw ImportError("item '" + it.id + "' has an unknown package");
            it.package = *package;
            it.tag = opt_string(j, "tag");
            it.parent = opt_string(j, "parent");
            it.attributes = attributes_from(j.value("attributes", nlohmann::json::array()));
            it.presentation = attributes_from(j.value("presentation", nlohmann::json::array()));
            it.children = j.value("children", std::vector<std::string>{});
            for (const auto& a : j.value("associations", nlohmann::json::array())) {
                it.associations.push_back({a.at("type").get<std::string>(), a.at("target").get<std::string>()});
            }
            it.xml_element = j.value("xml_element", "");
            it.line = j.value("line", 0);
            model.items.push_back(std::move(it));
        }
        for (const auto& j : doc.value("piping_connections", nlohmann::json::array())) {
            model.piping_connections.push_back({j.at("from_item").get<std::string>(), opt_string(j, "from_port"),
                                                j.at("to_item").get<std::string>(), opt_string(j, "to_port"),
                                                j.value("segment", "")});
        }
        for (const auto& j : doc.value("signal_connections", nlohmann::json::array())) {
            model.signal_connections.push_back({j.at("source").get<std::string>(), j.at("target").get<std::string>(),
                                                signal_kind_from_string(j.value("kind", "")), j.value("via", "")});
        }
        for (const auto& j : doc.value("diagnostics", nlohmann::json::array())) {
            Severity sev = Severity::warning;
            const auto s = j.value("severity", "warning");
            if (s == "info") sev = Severity::info;
            if (s == "error") sev = Severity::error;
            model.diagnostics.push_back({sev, j.value("item_id", ""), j.value("message", "")});
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ImportError(std::string("invalid model JSON: ") + e.what());
    }
}

} // namespace pidrag::dexpi
