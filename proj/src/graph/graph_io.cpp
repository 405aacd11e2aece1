#include "pidrag/graph/graph_io.hpp"

#include "pidrag/error.hpp"
#include "pidrag/text.hpp"
#include "pidrag/xml_dom.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace pidrag::graph {

namespace {

const char* type_name(const Scalar& v) {
    if (std::holds_alternative<std::string>(v)) return "string";
    if (std::holds_alternative<double>(v)) return "double";
    return "boolean";
}

struct KeyTable {
    struct Decl {
        std::string id;
        std::string domain;
        std::string name;
        std::string type;
    };

    std::vector<Decl> decls;
    std::map<std::pair<std::string, std::string>, std::string> ids; ///< (name, type) -> id

    const std::string& id_for(const std::string& name, const Scalar& v) const {
        return ids.at({name, type_name(v)});
    }
};

KeyTable make_keys(const PropertyGraph& g) {
    std::map<std::pair<std::string, std::string>, std::set<std::string>> uses;
    for (const auto& [id, node] : g.nodes()) {
        for (const auto& [k, v] : node.properties) uses[{k, type_name(v)}].insert("node");
    }
    for (const auto& e : g.edges()) {
        for (const auto& [k, v] : e.properties) uses[{k, type_name(v)}].insert("edge");
    }
    std::map<std::string, int> types_per_name;
    for (const auto& [key, domains] : uses) ++types_per_name[key.first];

    KeyTable table;
    std::set<std::string> taken = {"labels", "type"};
    table.decls.push_back({"labels", "node", "labels", "string"});
    table.decls.push_back({"type", "edge", "type", "string"});
    for (const auto& [key, domains] : uses) {
        const auto& [name, type] = key;
        std::string id = types_per_name[name] > 1 ? name + "." + type : name;
        if (taken.count(id)) id = "prop." + id;
        for (int n = 2; taken.count(id); ++n) id = name + "_" + std::to_string(n);
        taken.insert(id);
        const std::string domain = domains.size() > 1 ? "all" : *domains.begin();
        table.decls.push_back({id, domain, name, type});
        table.ids[key] = id;
    }
    return table;
}

void check_text(const std::string& value, const std::string& owner, const std::string& key) {
    if (!xml::representable(value)) {
        throw SerializationError("value of '" + key + "' on '" + owner +
                                 "' is not representable in XML (invalid UTF-8 or control character)");
    }
}

std::string value_text(const Scalar& v, const std::string& owner, const std::string& key) {
    if (const auto* d = std::get_if<double>(&v)) {
        if (!std::isfinite(*d)) {
            throw SerializationError("non-finite number in '" + key + "' on '" + owner + "'");
        }
        return text::format_number(*d);
    }
    auto s = scalar_to_string(v);
    check_text(s, owner, key);
    return xml::escape(s);
}

void emit_data(std::string& out, const std::string& indent, const std::string& key_id,
               const std::string& body) {
    out += indent;
    out += "<data key=\"";
    out += xml::escape(key_id);
    out += "\">";
    out += body;
    out += "</data>\n";
}

std::string edge_owner(const GraphEdge& e) {
    return e.source + "->" + e.target;
}

} // namespace

std::string export_graphml(const PropertyGraph& g) {
    const auto keys = make_keys(g);
    std::string out;
    out.reserve(256 + g.node_count() * 512);
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" "
           "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
           "xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
           "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n";
    for (const auto& d : keys.decls) {
        check_text(d.name, "key", d.name);
        out += "  <key id=\"" + xml::escape(d.id) + "\" for=\"" + d.domain + "\" attr.name=\"" +
               xml::escape(d.name) + "\" attr.type=\"" + d.type + "\"/>\n";
    }
    out += "  <graph id=\"G\" edgedefault=\"directed\">\n";

    for (const auto& [id, node] : g.nodes()) {
        check_text(id, id, "id");
        out += "    <node id=\"" + xml::escape(id) + "\">\n";
        for (const auto& label : node.labels) {
            if (label.empty() || label.find(';') != std::string::npos) {
                throw SerializationError("label '" + label + "' on '" + id + "' cannot be joined with ';'");
            }
            check_text(label, id, "labels");
        }
        emit_data(out, "      ", "labels", xml::escape(text::join(node.labels, ";")));
        for (const auto& [k, v] : node.properties) {
            emit_data(out, "      ", keys.id_for(k, v), value_text(v, id, k));
        }
        out += "    </node>\n";
    }
    for (const auto& e : g.sorted_edges()) {
        out += "    <edge source=\"" + xml::escape(e.source) + "\" target=\"" + xml::escape(e.target) + "\">\n";
        check_text(e.type, edge_owner(e), "type");
        emit_data(out, "      ", "type", xml::escape(e.type));
        for (const auto& [k, v] : e.properties) {
            emit_data(out, "      ", keys.id_for(k, v), value_text(v, edge_owner(e), k));
        }
        out += "    </edge>\n";
    }
    out += "  </graph>\n</graphml>\n";
    return out;
}

namespace {

struct ImportKey {
    std::string domain;
    std::string name;
    std::string type;
};

Scalar parse_value(const ImportKey& key, const std::string& raw, const std::string& owner) {
    if (key.type == "string") return raw;
    if (key.type == "boolean") {
        if (raw == "true") return true;
        if (raw == "false") return false;
        throw ImportError("boolean '" + key.name + "' on '" + owner + "' has value '" + raw + "'");
    }
    if (key.type == "double" || key.type == "float" || key.type == "int" || key.type == "long") {
        const auto trimmed = text::trim(raw);
        double d = 0;
        auto res = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), d);
        if (res.ec != std::errc() || res.ptr != trimmed.data() + trimmed.size()) {
            throw ImportError("number '" + key.name + "' on '" + owner + "' has value '" + raw + "'");
        }
        return d;
    }
    throw ImportError("key '" + key.name + "' has unsupported type '" + key.type + "'");
}

} // namespace

PropertyGraph import_graphml(std::string_view text_in) {
    xml::Document doc;
    try {
        doc = xml::parse(text_in);
    } catch (const ParseError& e) {
        throw ImportError(std::string("GraphML is not well-formed: ") + e.what());
    }
    const auto& root = *doc.root;
    if (root.name != "graphml") {
        throw ImportError("root element is '" + root.name + "', expected 'graphml'");
    }
    std::map<std::string, ImportKey> keys;
    for (const auto* k : root.children_named("key")) {
        const auto id = k->attribute_or("id");
        keys[id] = {k->attribute_or("for", "all"), k->attribute_or("attr.name", id),
                    k->attribute_or("attr.type", "string")};
    }
    const auto* graph_el = root.child("graph");
    if (!graph_el) throw ImportError("GraphML has no <graph> element");

    auto lookup = [&](const xml::Element& data, const std::string& domain, const std::string& owner)
        -> std::pair<std::string, const ImportKey*> {
        const auto key_id = data.attribute_or("key");
        auto it = keys.find(key_id);
        if (it == keys.end()) {
            throw ImportError("unknown key '" + key_id + "' referenced by '" + owner + "'");
        }
        if (it->second.domain != "all" && it->second.domain != domain) {
            throw ImportError("key '" + key_id + "' is declared for " + it->second.domain + ", used on " + domain);
        }
        return {key_id, &it->second};
    };

    PropertyGraph g;
    try {
        for (const auto* n : graph_el->children_named("node")) {
            GraphNode node;
            node.id = n->attribute_or("id");
            for (const auto* d : n->children_named("data")) {
                auto [key_id, key] = lookup(*d, "node", node.id);
                if (key_id == "labels") {
                    node.labels = text::split(d->text, ';');
                } else {
                    node.properties[key->name] = parse_value(*key, d->text, node.id);
                }
            }
            if (node.labels.empty()) throw ImportError("node '" + node.id + "' has no labels");
            g.add_node(std::move(node));
        }
        for (const auto* e : graph_el->children_named("edge")) {
            GraphEdge edge;
            edge.source = e->attribute_or("source");
            edge.target = e->attribute_or("target");
            bool typed = false;
            for (const auto* d : e->children_named("data")) {
                auto [key_id, key] = lookup(*d, "edge", edge.source + "->" + edge.target);
                if (key_id == "type") {
                    edge.type = d->text;
                    typed = true;
                } else {
                    edge.properties[key->name] = parse_value(*key, d->text, edge.source + "->" + edge.target);
                }
            }
            if (!typed) throw ImportError("edge " + edge.source + "->" + edge.target + " has no type");
            g.add_edge(std::move(edge));
        }
    } catch (const BuildError& e) {
        throw ImportError(e.what());
    }
    return g;
}

namespace {

nlohmann::json properties_json(const Properties& props) {
    auto out = nlohmann::json::object();
    for (const auto& [k, v] : props) {
        std::visit([&](const auto& x) { out[k] = x; }, v);
    }
    return out;
}

Properties properties_from(const nlohmann::json& j, const std::string& owner) {
    Properties out;
    if (j.is_null()) return out;
    if (!j.is_object()) throw ImportError("properties of '" + owner + "' must be an object");
    for (const auto& [k, v] : j.items()) {
        if (v.is_string()) out[k] = v.get<std::string>();
        else if (v.is_boolean()) out[k] = v.get<bool>();
        else if (v.is_number()) out[k] = v.get<double>();
        else throw ImportError("property '" + k + "' on '" + owner + "' is not a scalar");
    }
    return out;
}

} // namespace

nlohmann::json to_json(const PropertyGraph& g) {
    auto nodes = nlohmann::json::array();
    for (const auto& [id, n] : g.nodes()) {
        nodes.push_back({{"id", id}, {"labels", n.labels}, {"properties", properties_json(n.properties)}});
    }
    auto edges = nlohmann::json::array();
    for (const auto& e : g.sorted_edges()) {
        edges.push_back({{"source", e.source}, {"target", e.target}, {"type", e.type},
                         {"properties", properties_json(e.properties)}});
    }
    return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

std::string export_json(const PropertyGraph& g) {
    try {
        return to_json(g).dump(2) + "\n";
    } catch (const nlohmann::json::exception& e) {
        throw SerializationError(std::string("graph cannot be written as JSON: ") + e.what());
    }
}

PropertyGraph from_json(const nlohmann::json& doc) {
    try {
        PropertyGraph g;
        for (const auto& n : doc.at("nodes")) {
            GraphNode node;
            node.id = n.at("id").get<std::string>();
            node.labels = n.at("labels").get<std::vector<std::string>>();
            node.properties = properties_from(n.value("properties", nlohmann::json()), node.id);
            g.add_node(std::move(node));
        }
        for (const auto& e : doc.at("edges")) {
            GraphEdge edge;
            edge.source = e.at("source").get<std::string>();
            edge.target = e.at("target").get<std::string>();
            edge.type = e.at("type").get<std::string>();
            edge.properties = properties_from(e.value("properties", nlohmann::json()), edge.source);
            g.add_edge(std::move(edge));
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw ImportError(std::string("invalid graph JSON: ") + e.what());
    } catch (const BuildError& e) {
        throw ImportError(e.what());
    }
}

PropertyGraph import_json(std::string_view text_in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text_in);
    } catch (const nlohmann::json::exception& e) {
        throw ImportError(std::string("invalid graph JSON: ") + e.what());
    }
    return from_json(doc);
}

PropertyGraph import_any(std::string_view text_in) {
    const auto first = text_in.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
    if (first != std::string_view::npos && text_in[first] == '<') return import_graphml(text_in);
    return import_json(text_in);
}

std::size_t PretokenizerCount::count(std::string_view s) const {
    enum class Kind { none, letter, digit, space, other };
    auto kind_of = [](unsigned char c) {
        if (c >= 0x80 || std::isalpha(c)) return Kind::letter;
        if (std::isdigit(c)) return Kind::digit;
        if (std::isspace(c)) return Kind::space;
        return Kind::other;
    };
    std::size_t tokens = 0;
    Kind prev = Kind::none;
    std::size_t digit_run = 0;
    for (char ch : s) {
        const auto k = kind_of(static_cast<unsigned char>(ch));
        if (k == Kind::digit) {
            // digit runs split into groups of three
            if (prev != Kind::digit || digit_run % 3 == 0) ++tokens;
            digit_run = prev == Kind::digit ? digit_run + 1 : 1;
        } else if (k == Kind::other || k != prev) {
            ++tokens;
        }
        prev = k;
    }
    return tokens;
}

std::unique_ptr<Tokenizer> make_tokenizer(const std::string& name) {
    if (name.empty() || name == "heuristic") return nullptr;
    if (name == "pretokenize") return std::make_unique<PretokenizerCount>();
    throw ConfigError("unknown tokenizer '" + name + "' (known: heuristic, pretokenize)");
}

TokenEstimate estimate_tokens(std::string_view s, const Tokenizer* tokenizer) {
    TokenEstimate est;
    est.char_count = text::utf8_length(s);
    if (tokenizer) {
        est.token_count = tokenizer->count(s);
        est.method = TokenEstimate::Method::exact_tokenizer;
    } else {
        est.token_count = (est.char_count + 3) / 4;
    }
    return est;
}

} // namespace pidrag::graph
