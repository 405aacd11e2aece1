#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pidrag::dexpi {

enum class Package { equipment, piping, instrumentation };

std::string to_string(Package p);
std::optional<Package> package_from_string(const std::string& s);

struct AttributeValue {
    std::string value;
    std::optional<std::string> units;

    bool operator==(const AttributeValue&) const = default;
};

/// Insertion-ordered name -> value list. Repeated names keep their first value.
class AttributeMap {
public:
    void set(const std::string& name, AttributeValue value);
    const AttributeValue* find(const std::string& name) const;
    bool contains(const std::string& name) const { return find(name) != nullptr; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool operator==(const AttributeMap&) const = default;

private:
    std::vector<std::pair<std::string, AttributeValue>> entries_;
};

/// A DEXPI association as declared on an element ("is located in", "refers to", ...).
struct Association {
    std::string type;
    std::string target_id;

    bool operator==(const Association&) const = default;
};

struct PlantItem {
    std::string id;
    std::string class_name;
    Package package = Package::equipment;
    std::optional<std::string> tag;
    AttributeMap attributes;   ///< GenericAttributes, units kept verbatim
    AttributeMap presentation; ///< geometry, shape and URI data from the drawing layer
    std::vector<std::string> children;
    std::optional<std::string> parent;
    std::vector<Association> associations;
    std::string xml_element; ///< element the item came from (Equipment, Node, CenterLine, ...)
    int line = 0;

    bool operator==(const PlantItem&) const = default;
};

struct PipingConnection {
    std::string from_item;
    std::optional<std::string> from_port;
    std::string to_item;
    std::optional<std::string> to_port;
    std::string segment_id;

    bool operator==(const PipingConnection&) const = default;
};

enum class SignalKind { measurement, signal, actuation, logical_end, unknown };

std::string to_string(SignalKind k);
SignalKind signal_kind_from_string(const std::string& s);

struct SignalConnection {
    std::string source;
    std::string target;
    SignalKind kind = SignalKind::unknown;
    std::string via; ///< information flow or actuating system that carries the signal, if any

    bool operator==(const SignalConnection&) const = default;
};

enum class Severity { info, warning, error };

std::string to_string(Severity s);

struct Diagnostic {
    Severity severity = Severity::warning;
    std::string item_id;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

/// Parsed plant. Items keep document order; ids are expected to be unique but
/// duplicates survive parsing so that validate() can report them.
struct PidModel {
    std::vector<PlantItem> items;
    std::vector<PipingConnection> piping_connections;
    std::vector<SignalConnection> signal_connections;
    std::map<std::string, std::string> metadata;
    std::vector<Diagnostic> diagnostics; ///< collected while parsing

    const PlantItem* find(const std::string& id) const;
    PlantItem* find(const std::string& id);

    bool operator==(const PidModel&) const = default;
};

} // namespace pidrag::dexpi
