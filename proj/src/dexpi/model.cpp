#include "pidrag/dexpi/model.hpp"

namespace pidrag::dexpi {

std::string to_string(Package p) {
    switch (p) {
        case Package::equipment: return "equipment";
        case Package::piping: return "piping";
        case Package::instrumentation: return "instrumentation";
    }
    return "equipment";
}

std::optional<Package> package_from_string(const std::string& s) {
    if (s == "equipment") return Package::equipment;
    if (s == "piping") return Package::piping;
    if (s == "instrumentation") return Package::instrumentation;
    return std::nullopt;
}

std::string to_string(SignalKind k) {
    switch (k) {
        case SignalKind::measurement: return "measurement";
        case SignalKind::signal: return "signal";
        case SignalKind::actuation: return "actuation";
        case SignalKind::logical_end: return "logical_end";
        case SignalKind::unknown: return "unknown";
    }
    return "unknown";
}

SignalKind signal_kind_from_string(const std::string& s) {
    if (s == "measurement") return SignalKind::measurement;
    if (s == "signal") return SignalKind::signal;
    if (s == "actuation") return SignalKind::actuation;
    if (s == "logical_end") return SignalKind::logical_end;
    return SignalKind::unknown;
}

std::string to_string(Severity s) {
    switch (s) {
        case Severity::info: return "info";
        case Severity::warning: return "warning";
        case Severity::error: return "error";
    }
    return "warning";
}

void AttributeMap::set(const std::string& name, AttributeValue value) {
    if (find(name) == nullptr) {
        entries_.emplace_back(name, std::move(value));
    }
}

const AttributeValue* AttributeMap::find(const std::string& name) const {
    for (const auto& [k, v] : entries_) {
        if (k == name) {
            return &v;
        }
    }
    return nullptr;
}

const PlantItem* PidModel::find(const std::string& id) const {
    for (const auto& item : items) {
        if (item.id == id) {
            return &item;
        }
    }
    return nullptr;
}

PlantItem* PidModel::find(const std::string& id) {
    for (auto& item : items) {
        if (item.id == id) {
            return &item;
        }
    }
    return nullptr;
}

} // namespace pidrag::dexpi
