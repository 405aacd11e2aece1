#pragma once

#include "pidrag/dexpi/model.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pidrag::dexpi {

/// Class hierarchy table: DEXPI class name -> package and intermediate tiers.
class Taxonomy {
public:
    struct Entry {
        Package package = Package::equipment;
        std::vector<std::string> tiers; ///< lowerCamel ancestors between package and class
    };

    /// Built-in table covering the common DEXPI 1.x classes.
    static const Taxonomy& builtin();

    /// {"ClassName": {"package": "piping", "tiers": ["valve"]}, ...}
    static Taxonomy from_json(const nlohmann::json& doc);

    void add(const std::string& class_name, Entry entry);
    const Entry* find(const std::string& class_name) const;
    std::optional<Package> package_of(const std::string& class_name) const;

    /// [package, tiers..., lowerCamel(class_name)]; unknown class -> [fallback, lowerCamel(class_name)].
    std::vector<std::string> labels(const std::string& class_name, Package fallback) const;

    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, Entry> entries_;
};

} // namespace pidrag::dexpi
