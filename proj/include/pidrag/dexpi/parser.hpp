#pragma once

#include "pidrag/dexpi/model.hpp"

#include <nlohmann/json.hpp>

#include <string_view>
#include <vector>

namespace pidrag::dexpi {

struct ParseOptions {
    bool strict = false; ///< throw ParseError when any diagnostic is collected
};

/// Parses a DEXPI/Proteus XML document. Malformed XML always throws ParseError;
/// model-level problems become diagnostics (and a ParseError in strict mode).
PidModel parse_dexpi(std::string_view xml, const ParseOptions& options = {});

/// Structural checks: duplicate ids, unresolved references, same-port self loops,
/// signal connections of unknown kind. Never mutates the model.
std::vector<Diagnostic> validate(const PidModel& model);

nlohmann::json to_json(const PidModel& model);
/// [{severity, item_id, message}]
nlohmann::json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics);
PidModel model_from_json(const nlohmann::json& doc);

} // namespace pidrag::dexpi
