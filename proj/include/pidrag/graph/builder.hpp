#pragma once

#include "pidrag/dexpi/model.hpp"
#include "pidrag/dexpi/taxonomy.hpp"
#include "pidrag/graph/property_graph.hpp"

#include <vector>

namespace pidrag::graph {

struct BuildOptions {
    bool strict = false; ///< unresolved references throw instead of being skipped
    const dexpi::Taxonomy* taxonomy = nullptr; ///< defaults to the built-in table
    bool include_presentation = true; ///< copy drawing-layer data into node properties
};

/// [package, intermediate tiers..., lowerCamel(class_name)].
std::vector<std::string> derive_labels(const dexpi::PlantItem& item, const dexpi::Taxonomy& taxonomy);

/// Node properties: className, tagName, generic attributes (numbers parsed losslessly,
/// units under "<key>Units"), then presentation data.
Properties item_properties(const dexpi::PlantItem& item, bool include_presentation = true);

/// Material flow (send_to), measurement, signal, control and logical-end edges.
/// Connections with a missing endpoint or an unknown signal kind are skipped and reported.
std::vector<GraphEdge> lexical_edges(const dexpi::PidModel& model,
                                     std::vector<dexpi::Diagnostic>* diagnostics = nullptr);

/// Throws BuildError on duplicate ids, and on unresolved references in strict mode.
PropertyGraph build_graph(const dexpi::PidModel& model, const BuildOptions& options = {},
                          std::vector<dexpi::Diagnostic>* diagnostics = nullptr);

} // namespace pidrag::graph
