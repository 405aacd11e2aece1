#pragma once

#include "pidrag/dexpi/model.hpp"
#include "pidrag/graph/condenser.hpp"
#include "pidrag/graph/property_graph.hpp"

#include <string>
#include <string_view>

namespace pidrag {

struct Pipeline {
    dexpi::PidModel model;
    graph::PropertyGraph complete;
    graph::PropertyGraph high;
    graph::CondensationReport report;
};

/// parse -> build -> condense. Build-time diagnostics are appended to model.diagnostics.
Pipeline run_pipeline(std::string_view xml, bool strict = false,
                      const graph::CondensationPolicy& policy = graph::CondensationPolicy::defaults());

/// Reads a whole file; throws Error when it cannot be opened.
std::string read_file(const std::string& path);

/// Writes to a sibling temporary file and renames it over path.
void write_file_atomic(const std::string& path, std::string_view content);

} // namespace pidrag
