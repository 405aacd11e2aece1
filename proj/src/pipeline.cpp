#include "pidrag/pipeline.hpp"

#include "pidrag/dexpi/parser.hpp"
#include "pidrag/error.hpp"
#include "pidrag/graph/builder.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace pidrag {

Pipeline run_pipeline(std::string_view xml, bool strict, const graph::CondensationPolicy& policy) {
    Pipeline p;
    p.model = dexpi::parse_dexpi(xml, {strict});
    graph::BuildOptions opts;
    opts.strict = strict;
    std::vector<dexpi::Diagnostic> diags;
    p.complete = graph::build_graph(p.model, opts, &diags);
    for (auto& d : diags) {
        if (std::find(p.model.diagnostics.begin(), p.model.diagnostics.end(), d) == p.model.diagnostics.end()) {
            p.model.diagnostics.push_back(std::move(d));
        }
    }
    auto condensed = graph::condense(p.complete, policy);
    p.high = std::move(condensed.graph);
    p.report = std::move(condensed.report);
    return p;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    static std::atomic<unsigned> seq{0};
    const auto tmp = target.string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(seq++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error("short write to '" + tmp + "'");
    }
    fs::rename(tmp, target);
}

} // namespace pidrag
