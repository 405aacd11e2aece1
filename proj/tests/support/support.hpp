#pragma once

#include "pidrag/graph/property_graph.hpp"
#include "pidrag/service/service.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <thread>

#include <string>
#include <vector>

namespace pidrag::testing {

/// Directory holding the committed fixtures (set by CMake).
std::string fixture_path(const std::string& relative);
std::string read_fixture(const std::string& relative);

/// Random but well-formed DEXPI document: tagged and untagged equipment with nozzles, piping
/// segments between nozzles with inline valves and fittings, forks and the odd recycle line.
std::string synthetic_dexpi(unsigned seed, int equipment_count = 6);

/// BFS oracle: every pair of nodes present in both graphs must agree on send_to reachability.
/// On failure returns false and describes the first mismatch in why.
bool flow_reachability_preserved(const graph::PropertyGraph& complete, const graph::PropertyGraph& condensed,
                                 std::string* why = nullptr);

/// Items a DEXPI document should yield, counted on the raw text with regular expressions:
/// ComponentClass elements outside the shape catalogue (minus labels and metadata), process
/// nodes, and the centre lines of piping segments.
/// Text of every <name ...>...</name> element; assumes such elements do not nest.
std::vector<std::string> element_blocks(const std::string& xml, const std::string& name);

std::size_t grep_item_count(const std::string& xml);

/// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

/// A Service mounted on an httplib server listening on an ephemeral local port.
class LiveService {
public:
    explicit LiveService(service::ServiceConfig config);
    ~LiveService();

    service::Service& service() { return *service_; }
    int port() const { return port_; }
    httplib::Client client(const std::string& bearer = {}) const;

private:
    std::unique_ptr<service::Service> service_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

/// Decodes a complete text/event-stream body into its JSON data payloads.
std::vector<nlohmann::json> sse_events(const std::string& body);

/// Concatenated "token" texts of an event list.
std::string sse_text(const std::vector<nlohmann::json>& events);

} // namespace pidrag::testing
