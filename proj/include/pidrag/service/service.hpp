#pragma once

#include "pidrag/eval/eval.hpp"
#include "pidrag/graph/condenser.hpp"
#include "pidrag/rag/provider.hpp"
#include "pidrag/service/store.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace pidrag::service {

struct ServiceConfig {
    std::filesystem::path store_dir = "pidrag-store";
    std::size_t max_upload_bytes = 32u << 20;
    /// When set, every /api request needs "Authorization: Bearer <token>".
    std::string bearer_token;
    /// Served under "/" when set (the browser client's build output).
    std::filesystem::path static_dir;
    /// Directory the scripted provider may read scripts from; empty disables it.
    std::filesystem::path script_dir;
    std::size_t token_budget = 200000;
    graph::CondensationPolicy policy = graph::CondensationPolicy::defaults();
    eval::ProviderFactory factory; ///< defaults to rag::make_provider
};

/// A JSON error body with an HTTP status.
struct HttpError {
    int status = 500;
    nlohmann::json body;
};

class Service {
public:
    explicit Service(ServiceConfig config);
    ~Service();

    /// Registers the routes, static mount and bearer check on server.
    void mount(httplib::Server& server);

    Store& store() { return *store_; }
    const ServiceConfig& config() const { return config_; }

    // Request-independent operations; they throw HttpError.
    nlohmann::json upload(const std::string& filename, const std::string& body, bool strict);
    nlohmann::json create_session(const nlohmann::json& request);
    nlohmann::json session_summary(const std::string& session_id);

private:
    struct LiveSession;
    std::shared_ptr<LiveSession> find_session(const std::string& id);
    rag::ProviderSpec provider_for(const nlohmann::json& request) const;

    ServiceConfig config_;
    std::unique_ptr<Store> store_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
};

} // namespace pidrag::service
