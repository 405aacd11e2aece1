#include "pidrag/service/service.hpp"

#include "pidrag/error.hpp"
#include "pidrag/graph/graph_io.hpp"
#include "pidrag/rag/chat.hpp"

#include <httplib.h>

namespace pidrag::service {

using nlohmann::json;

struct Service::LiveSession {
    std::mutex mu; ///< guards rec.chat.history and persistence
    SessionRecord rec;
};

namespace {

HttpError http_error(int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    return {status, std::move(extra)};
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const HttpError& e) {
            send_json(res, e.status, e.body);
        } catch (const json::exception& e) {
            send_json(res, 400, {{"error", std::string("bad request body: ") + e.what()}});
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", e.what()}});
        }
    };
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) throw http_error(400, "request body is empty");
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw http_error(400, std::string("request body is not JSON: ") + e.what());
    }
}

eval::GraphLevel parse_level(const std::string& s) {
    try {
        return eval::level_from_string(s);
    } catch (const ConfigError& e) {
        throw http_error(400, e.what());
    }
}

std::string sse(const json& event) { return "data: " + event.dump() + "\n\n"; }

} // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)) {
    if (!config_.factory) config_.factory = rag::make_provider;
    store_ = std::make_unique<Store>(config_.store_dir, config_.policy);
    for (auto& rec : store_->load_sessions()) {
        auto live = std::make_shared<LiveSession>();
        live->rec = std::move(rec);
        sessions_.emplace(live->rec.session_id, std::move(live));
    }
}

Service::~Service() = default;

json Service::upload(const std::string& filename, const std::string& body, bool strict) {
    if (body.empty()) throw http_error(400, "upload is empty");
    if (body.size() > config_.max_upload_bytes) {
        throw http_error(413, "upload exceeds " + std::to_string(config_.max_upload_bytes) + " bytes");
    }
    try {
        return store_->add_model(filename, body, strict)->summary();
    } catch (const ParseError& e) {
        json diag{{"severity", "error"}, {"item_id", ""}, {"message", e.what()}};
        if (e.line() > 0) {
            diag["line"] = e.line();
            diag["column"] = e.column();
        }
        throw http_error(422, "document could not be parsed", {{"diagnostics", json::array({diag})}});
    } catch (const BuildError& e) {
        json diag{{"severity", "error"}, {"item_id", ""}, {"message", e.what()}};
        throw http_error(422, "graph could not be built", {{"diagnostics", json::array({diag})}});
    }
}

rag::ProviderSpec Service::provider_for(const json& request) const {
    const auto name = request.value("provider", "");
    if (name.empty()) throw http_error(400, "provider is required");
    std::string endpoint = request.value("endpoint", request.value("script", ""));
    if (name == "scripted") {
        if (config_.script_dir.empty()) throw http_error(400, "scripted provider is disabled on this server");
        const std::filesystem::path rel(endpoint);
        if (endpoint.empty() || rel.is_absolute() || endpoint.find("..") != std::string::npos) {
            throw http_error(400, "scripted provider needs a script name inside the script directory");
        }
        endpoint = (config_.script_dir / rel).string();
    } else if (name != "local" && !endpoint.empty()) {
        // keys are only ever sent to the provider's own endpoint
        throw http_error(400, "endpoint override is only allowed for the local provider");
    }
    try {
        return rag::ProviderSpec::resolve(name, request.value("model", ""), endpoint);
    } catch (const ConfigError& e) {
        throw http_error(400, e.what());
    }
}

json Service::create_session(const json& request) {
    const auto model_id = request.value("model_id", "");
    if (model_id.empty()) throw http_error(400, "model_id is required");
    const auto level = parse_level(request.value("level", "high"));
    auto spec = provider_for(request);
    auto model = store_->find_model(model_id);
    if (!model) throw http_error(404, "no model '" + model_id + "'");

    const auto budget = request.value("token_budget", config_.token_budget);
    auto live = std::make_shared<LiveSession>();
    try {
        live->rec.chat = rag::new_session(model->graph(level), rag::default_system_template(), budget);
    } catch (const BudgetError& e) {
        throw http_error(422, e.what());
    }
    live->rec.session_id = live->rec.chat.id;
    live->rec.model_id = model_id;
    live->rec.level = level;
    live->rec.provider = std::move(spec);
    live->rec.created_at = rag::utc_timestamp();
    store_->save_session(live->rec);

    std::lock_guard lock(mu_);
    sessions_[live->rec.session_id] = live;
    return live->rec.summary();
}

std::shared_ptr<Service::LiveSession> Service::find_session(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw http_error(404, "no session '" + id + "'");
    return it->second;
}

json Service::session_summary(const std::string& session_id) {
    auto live = find_session(session_id);
    std::lock_guard lock(live->mu);
    return live->rec.summary();
}

void Service::mount(httplib::Server& server) {
    server.set_payload_max_length(config_.max_upload_bytes + (1u << 20));

    if (!config_.bearer_token.empty()) {
        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            if (req.path.rfind("/api/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
            if (req.get_header_value("Authorization") == "Bearer " + config_.bearer_token) {
                return httplib::Server::HandlerResponse::Unhandled;
            }
            send_json(res, 401, {{"error", "missing or wrong bearer token"}});
            return httplib::Server::HandlerResponse::Handled;
        });
    }

    server.Post("/api/models", guarded([this](const httplib::Request& req, httplib::Response& res) {
        std::string filename = req.get_param_value("filename");
        std::string body;
        if (req.is_multipart_form_data()) {
            if (req.files.empty()) throw http_error(400, "multipart upload has no file part");
            const auto& part = req.has_file("file") ? req.get_file_value("file") : req.files.begin()->second;
            body = part.content;
            if (!part.filename.empty()) filename = part.filename;
        } else {
            body = req.body;
        }
        const bool strict = req.get_param_value("strict") == "true";
        send_json(res, 200, upload(filename.empty() ? "upload.xml" : filename, body, strict));
    }));

    server.Get("/api/models", guarded([this](const httplib::Request&, httplib::Response& res) {
        json arr = json::array();
        for (const auto& m : store_->models()) arr.push_back(m->summary());
        send_json(res, 200, {{"models", arr}});
    }));

    server.Get(R"(/api/models/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto m = store_->find_model(req.matches[1]);
        if (!m) throw http_error(404, "no model '" + std::string(req.matches[1]) + "'");
        send_json(res, 200, m->summary());
    }));

    server.Get(R"(/api/models/([^/]+)/graph)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto m = store_->find_model(req.matches[1]);
        if (!m) throw http_error(404, "no model '" + std::string(req.matches[1]) + "'");
        const auto level = parse_level(req.has_param("level") ? req.get_param_value("level") : "high");
        const auto format = req.has_param("format") ? req.get_param_value("format") : "json";
        res.status = 200;
        if (format == "graphml") {
            res.set_content(m->graphml(level), "application/graphml+xml");
        } else if (format == "json") {
            res.set_content(graph::export_json(m->graph(level)), "application/json");
        } else {
            throw http_error(400, "unknown format '" + format + "' (expected json or graphml)");
        }
    }));

    server.Get(R"(/api/models/([^/]+)/condensation-report)",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                   auto m = store_->find_model(req.matches[1]);
                   if (!m) throw http_error(404, "no model '" + std::string(req.matches[1]) + "'");
                   auto doc = m->report.to_json();
                   doc["policy"] = store_->policy().to_json();
                   doc["policy_fingerprint"] = m->policy_fingerprint;
                   send_json(res, 200, doc);
               }));

    server.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, create_session(parse_body(req)));
    }));

    server.Get(R"(/api/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, session_summary(req.matches[1]));
    }));

    server.Post(R"(/api/sessions/([^/]+)/messages)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                    const auto body = parse_body(req);
                    const auto question = body.value("question", "");
                    if (question.empty()) throw http_error(400, "question must not be empty");
                    auto live = find_session(req.matches[1]);

                    // released before the final event so a client may ask again right away
                    auto claim = std::make_shared<std::unique_ptr<rag::InFlightGuard>>();
                    try {
                        *claim = std::make_unique<rag::InFlightGuard>(live->rec.chat);
                    } catch (const BusyError& e) {
                        throw http_error(409, e.what());
                    }

                    auto work = std::make_shared<rag::ChatSession>();
                    {
                        std::lock_guard lock(live->mu);
                        const auto& c = live->rec.chat;
                        work->id = c.id;
                        work->system_prompt = c.system_prompt;
                        work->graph_context = c.graph_context;
                        work->history = c.history;
                        work->token_budget = c.token_budget;
                    }

                    res.set_header("Cache-Control", "no-cache");
                    res.set_header("X-Accel-Buffering", "no");
                    res.set_chunked_content_provider(
                        "text/event-stream",
                        [this, live, work, claim, question](std::size_t, httplib::DataSink& sink) {
                            auto emit = [&](const json& ev) {
                                const auto s = sse(ev);
                                sink.write(s.data(), s.size());
                            };
                            try {
                                auto provider = config_.factory(live->rec.provider);
                                rag::ask(*work, question, *provider, [&](std::string_view chunk) {
                                    emit({{"type", "token"}, {"text", std::string(chunk)}});
                                });
                                {
                                    std::lock_guard lock(live->mu);
                                    live->rec.chat.history = work->history;
                                    store_->save_session(live->rec);
                                }
                                claim->reset();
                                emit({{"type", "done"}});
                            } catch (const AuthError& e) {
                                claim->reset();
                                emit({{"type", "error"},
                                      {"kind", "auth"},
                                      {"credential", e.credential_ref()},
                                      {"message", e.what()}});
                            } catch (const std::exception& e) {
                                claim->reset();
                                emit({{"type", "error"}, {"kind", "provider"}, {"message", e.what()}});
                            }
                            sink.done();
                            return true;
                        },
                        [claim](bool) { claim->reset(); });
                }));

    if (!config_.static_dir.empty()) server.set_mount_point("/", config_.static_dir.string());
}

} // namespace pidrag::service
