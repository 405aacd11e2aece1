#include "pidrag/service/store.hpp"

#include "pidrag/dexpi/parser.hpp"
#include "pidrag/error.hpp"
#include "pidrag/graph/graph_io.hpp"
#include "pidrag/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>

namespace pidrag::service {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string& ModelRecord::graphml(eval::GraphLevel level) const {
    return level == eval::GraphLevel::complete ? complete_graphml : high_graphml;
}

const graph::PropertyGraph& ModelRecord::graph(eval::GraphLevel level) const {
    return level == eval::GraphLevel::complete ? complete : high;
}

json ModelRecord::summary() const {
    return {{"model_id", model_id},
            {"filename", filename},
            {"uploaded_at", uploaded_at},
            {"metadata", metadata},
            {"diagnostics", diagnostics},
            {"policy_fingerprint", policy_fingerprint},
            {"counts",
             {{"complete",
               {{"nodes", complete.node_count()},
                {"edges", complete.edge_count()},
                {"tokens", report.tokens_before}}},
              {"high", {{"nodes", high.node_count()}, {"edges", high.edge_count()}, {"tokens", report.tokens_after}}}}}};
}

json SessionRecord::to_json() const {
    return {{"session_id", session_id},
            {"model_id", model_id},
            {"level", eval::to_string(level)},
            {"provider", provider.to_json()},
            {"created_at", created_at},
            {"chat", chat.to_json()}};
}

SessionRecord SessionRecord::from_json(const json& doc) {
    SessionRecord s;
    s.session_id = doc.at("session_id").get<std::string>();
    s.model_id = doc.at("model_id").get<std::string>();
    s.level = eval::level_from_string(doc.at("level").get<std::string>());
    s.provider = rag::ProviderSpec::from_json(doc.at("provider"));
    s.created_at = doc.value("created_at", "");
    s.chat = rag::ChatSession::from_json(doc.at("chat"));
    return s;
}

json SessionRecord::summary() const {
    json hist = json::array();
    for (const auto& m : chat.history) hist.push_back(rag::to_json(m));
    return {{"session_id", session_id},
            {"model_id", model_id},
            {"level", eval::to_string(level)},
            {"provider", provider.to_json()},
            {"created_at", created_at},
            {"token_budget", chat.token_budget},
            {"in_flight", chat.in_flight()},
            {"history", hist}};
}

std::string content_id(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < 8 && i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

Store::Store(fs::path root, graph::CondensationPolicy policy)
    : root_(std::move(root)), policy_(std::move(policy)), fingerprint_(policy_.fingerprint()) {
    policy_.check();
    fs::create_directories(root_);
    for (const auto& entry : fs::directory_iterator(root_)) {
        if (!entry.is_directory() || !fs::exists(entry.path() / "model.json")) continue;
        auto rec = load(entry.path());
        models_.emplace(rec->model_id, std::move(rec));
    }
}

std::shared_ptr<ModelRecord> Store::build(const std::string& model_id, const std::string& filename,
                                          const std::string& uploaded_at, std::string_view xml, bool strict) const {
    auto p = run_pipeline(xml, strict, policy_);
    auto rec = std::make_shared<ModelRecord>();
    rec->model_id = model_id;
    rec->filename = filename;
    rec->uploaded_at = uploaded_at;
    rec->policy_fingerprint = fingerprint_;
    rec->metadata = p.model.metadata;
    rec->metadata["strict"] = strict;
    rec->diagnostics = dexpi::diagnostics_to_json(p.model.diagnostics);
    rec->complete_graphml = graph::export_graphml(p.complete);
    rec->high_graphml = graph::export_graphml(p.high);
    rec->complete = std::move(p.complete);
    rec->high = std::move(p.high);
    rec->report = std::move(p.report);
    return rec;
}

void Store::persist(const ModelRecord& rec, std::string_view xml) const {
    const auto dir = root_ / rec.model_id;
    fs::create_directories(dir / "sessions");
    if (!xml.empty()) write_file_atomic((dir / "source.xml").string(), xml);
    write_file_atomic((dir / "complete.graphml").string(), rec.complete_graphml);
    write_file_atomic((dir / "high.graphml").string(), rec.high_graphml);
    write_file_atomic((dir / "report.json").string(), rec.report.to_json().dump(2));
    json meta{{"model_id", rec.model_id},
              {"filename", rec.filename},
              {"uploaded_at", rec.uploaded_at},
              {"policy_fingerprint", rec.policy_fingerprint},
              {"metadata", rec.metadata},
              {"diagnostics", rec.diagnostics}};
    // written last: a directory without model.json is an interrupted upload and is ignored
    write_file_atomic((dir / "model.json").string(), meta.dump(2));
}

std::shared_ptr<ModelRecord> Store::load(const fs::path& dir) {
    const auto meta = json::parse(read_file((dir / "model.json").string()));
    const auto id = meta.at("model_id").get<std::string>();
    const bool stale = meta.value("policy_fingerprint", "") != fingerprint_ ||
                       !fs::exists(dir / "complete.graphml") || !fs::exists(dir / "high.graphml") ||
                       !fs::exists(dir / "report.json");
    if (stale) {
        const auto xml = read_file((dir / "source.xml").string());
        const bool strict = meta.value("metadata", json::object()).value("strict", false);
        auto rec = build(id, meta.value("filename", ""), meta.value("uploaded_at", ""), xml, strict);
        persist(*rec, {});
        regenerated_.push_back(id);
        return rec;
    }
    auto rec = std::make_shared<ModelRecord>();
    rec->model_id = id;
    rec->filename = meta.value("filename", "");
    rec->uploaded_at = meta.value("uploaded_at", "");
    rec->policy_fingerprint = meta.value("policy_fingerprint", "");
    rec->metadata = meta.value("metadata", json::object());
    rec->diagnostics = meta.value("diagnostics", json::array());
    rec->complete_graphml = read_file((dir / "complete.graphml").string());
    rec->high_graphml = read_file((dir / "high.graphml").string());
    rec->complete = graph::import_graphml(rec->complete_graphml);
    rec->high = graph::import_graphml(rec->high_graphml);
    rec->report = graph::CondensationReport::from_json(json::parse(read_file((dir / "report.json").string())));
    return rec;
}

std::shared_ptr<const ModelRecord> Store::add_model(const std::string& filename, std::string_view xml, bool strict) {
    const auto id = content_id(xml);
    if (auto existing = find_model(id)) return existing;
    auto rec = build(id, filename, rag::utc_timestamp(), xml, strict);
    std::lock_guard lock(mu_);
    auto it = models_.find(id);
    if (it != models_.end()) return it->second;
    persist(*rec, xml);
    models_.emplace(id, rec);
    return rec;
}

std::shared_ptr<const ModelRecord> Store::find_model(const std::string& model_id) const {
    std::lock_guard lock(mu_);
    auto it = models_.find(model_id);
    return it == models_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<const ModelRecord>> Store::models() const {
    std::lock_guard lock(mu_);
    std::vector<std::shared_ptr<const ModelRecord>> out;
    for (const auto& [id, rec] : models_) out.push_back(rec);
    return out;
}

void Store::save_session(const SessionRecord& session) const {
    const auto path = root_ / session.model_id / "sessions" / (session.session_id + ".json");
    write_file_atomic(path.string(), session.to_json().dump());
}

std::vector<SessionRecord> Store::load_sessions() const {
    std::vector<SessionRecord> out;
    for (const auto& rec : models()) {
        const auto dir = root_ / rec->model_id / "sessions";
        if (!fs::exists(dir)) continue;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) out.push_back(SessionRecord::from_json(json::parse(read_file(f.string()))));
    }
    return out;
}

} // namespace pidrag::service
