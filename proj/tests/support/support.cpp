#include "support.hpp"

#include "pidrag/pipeline.hpp"
#include "pidrag/rag/chat.hpp"
#include "pidrag/rag/provider.hpp"

#include <deque>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#ifndef PIDRAG_FIXTURE_DIR
#error "PIDRAG_FIXTURE_DIR must be defined"
#endif

namespace pidrag::testing {

std::string fixture_path(const std::string& relative) { return std::string(PIDRAG_FIXTURE_DIR) + "/" + relative; }

std::string read_fixture(const std::string& relative) { return read_file(fixture_path(relative)); }

namespace {

struct Writer {
    std::ostringstream out;
    int next_node = 1;
    int next_line = 1;
    int next_component = 1;

    void tag_attribute(const std::string& name, const std::string& value) {
        out << "<GenericAttributes Set=\"DexpiAttributes\"><GenericAttribute Name=\"" << name
            << "\" Format=\"string\" Value=\"" << value << "\"/></GenericAttributes>\n";
    }

    void center_line() {
        out << "<CenterLine NumPoints=\"2\"><Coordinate X=\"" << next_line << "\" Y=\"0\"/><Coordinate X=\""
            << next_line + 1 << "\" Y=\"0\"/></CenterLine>\n";
        ++next_line;
    }
};

} // namespace

std::string synthetic_dexpi(unsigned seed, int equipment_count) {
    std::mt19937 rng(seed);
    auto chance = [&](double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    static const char* equipment_classes[] = {"Tank", "CentrifugalPump", "PlateHeatExchanger", "Vessel"};
    static const char* inline_classes[] = {"GlobeValve", "BallValve", "SwingCheckValve", "ButterflyValve",
                                           "PipeReducer"};

    Writer w;
    w.out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<PlantModel>\n"
          << "<PlantInformation Application=\"Dexpi\" SchemaVersion=\"4.1.1\" OriginatingSystem=\"synthetic\" "
             "Units=\"mm\"/>\n";

    const int n = std::max(2, equipment_count);
    std::vector<std::vector<std::string>> outlets(n);
    std::vector<std::string> inlets(n);
    for (int i = 0; i < n; ++i) {
        const std::string id = "Equipment-" + std::to_string(i + 1);
        w.out << "<Equipment ID=\"" << id << "\" ComponentClass=\"" << equipment_classes[pick(0, 3)] << "\">\n";
        if (chance(0.7)) w.tag_attribute("TagNameAssignmentClass", "E" + std::to_string(100 + i));
        auto nozzle = [&](const std::string& nid) {
            w.out << "<Nozzle ID=\"" << nid << "\" ComponentClass=\"Nozzle\"><ConnectionPoints NumPoints=\"2\">"
                  << "<Node ID=\"" << nid << "-DefaultNode\"/><Node Type=\"process\" ID=\"PipingNode-"
                  << w.next_node++ << "\"/></ConnectionPoints></Nozzle>\n";
        };
        if (i > 0) {
            inlets[i] = id + "-in";
            nozzle(inlets[i]);
        }
        const int outs = i + 1 < n ? pick(1, 2) : 0;
        for (int k = 0; k < outs; ++k) {
            outlets[i].push_back(id + "-out" + std::to_string(k + 1));
            nozzle(outlets[i].back());
        }
        w.out << "</Equipment>\n";
    }

    int segment = 1;
    for (int i = 0; i < n; ++i) {
        for (const auto& from : outlets[i]) {
            int j = pick(i + 1, n - 1);
            if (i > 0 && chance(0.15)) j = pick(1, i); // recycle
            const std::string sys = std::to_string(segment);
            w.out << "<PipingNetworkSystem ID=\"PipingNetworkSystem-" << sys
                  << "\" ComponentClass=\"PipingNetworkSystem\">\n"
                  << "<PipingNetworkSegment ID=\"PipingNetworkSegment-" << sys
                  << "\" ComponentClass=\"PipingNetworkSegment\">\n";
            w.center_line();
            const int components = pick(0, 3);
            for (int c = 0; c < components; ++c) {
                const std::string cls = inline_classes[pick(0, 4)];
                const auto cid = cls + "-" + std::to_string(w.next_component++);
                w.out << "<PipingComponent ID=\"" << cid << "\" ComponentClass=\"" << cls << "\">\n"
                      << "<ConnectionPoints FlowIn=\"1\" FlowOut=\"2\" NumPoints=\"3\"><Node ID=\"" << cid
                      << "-DefaultNode\"/><Node Type=\"process\" ID=\"PipingNode-" << w.next_node++
                      << "\"/><Node Type=\"process\" ID=\"PipingNode-" << w.next_node++
                      << "\"/></ConnectionPoints>\n";
                if (chance(0.5)) w.tag_attribute("PipingComponentNumberAssignmentClass", "C" + std::to_string(c + 1));
                w.out << "</PipingComponent>\n";
                w.center_line();
            }
            w.out << "<Connection FromID=\"" << from << "\" FromNode=\"1\" ToID=\"" << inlets[j]
                  << "\" ToNode=\"1\"/>\n</PipingNetworkSegment>\n</PipingNetworkSystem>\n";
            ++segment;
        }
    }
    w.out << "</PlantModel>\n";
    return w.out.str();
}

namespace {

std::map<std::string, std::set<std::string>> flow_closure(const graph::PropertyGraph& g) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& e : g.edges()) {
        if (e.type == "send_to") adj[e.source].push_back(e.target);
    }
    std::map<std::string, std::set<std::string>> reach;
    for (const auto& [id, node] : g.nodes()) {
        auto& seen = reach[id];
        std::deque<std::string> queue{id};
        while (!queue.empty()) {
            const auto cur = queue.front();
            queue.pop_front();
            for (const auto& next : adj[cur]) {
                if (seen.insert(next).second) queue.push_back(next);
            }
        }
    }
    return reach;
}

} // namespace

bool flow_reachability_preserved(const graph::PropertyGraph& complete, const graph::PropertyGraph& condensed,
                                 std::string* why) {
    const auto before = flow_closure(complete);
    const auto after = flow_closure(condensed);
    for (const auto& [a, node_a] : condensed.nodes()) {
        if (!complete.contains(a)) continue;
        for (const auto& [b, node_b] : condensed.nodes()) {
            if (a == b || !complete.contains(b)) continue;
            const bool was = before.at(a).count(b) > 0;
            const bool is = after.at(a).count(b) > 0;
            if (was != is) {
                if (why) *why = a + " -> " + b + (was ? " lost" : " invented");
                return false;
            }
        }
    }
    return true;
}

std::vector<std::string> element_blocks(const std::string& text, const std::string& name) {
    std::vector<std::string> out;
    const std::string open = "<" + name, close = "</" + name + ">";
    std::size_t pos = 0;
    while ((pos = text.find(open, pos)) != std::string::npos) {
        const auto end = text.find(close, pos);
        if (end == std::string::npos) break;
        out.push_back(text.substr(pos, end - pos));
        pos = end + close.size();
    }
    return out;
}

namespace {

std::size_t count_matches(const std::string& s, const std::regex& re) {
    return static_cast<std::size_t>(
        std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator()));
}

} // namespace

std::size_t grep_item_count(const std::string& xml) {
    static const std::regex component(R"(<(\w+)\s[^>]*ComponentClass=")");
    static const std::regex process_node(R"(<Node\s[^>]*Type="process")");
    static const std::regex center_line(R"(<CenterLine\b)");
    static const std::set<std::string> skipped{"Label", "MetaData", "Drawing", "ShapeCatalogue", "PlantInformation"};

    std::string text = xml;
    const auto cat = text.find("<ShapeCatalogue");
    if (cat != std::string::npos) {
        const auto end = text.find("</ShapeCatalogue>", cat);
        text.erase(cat, end == std::string::npos ? std::string::npos : end - cat);
    }
    std::size_t n = 0;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), component); it != std::sregex_iterator(); ++it) {
        if (!skipped.count((*it)[1].str())) ++n;
    }
    n += count_matches(text, process_node);
    for (const auto& seg : element_blocks(text, "PipingNetworkSegment")) n += count_matches(seg, center_line);
    return n;
}

TempDir::TempDir() {
    path = std::filesystem::temp_directory_path() / ("pidrag-test-" + rag::random_id());
    std::filesystem::create_directories(path);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
}

LiveService::LiveService(service::ServiceConfig config)
    : service_(std::make_unique<service::Service>(std::move(config))) {
    service_->mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
}

LiveService::~LiveService() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
}

httplib::Client LiveService::client(const std::string& bearer) const {
    httplib::Client cli("127.0.0.1", port_);
    cli.set_read_timeout(30);
    if (!bearer.empty()) cli.set_bearer_token_auth(bearer);
    return cli;
}

std::vector<nlohmann::json> sse_events(const std::string& body) {
    std::vector<nlohmann::json> out;
    rag::SseDecoder decoder([&](const std::string&, const std::string& data) { out.push_back(nlohmann::json::parse(data)); });
    decoder.feed(body);
    decoder.finish();
    return out;
}

std::string sse_text(const std::vector<nlohmann::json>& events) {
    std::string out;
    for (const auto& e : events) {
        if (e.value("type", "") == "token") out += e.value("text", "");
    }
    return out;
}

} // namespace pidrag::testing
