#include "support.hpp"

#include "pidrag/dexpi/parser.hpp"
#include "pidrag/error.hpp"
#include "pidrag/graph/builder.hpp"
#include "pidrag/pipeline.hpp"

#include <doctest.h>

#include <deque>
#include <regex>

using namespace pidrag;
using pidrag::testing::read_fixture;

namespace {

bool flow_path(const graph::PropertyGraph& g, const std::string& from, const std::string& to) {
    std::set<std::string> seen{from};
    std::deque<std::string> queue{from};
    while (!queue.empty()) {
        const auto cur = queue.front();
        queue.pop_front();
        if (cur == to) return true;
        for (const auto& e : g.edges()) {
            if (e.type == "send_to" && e.source == cur && seen.insert(e.target).second) queue.push_back(e.target);
        }
    }
    return false;
}

bool has_edge(const graph::PropertyGraph& g, const std::string& s, const std::string& t, const std::string& type) {
    for (const auto& e : g.edges()) {
        if (e.source == s && e.target == t && e.type == type) return true;
    }
    return false;
}

} // namespace

TEST_CASE("labels follow the class hierarchy") {
    const auto& tax = dexpi::Taxonomy::builtin();
    dexpi::PlantItem valve;
    valve.class_name = "GlobeValve";
    valve.package = dexpi::Package::piping;
    const auto labels = graph::derive_labels(valve, tax);
    REQUIRE(labels.size() >= 3);
    CHECK(labels.front() == "piping");
    CHECK(labels.back() == "globeValve");
    CHECK(std::find(labels.begin(), labels.end(), "valve") != labels.end());

    dexpi::PlantItem odd;
    odd.class_name = "FooWidget";
    CHECK(graph::derive_labels(odd, tax) == std::vector<std::string>{"equipment", "fooWidget"});
}

TEST_CASE("properties: tag, lossless numbers and units") {
    const auto model = dexpi::parse_dexpi(read_fixture("dexpi/pump_fragment.xml"));
    const auto g = graph::build_graph(model);
    const auto* pump = g.node("ReciprocatingPump-1");
    REQUIRE(pump);
    REQUIRE(pump->tag());
    CHECK(*pump->tag() == "P4712");
    CHECK(pump->properties.at("className") == graph::Scalar(std::string("ReciprocatingPump")));
    CHECK(pump->properties.at("designShaftPower") == graph::Scalar(84.0));
    CHECK(pump->properties.at("designShaftPowerUnits") == graph::Scalar(std::string("Kilowatt")));
    CHECK(has_edge(g, "ReciprocatingPump-1", "PumpChamber-1", "has_PumpChamber"));
    CHECK(has_edge(g, "ReciprocatingPump-1", "Nozzle-1", "has_Nozzle"));
}

TEST_CASE("every piping connection yields flow in its stated direction") {
    for (const char* name : {"dexpi/tank_pump_loop.xml", "dexpi/C01V04-VER.EX01.xml"}) {
        CAPTURE(name);
        const auto xml = read_fixture(name);
        const auto g = graph::build_graph(dexpi::parse_dexpi(xml));
        static const std::regex connection(R"re(<Connection\s+FromID="([^"]+)"[^>]*ToID="([^"]+)")re");
        std::size_t checked = 0;
        for (const auto& segment : testing::element_blocks(xml, "PipingNetworkSegment")) {
            for (auto it = std::sregex_iterator(segment.begin(), segment.end(), connection);
                 it != std::sregex_iterator(); ++it) {
                const auto from = (*it)[1].str(), to = (*it)[2].str();
                if (!g.contains(from) || !g.contains(to)) continue;
                CAPTURE(from);
                CAPTURE(to);
                CHECK(flow_path(g, from, to));
                ++checked;
            }
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("tank-pump loop graph") {
    const auto g = graph::build_graph(dexpi::parse_dexpi(read_fixture("dexpi/tank_pump_loop.xml")));
    CHECK(g.node_count() == 31);
    CHECK(g.edge_count() == 46);
    CHECK(flow_path(g, "Tank-1", "ReciprocatingPump-1"));
    CHECK(flow_path(g, "ReciprocatingPump-1", "Tank-2"));
    CHECK_FALSE(flow_path(g, "Tank-2", "Tank-1"));
    // the sensor located in Tank-1 measures it
    CHECK(has_edge(g, "Tank-1", "ProcessSignalGeneratingFunction-1", "measured_by"));
    for (const auto& e : g.edges()) CHECK(graph::is_known_edge_type(e.type));
}

TEST_CASE("reference sample counts") {
    const auto p = run_pipeline(read_fixture("dexpi/C01V04-VER.EX01.xml"));
    CHECK(p.complete.node_count() == 210);
    CHECK(p.complete.edge_count() == 346);
}

TEST_CASE("unknown signal kind is skipped and reported") {
    const auto model = dexpi::model_from_json(nlohmann::json::parse(read_fixture("models/unknown_signal_kind.json")));
    std::vector<dexpi::Diagnostic> diags;
    const auto g = graph::build_graph(model, {}, &diags);
    CHECK(g.node_count() == 2);
    for (const auto& e : g.edges()) CHECK(e.type == "send_to");
    CHECK(g.edge_count() == 0);
    CHECK(diags.size() == 1);
}

TEST_CASE("duplicate ids fail the build, unresolved references only in strict mode") {
    CHECK_THROWS_AS(graph::build_graph(dexpi::parse_dexpi(read_fixture("dexpi/duplicate_id.xml"))), BuildError);
    const auto unresolved = dexpi::parse_dexpi(read_fixture("dexpi/unresolved_reference.xml"));
    CHECK_NOTHROW(graph::build_graph(unresolved));
    graph::BuildOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(graph::build_graph(unresolved, strict), BuildError);
}

TEST_CASE("presentation data can be left out") {
    const auto model = dexpi::parse_dexpi(read_fixture("dexpi/C01V04-VER.EX01.xml"));
    graph::BuildOptions lean;
    lean.include_presentation = false;
    const auto full = graph::build_graph(model);
    const auto slim = graph::build_graph(model, lean);
    CHECK(full.node_count() == slim.node_count());
    std::size_t full_props = 0, slim_props = 0;
    for (const auto& [id, n] : full.nodes()) full_props += n.properties.size();
    for (const auto& [id, n] : slim.nodes()) slim_props += n.properties.size();
    CHECK(slim_props < full_props);
}

TEST_CASE("property graph invariants") {
    graph::PropertyGraph g;
    g.add_node({"a", {"equipment"}, {}});
    CHECK_THROWS_AS(g.add_node({"a", {"equipment"}, {}}), BuildError);
    CHECK_THROWS_AS(g.add_node({"b", {}, {}}), BuildError);
    CHECK_THROWS_AS(g.add_edge({"a", "zz", "send_to", {}}), BuildError);
    g.add_node({"b", {"equipment"}, {}});
    CHECK(g.add_edge_unique({"a", "b", "send_to", {}}));
    CHECK_FALSE(g.add_edge_unique({"a", "b", "send_to", {}}));
    g.remove_node("b");
    CHECK(g.edge_count() == 0);
}
