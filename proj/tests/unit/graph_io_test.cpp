#include "support.hpp"

#include "pidrag/dexpi/parser.hpp"
#include "pidrag/error.hpp"
#include "pidrag/graph/builder.hpp"
#include "pidrag/graph/condenser.hpp"
#include "pidrag/graph/graph_io.hpp"

#include <doctest.h>

using namespace pidrag;
using pidrag::testing::read_fixture;

namespace {

const char* kFixtures[] = {"dexpi/minimal_tank.xml", "dexpi/pump_fragment.xml", "dexpi/tank_pump_loop.xml",
                           "dexpi/unknown_class.xml", "dexpi/unresolved_reference.xml",
                           "dexpi/C01V04-VER.EX01.xml"};

} // namespace

TEST_CASE("GraphML round trip is isomorphic on every fixture, both levels") {
    for (const char* name : kFixtures) {
        CAPTURE(name);
        const auto g = graph::build_graph(dexpi::parse_dexpi(read_fixture(name)));
        const auto high = graph::condense(g).graph;
        for (const auto* variant : {&g, &high}) {
            const auto text = graph::export_graphml(*variant);
            const auto back = graph::import_graphml(text);
            CHECK(back == *variant);
            CHECK(graph::export_graphml(back) == text);
            CHECK(graph::import_json(graph::export_json(*variant)) == *variant);
        }
    }
}

TEST_CASE("export is byte-identical across runs and insertion orders") {
    const auto xml = read_fixture("dexpi/C01V04-VER.EX01.xml");
    const auto a = graph::build_graph(dexpi::parse_dexpi(xml));
    const auto b = graph::build_graph(dexpi::parse_dexpi(xml));
    CHECK(graph::export_graphml(a) == graph::export_graphml(b));

    graph::PropertyGraph reversed;
    std::vector<graph::GraphNode> nodes;
    for (const auto& [id, n] : a.nodes()) nodes.push_back(n);
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) reversed.add_node(*it);
    for (auto it = a.edges().rbegin(); it != a.edges().rend(); ++it) reversed.add_edge(*it);
    CHECK(graph::export_graphml(reversed) == graph::export_graphml(a));
    CHECK(graph::export_json(reversed) == graph::export_json(a));
}

TEST_CASE("typed scalars keep their type") {
    graph::PropertyGraph g;
    g.add_node({"n", {"equipment", "tank"},
                {{"tagName", std::string("T1")}, {"volume", 12.5}, {"insulated", true}, {"code", std::string("007")}}});
    const auto back = graph::import_graphml(graph::export_graphml(g));
    const auto& p = back.node("n")->properties;
    CHECK(std::holds_alternative<double>(p.at("volume")));
    CHECK(std::holds_alternative<bool>(p.at("insulated")));
    CHECK(std::get<std::string>(p.at("code")) == "007");
}

TEST_CASE("characters XML cannot carry are refused") {
    graph::PropertyGraph g;
    g.add_node({"n", {"equipment"}, {{"note", std::string("bell\x07")}}});
    CHECK_THROWS_AS(graph::export_graphml(g), SerializationError);
}

TEST_CASE("import rejects unknown keys and garbage") {
    CHECK_THROWS_AS(graph::import_graphml("<graphml><graph><node id=\"a\"><data key=\"nope\">x</data></node>"
                                          "</graph></graphml>"),
                    ImportError);
    CHECK_THROWS(graph::import_graphml("not xml"));
    CHECK_THROWS_AS(graph::import_json("{\"nodes\":[{\"id\":1}]}"), ImportError);
}

TEST_CASE("token estimates") {
    const auto e = graph::estimate_tokens("abcdefghi");
    CHECK(e.char_count == 9);
    CHECK(e.token_count == 3);
    CHECK(e.method == graph::TokenEstimate::Method::heuristic);
    CHECK(graph::estimate_tokens("").token_count == 0);
    const auto tok = graph::make_tokenizer("pretokenize");
    REQUIRE(tok);
    const auto t = graph::estimate_tokens("<node id=\"P4711\"/>", tok.get());
    CHECK(t.method == graph::TokenEstimate::Method::exact_tokenizer);
    CHECK(t.token_count == tok->count("<node id=\"P4711\"/>"));
    CHECK(graph::make_tokenizer("heuristic") == nullptr);
    CHECK_THROWS_AS(graph::make_tokenizer("gpt-7"), ConfigError);
}
