#include "support.hpp"

#include "pidrag/dexpi/parser.hpp"
#include "pidrag/error.hpp"
#include "pidrag/eval/eval.hpp"
#include "pidrag/graph/builder.hpp"
#include "pidrag/pipeline.hpp"

#include <doctest.h>

using namespace pidrag;
using namespace pidrag::eval;
using pidrag::testing::fixture_path;
using pidrag::testing::read_fixture;

namespace {

const Pipeline& sample() {
    static const Pipeline p = run_pipeline(read_fixture("dexpi/C01V04-VER.EX01.xml"));
    return p;
}

std::vector<std::string> golden_trace() {
    const auto doc = nlohmann::json::parse(read_fixture("golden/trace_reference.json"));
    return doc.at("trace").get<std::vector<std::string>>();
}

} // namespace

TEST_CASE("score_sequence identities") {
    const std::vector<std::string> truth{"A", "B", "C", "D"};
    CHECK(score_sequence(truth, truth) == 1.0);
    CHECK(score_sequence({}, truth) == 0.0);
    CHECK(score_sequence({"B", "A", "C", "D"}, truth) == 0.0);
    CHECK(score_sequence({"A", "B", "D", "C"}, truth) == 0.5);
    CHECK(score_sequence({"A", "B", "C", "D", "E"}, truth) == 1.0);
    CHECK(score_sequence({"A"}, truth) == 0.25);
    CHECK_THROWS_AS(score_sequence(truth, {}), PreconditionError);
}

TEST_CASE("score_recall") {
    CHECK(score_recall({"a", "b"}, {"a", "b"}) == 1.0);
    CHECK(score_recall({"a", "x"}, {"a", "b"}) == 0.5);
    CHECK(score_recall({}, {"a"}) == 0.0);
    CHECK_THROWS_AS(score_recall({"a"}, {}), PreconditionError);
}

TEST_CASE("tag extraction") {
    const std::vector<std::string> known{"P4711", "P4712", "47126-C1", "47126-C10", "SV 104.01", "T4750"};
    CHECK(extract_tags("First p4711, then P4712 and P4711 again.", known) ==
          std::vector<std::string>{"P4711", "P4712"});
    CHECK(extract_tags("valve 47126-C10 then 47126-C1.", known) ==
          std::vector<std::string>{"47126-C10", "47126-C1"});
    CHECK(extract_tags("relief via SV 104.01, back to T4750", known) ==
          std::vector<std::string>{"SV 104.01", "T4750"});
    CHECK(extract_tags("XP4711 and P47111 and P4711-B are different", known).empty());
    CHECK(extract_tags("", known).empty());
}

TEST_CASE("reference flow trace matches the hand-checked golden") {
    const auto& g = sample().high;
    const auto inlets = flow_inlets(g);
    REQUIRE(std::find(inlets.begin(), inlets.end(), "FlowInPipeOffPageConnector-1") != inlets.end());
    const auto trace = trace_flow(g, "FlowInPipeOffPageConnector-1", {"equipment"});
    CHECK(trace == golden_trace());
    const auto truth = GroundTruth::load(fixture_path("golden/trace_reference.json"),
                                         fixture_path("golden/valves_reference.json"));
    CHECK(trace_tags(trace) == std::vector<std::string>{"P4711", "H1007", "T4750", "P4712", "H1008"});
    CHECK(std::vector<std::string>(truth.sequence.begin(), truth.sequence.end()) ==
          std::vector<std::string>{"P4711", "H1007", "T4750", "P4712", "H1008"});
    // same walk on the complete graph
    CHECK(trace_flow(sample().complete, "FlowInPipeOffPageConnector-1", {"equipment"}) == trace);
    CHECK_THROWS_AS(trace_flow(g, "Tank-1", {}), PreconditionError);
    CHECK_THROWS_AS(trace_flow(g, "nope", {}), PreconditionError);
}

TEST_CASE("trace markers on a small graph") {
    graph::PropertyGraph g;
    auto node = [&](const std::string& id, const std::string& tag) {
        g.add_node({id, {"equipment"}, {{"tagName", tag}}});
    };
    node("a", "A");
    node("b", "B");
    node("c", "C");
    node("d", "D");
    g.add_edge({"a", "b", "send_to", {}});
    g.add_edge({"a", "c", "send_to", {}});
    g.add_edge({"b", "d", "send_to", {}});
    g.add_edge({"c", "d", "send_to", {}});
    g.add_edge({"d", "a", "send_to", {}});
    g.add_node({"in", {"piping"}, {}});
    g.add_edge({"in", "a", "send_to", {}});
    CHECK(trace_flow(g, "in", {"equipment"}) ==
          std::vector<std::string>{"A", "{", "B", "D", "loop:A", "|", "C", "join:D", "}"});
    CHECK(flow_inlets(g) == std::vector<std::string>{"in"});
}

TEST_CASE("valves listed from either graph level") {
    const auto truth = GroundTruth::load(fixture_path("golden/trace_reference.json"),
                                         fixture_path("golden/valves_reference.json"));
    for (const auto* g : {&sample().complete, &sample().high}) {
        std::set<std::string> tags;
        for (const auto& n : list_nodes_by_label(*g, "valve")) tags.insert(*n.tag());
        CHECK(tags == truth.valves);
    }
    CHECK(truth.valves.size() == 11);
    const auto listed = list_nodes_by_label(sample().high, "valve");
    for (std::size_t i = 1; i < listed.size(); ++i) CHECK_FALSE(*listed[i].tag() < *listed[i - 1].tag());
}

TEST_CASE("benchmark over canned answers on the reference sample") {
    const auto cases = load_cases(nlohmann::json::parse(read_fixture("cases/sample_canned.json")),
                                  fixture_path("cases"));
    REQUIRE(cases.size() == 8);
    const auto truth = GroundTruth::load(fixture_path("golden/trace_reference.json"),
                                         fixture_path("golden/valves_reference.json"));
    const auto report = run_benchmark(cases, {&sample().complete, &sample().high}, truth);
    REQUIRE(report.results.size() == 8);
    std::map<std::string, const EvalResult*> by;
    for (const auto& r : report.results) by[r.eval_case.name] = &r;

    CHECK(by["expert-q1-high"]->score == std::optional<double>(1.0));
    CHECK(by["expert-q1-complete"]->score == std::optional<double>(1.0));
    CHECK(by["novice-q1-high"]->score == std::optional<double>(0.0));
    CHECK(by["expert-q2-high"]->score == std::optional<double>(1.0));
    CHECK(by["expert-q2-complete"]->score == std::optional<double>(1.0));
    REQUIRE(by["novice-q2-high"]->score);
    CHECK(*by["novice-q2-high"]->score == doctest::Approx(6.0 / 11.0));
    CHECK_FALSE(by["expert-q3-high"]->score);
    CHECK(by["expert-q3-high"]->eval_case.recommendations == std::optional<int>(3));
    CHECK(by["broken-q1-high"]->failed);
    CHECK(by["broken-q1-high"]->notes.find("fault") != std::string::npos);

    const auto csv = report.to_csv();
    CHECK(csv.rfind("case,question_id,level,provider,model,status,score,recommendations,extracted,notes\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    CHECK(report.to_json()["results"].size() == 8);
    CHECK(report.to_table().find("novice-q2-high") != std::string::npos);
}

TEST_CASE("benchmark prefix score of one half") {
    const auto model = dexpi::model_from_json(nlohmann::json::parse(read_fixture("models/four_unit_line.json")));
    const auto g = graph::build_graph(model);
    CHECK(trace_tags(trace_flow(g, "Tank-1", {"equipment"})) == std::vector<std::string>{"T1", "P1", "E1", "T2"});
    const auto truth = GroundTruth::load(fixture_path("golden/four_unit_trace.json"),
                                         fixture_path("golden/four_unit_valves.json"));
    const auto cases = load_cases(nlohmann::json::parse(read_fixture("cases/four_unit_canned.json")),
                                  fixture_path("cases"));
    const auto report = run_benchmark(cases, {&g, &g}, truth);
    REQUIRE(report.results.size() == 1);
    CHECK(report.results[0].extracted == std::vector<std::string>{"T1", "P1", "T2", "E1"});
    CHECK(report.results[0].score == std::optional<double>(0.5));
}

TEST_CASE("shared sessions carry earlier answers") {
    const auto g = graph::build_graph(dexpi::parse_dexpi(read_fixture("dexpi/minimal_tank.xml")));
    GroundTruth truth;
    truth.sequence = {"T1"};
    truth.valves = {"V1"};
    std::vector<std::size_t> seen_lengths;
    BenchmarkOptions opts;
    opts.factory = [&](const rag::ProviderSpec& spec) -> std::unique_ptr<rag::Provider> {
        struct Recorder : rag::Provider {
            std::vector<std::size_t>* lengths;
            void complete(const std::vector<rag::ChatMessage>& m, const rag::ChunkSink& sink) override {
                lengths->push_back(m.size());
                sink("T1");
            }
        };
        (void)spec;
        auto r = std::make_unique<Recorder>();
        r->lengths = &seen_lengths;
        return r;
    };
    const auto cases = load_cases(nlohmann::json::parse(R"([
        {"question_id": "Q1", "level": "high", "provider": "local"},
        {"question_id": "Q2", "level": "high", "provider": "local"},
        {"question_id": "Q2", "level": "complete", "provider": "local"}])"));
    run_benchmark(cases, {&g, &g}, truth, opts);
    CHECK(seen_lengths == std::vector<std::size_t>{2, 4, 2});
    seen_lengths.clear();
    opts.shared_history = false;
    run_benchmark(cases, {&g, &g}, truth, opts);
    CHECK(seen_lengths == std::vector<std::size_t>{2, 2, 2});
}

TEST_CASE("case files") {
    CHECK_THROWS(load_cases(nlohmann::json::parse(R"({"cases":[{"question_id":"Q9"}]})")));
    CHECK_THROWS_AS(level_from_string("medium"), ConfigError);
    const auto c = load_cases(nlohmann::json::parse(R"([{"question_id":"Q3","provider":"scripted","script":"x.json"}])"),
                              "/tmp/base");
    REQUIRE(c.size() == 1);
    CHECK(c[0].question == default_question(QuestionId::Q3_inference));
    CHECK(c[0].provider.endpoint == "/tmp/base/x.json");
    CHECK(c[0].level == GraphLevel::high);
}
