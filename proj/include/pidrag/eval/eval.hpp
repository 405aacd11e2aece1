#pragma once

#include "pidrag/graph/property_graph.hpp"
#include "pidrag/rag/provider.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pidrag::eval {

enum class QuestionId { Q1_pattern, Q2_completeness, Q3_inference };
enum class GraphLevel { complete, high };

std::string to_string(QuestionId q);
QuestionId question_from_string(std::string_view s);
std::string to_string(GraphLevel level);
/// Throws ConfigError for anything but "complete" / "high".
GraphLevel level_from_string(std::string_view s);

/// The three benchmark questions, verbatim.
const std::string& default_question(QuestionId q);

// --- flow tracing ---

inline constexpr std::string_view kBranchOpen = "{";
inline constexpr std::string_view kBranchNext = "|";
inline constexpr std::string_view kBranchClose = "}";
inline constexpr std::string_view kLoopPrefix = "loop:";
inline constexpr std::string_view kJoinPrefix = "join:";

struct TraceOptions {
    /// Only nodes carrying this label are listed; empty lists every tagged node.
    std::string label;
};

/// Depth-first walk over send_to edges from inlet. Listed nodes appear by tag (id when
/// untagged). A fork with more than one non-empty branch is written "{", branch, "|", branch,
/// "}". Re-entering a node on the current path gives "loop:<name>", reaching a node already
/// walked by another branch gives "join:<name>". Successors are visited in natural tag order.
/// Throws PreconditionError if inlet is missing or has incoming flow.
std::vector<std::string> trace_flow(const graph::PropertyGraph& g, const std::string& inlet,
                                    const TraceOptions& options = {});

/// Drops branch, loop and join markers.
std::vector<std::string> trace_tags(const std::vector<std::string>& trace);

/// Nodes with outgoing but no incoming send_to, in natural id order.
std::vector<std::string> flow_inlets(const graph::PropertyGraph& g);

/// Longest common prefix over truth length. Throws PreconditionError for empty truth.
double score_sequence(const std::vector<std::string>& predicted, const std::vector<std::string>& truth);

/// Nodes whose label list contains label, ordered by tag (untagged last, by id).
std::vector<graph::GraphNode> list_nodes_by_label(const graph::PropertyGraph& g, const std::string& label);

/// |predicted ∩ truth| / |truth|. Throws PreconditionError for empty truth.
double score_recall(const std::set<std::string>& predicted, const std::set<std::string>& truth);

/// Known tags in order of first mention, matched case-insensitively as whole tokens;
/// the longest tag wins at a position. Returned in their canonical spelling.
std::vector<std::string> extract_tags(std::string_view answer, const std::vector<std::string>& known_tags);

/// Every tagName in the graph (optionally only on nodes with label), sorted and unique.
std::vector<std::string> graph_tags(const graph::PropertyGraph& g, const std::string& label = {});

// --- benchmark ---

struct EvalCase {
    std::string name;
    QuestionId question_id = QuestionId::Q1_pattern;
    std::string question;
    GraphLevel level = GraphLevel::high;
    rag::ProviderSpec provider;
    std::optional<int> recommendations; ///< Q3 count entered by a human reviewer
};

struct EvalResult {
    EvalCase eval_case;
    std::string answer;
    bool failed = false;
    std::optional<double> score; ///< Q1 prefix score or Q2 recall
    std::vector<std::string> extracted;
    std::string notes;
};

struct GroundTruth {
    std::vector<std::string> sequence;   ///< Q1 reference order
    std::string sequence_label = "equipment";
    std::set<std::string> valves;        ///< Q2 reference set
    std::string valve_label = "valve";

    /// Reads trace_reference.json and valves_reference.json.
    static GroundTruth load(const std::string& trace_file, const std::string& valves_file);
};

struct BenchmarkReport {
    std::vector<EvalResult> results;

    std::string to_csv() const;
    /// Fixed-width table plus per-(question, level) means.
    std::string to_table() const;
    nlohmann::json to_json() const;
};

/// cases.json: {"cases":[{name?, question_id, question?, level, provider, model?, endpoint?,
/// recommendations?}]}. Relative script paths resolve against base_dir.
std::vector<EvalCase> load_cases(const nlohmann::json& doc, const std::string& base_dir = {});

struct GraphPair {
    const graph::PropertyGraph* complete = nullptr;
    const graph::PropertyGraph* high = nullptr;
};

using ProviderFactory = std::function<std::unique_ptr<rag::Provider>(const rag::ProviderSpec&)>;

struct BenchmarkOptions {
    std::size_t token_budget = 200000;
    /// Cases sharing level and provider reuse one session in order, so earlier answers are context.
    bool shared_history = true;
    ProviderFactory factory; ///< defaults to rag::make_provider
};

/// Provider failures mark the case failed and the run continues.
BenchmarkReport run_benchmark(const std::vector<EvalCase>& cases, const GraphPair& graphs,
                              const GroundTruth& truth, const BenchmarkOptions& options = {});

} // namespace pidrag::eval
