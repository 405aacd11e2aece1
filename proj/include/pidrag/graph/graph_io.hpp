#pragma once

#include "pidrag/graph/property_graph.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <string_view>

namespace pidrag::graph {

/// Deterministic GraphML: keys, then nodes by id, then edges in canonical order.
/// Throws SerializationError for values XML 1.0 cannot carry.
std::string export_graphml(const PropertyGraph& g);

/// Inverse of export_graphml. Throws ImportError on unknown key references or bad values.
PropertyGraph import_graphml(std::string_view text);

/// {"nodes":[{id,labels,properties}],"edges":[{source,target,type,properties}]}, sorted keys.
nlohmann::json to_json(const PropertyGraph& g);
std::string export_json(const PropertyGraph& g);
PropertyGraph from_json(const nlohmann::json& doc);
PropertyGraph import_json(std::string_view text);

/// Loads either format; GraphML is recognised by a leading '<'.
PropertyGraph import_any(std::string_view text);

class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::string name() const = 0;
    virtual std::size_t count(std::string_view text) const = 0;
};

/// Splits on letter runs, digit runs, single punctuation marks and whitespace runs,
/// roughly the pre-tokenisation step of byte-pair tokenizers.
class PretokenizerCount : public Tokenizer {
public:
    std::string name() const override { return "pretokenize"; }
    std::size_t count(std::string_view text) const override;
};

/// "heuristic" -> nullptr; "pretokenize" -> PretokenizerCount. Throws ConfigError otherwise.
std::unique_ptr<Tokenizer> make_tokenizer(const std::string& name);

struct TokenEstimate {
    enum class Method { heuristic, exact_tokenizer };

    std::size_t char_count = 0;  ///< Unicode code points
    std::size_t token_count = 0;
    Method method = Method::heuristic;
};

/// Heuristic ceil(chars / 4) unless a tokenizer is supplied.
TokenEstimate estimate_tokens(std::string_view text, const Tokenizer* tokenizer = nullptr);

} // namespace pidrag::graph
