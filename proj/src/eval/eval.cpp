#include "pidrag/eval/eval.hpp"

#include "pidrag/error.hpp"
#include "pidrag/rag/chat.hpp"
#include "pidrag/text.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace pidrag::eval {

using graph::GraphNode;
using graph::PropertyGraph;
using nlohmann::json;

std::string to_string(QuestionId q) {
    switch (q) {
    case QuestionId::Q1_pattern: return "Q1_pattern";
    case QuestionId::Q2_completeness: return "Q2_completeness";
    case QuestionId::Q3_inference: return "Q3_inference";
    }
    return "Q1_pattern";
}

QuestionId question_from_string(std::string_view s) {
    if (s == "Q1_pattern" || s == "Q1") return QuestionId::Q1_pattern;
    if (s == "Q2_completeness" || s == "Q2") return QuestionId::Q2_completeness;
    if (s == "Q3_inference" || s == "Q3") return QuestionId::Q3_inference;
    throw ConfigError("unknown question id '" + std::string(s) + "'");
}

std::string to_string(GraphLevel level) { return level == GraphLevel::complete ? "complete" : "high"; }

GraphLevel level_from_string(std::string_view s) {
    if (s == "complete") return GraphLevel::complete;
    if (s == "high") return GraphLevel::high;
    throw ConfigError("unknown graph level '" + std::string(s) + "' (expected complete or high)");
}

const std::string& default_question(QuestionId q) {
    static const std::string q1 = "Describe the process from inlet to outlet.";
    static const std::string q2 = "List all valves and their specifications.";
    static const std::string q3 = "Analyze the flowsheet and give recommendations regarding process safety.";
    switch (q) {
    case QuestionId::Q1_pattern: return q1;
    case QuestionId::Q2_completeness: return q2;
    case QuestionId::Q3_inference: return q3;
    }
    return q1;
}

namespace {

std::string display_name(const GraphNode& n) {
    const auto* t = n.tag();
    return t ? *t : n.id;
}

class Tracer {
public:
    Tracer(const PropertyGraph& g, const TraceOptions& opt) : g_(g), opt_(opt) {
        for (const auto& e : g.edges()) {
            if (e.type == "send_to" && e.source != e.target) succ_[e.source].push_back(e.target);
        }
        for (auto& [id, next] : succ_) {
            std::sort(next.begin(), next.end(), [&](const auto& a, const auto& b) {
                const auto na = display_name(*g_.node(a)), nb = display_name(*g_.node(b));
                if (na != nb) return text::natural_less(na, nb);
                return text::natural_less(a, b);
            });
            next.erase(std::unique(next.begin(), next.end()), next.end());
        }
    }

    void walk(const std::string& id, std::vector<std::string>& out) {
        const auto& n = *g_.node(id);
        if (on_path_.count(id)) {
            out.push_back(std::string(kLoopPrefix) + display_name(n));
            return;
        }
        if (visited_.count(id)) {
            out.push_back(std::string(kJoinPrefix) + display_name(n));
            return;
        }
        visited_.insert(id);
        on_path_.insert(id);
        if (n.tag() && (opt_.label.empty() || n.has_label(opt_.label))) out.push_back(*n.tag());

        auto it = succ_.find(id);
        if (it != succ_.end()) {
            if (it->second.size() == 1) {
                walk(it->second.front(), out);
            } else {
                std::vector<std::vector<std::string>> branches;
                for (const auto& next : it->second) {
                    std::vector<std::string> b;
                    walk(next, b);
                    if (!b.empty()) branches.push_back(std::move(b));
                }
                if (branches.size() == 1) {
                    out.insert(out.end(), branches[0].begin(), branches[0].end());
                } else if (!branches.empty()) {
                    out.emplace_back(kBranchOpen);
                    for (std::size_t i = 0; i < branches.size(); ++i) {
                        if (i > 0) out.emplace_back(kBranchNext);
                        out.insert(out.end(), branches[i].begin(), branches[i].end());
                    }
                    out.emplace_back(kBranchClose);
                }
            }
        }
        on_path_.erase(id);
    }

private:
    const PropertyGraph& g_;
    const TraceOptions& opt_;
    std::map<std::string, std::vector<std::string>> succ_;
    std::set<std::string> visited_;
    std::set<std::string> on_path_;
};

bool is_marker(const std::string& s) {
    return s == kBranchOpen || s == kBranchNext || s == kBranchClose || s.rfind(kLoopPrefix, 0) == 0 ||
           s.rfind(kJoinPrefix, 0) == 0;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string score_text(const std::optional<double>& s) {
    if (!s) return "";
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << *s;
    return os.str();
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

} // namespace

std::vector<std::string> trace_flow(const PropertyGraph& g, const std::string& inlet, const TraceOptions& options) {
    if (!g.contains(inlet)) throw PreconditionError("inlet '" + inlet + "' is not in the graph");
    for (const auto& e : g.edges()) {
        if (e.type == "send_to" && e.target == inlet && e.source != inlet) {
            throw PreconditionError("inlet '" + inlet + "' has incoming flow from '" + e.source + "'");
        }
    }
    std::vector<std::string> out;
    Tracer(g, options).walk(inlet, out);
    return out;
}

std::vector<std::string> trace_tags(const std::vector<std::string>& trace) {
    std::vector<std::string> out;
    for (const auto& s : trace) {
        if (!is_marker(s)) out.push_back(s);
    }
    return out;
}

std::vector<std::string> flow_inlets(const PropertyGraph& g) {
    std::set<std::string> has_in, has_out;
    for (const auto& e : g.edges()) {
        if (e.type != "send_to" || e.source == e.target) continue;
        has_out.insert(e.source);
        has_in.insert(e.target);
    }
    std::vector<std::string> out;
    for (const auto& id : has_out) {
        if (!has_in.count(id)) out.push_back(id);
    }
    std::sort(out.begin(), out.end(), text::natural_less);
    return out;
}

double score_sequence(const std::vector<std::string>& predicted, const std::vector<std::string>& truth) {
    if (truth.empty()) throw PreconditionError("reference sequence is empty");
    std::size_t n = 0;
    while (n < predicted.size() && n < truth.size() && predicted[n] == truth[n]) ++n;
    return static_cast<double>(n) / static_cast<double>(truth.size());
}

std::vector<GraphNode> list_nodes_by_label(const PropertyGraph& g, const std::string& label) {
    std::vector<GraphNode> out;
    for (const auto& [id, n] : g.nodes()) {
        if (n.has_label(label)) out.push_back(n);
    }
    std::sort(out.begin(), out.end(), [](const GraphNode& a, const GraphNode& b) {
        const auto *ta = a.tag(), *tb = b.tag();
        if (ta && tb && *ta != *tb) return *ta < *tb;
        if (static_cast<bool>(ta) != static_cast<bool>(tb)) return ta != nullptr;
        return a.id < b.id;
    });
    return out;
}

double score_recall(const std::set<std::string>& predicted, const std::set<std::string>& truth) {
    if (truth.empty()) throw PreconditionError("reference set is empty");
    std::size_t hit = 0;
    for (const auto& t : truth) hit += predicted.count(t);
    return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::vector<std::string> extract_tags(std::string_view answer, const std::vector<std::string>& known_tags) {
    std::vector<std::pair<std::string, const std::string*>> cands;
    for (const auto& t : known_tags) {
        if (!t.empty()) cands.emplace_back(text::to_lower(t), &t);
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    const auto lower = text::to_lower(answer);

    std::vector<std::string> out;
    std::set<std::string> seen;
    std::size_t p = 0;
    while (p < lower.size()) {
        if (p > 0 && word_char(lower[p - 1])) {
            ++p;
            continue;
        }
        std::size_t matched = 0;
        for (const auto& [low, canon] : cands) {
            if (lower.compare(p, low.size(), low) != 0) continue;
            const auto end = p + low.size();
            if (end < lower.size()) {
                const char c = lower[end];
                if (word_char(c)) continue;
                if ((c == '.' || c == '-') && end + 1 < lower.size() && word_char(lower[end + 1])) continue;
            }
            if (seen.insert(*canon).second) out.push_back(*canon);
            matched = low.size();
            break;
        }
        p += matched > 0 ? matched : 1;
    }
    return out;
}

std::vector<std::string> graph_tags(const PropertyGraph& g, const std::string& label) {
    std::set<std::string> tags;
    for (const auto& [id, n] : g.nodes()) {
        if (n.tag() && (label.empty() || n.has_label(label))) tags.insert(*n.tag());
    }
    return {tags.begin(), tags.end()};
}

GroundTruth GroundTruth::load(const std::string& trace_file, const std::string& valves_file) {
    GroundTruth t;
    const auto trace = read_json_file(trace_file);
    t.sequence = trace.at("sequence").get<std::vector<std::string>>();
    t.sequence_label = trace.value("label", t.sequence_label);
    const auto valves = read_json_file(valves_file);
    const auto tags = valves.at("tags").get<std::vector<std::string>>();
    t.valves = {tags.begin(), tags.end()};
    t.valve_label = valves.value("label", t.valve_label);
    return t;
}

std::vector<EvalCase> load_cases(const json& doc, const std::string& base_dir) {
    std::vector<EvalCase> out;
    const auto& arr = doc.is_array() ? doc : doc.at("cases");
    for (const auto& c : arr) {
        EvalCase ec;
        ec.question_id = question_from_string(c.at("question_id").get<std::string>());
        ec.question = c.value("question", default_question(ec.question_id));
        ec.level = level_from_string(c.value("level", "high"));
        ec.name = c.value("name", to_string(ec.question_id) + "-" + to_string(ec.level));
        auto endpoint = c.value("endpoint", c.value("script", ""));
        const auto provider = c.value("provider", "scripted");
        if (provider == "scripted" && !endpoint.empty() && !base_dir.empty() &&
            std::filesystem::path(endpoint).is_relative()) {
            endpoint = (std::filesystem::path(base_dir) / endpoint).string();
        }
        ec.provider = rag::ProviderSpec::resolve(provider, c.value("model", ""), endpoint);
        if (c.contains("recommendations")) ec.recommendations = c.at("recommendations").get<int>();
        out.push_back(std::move(ec));
    }
    return out;
}

BenchmarkReport run_benchmark(const std::vector<EvalCase>& cases, const GraphPair& graphs,
                              const GroundTruth& truth, const BenchmarkOptions& options) {
    const ProviderFactory factory = options.factory ? options.factory : ProviderFactory(rag::make_provider);
    std::map<std::string, rag::ChatSession> sessions;
    std::map<std::string, std::unique_ptr<rag::Provider>> providers;

    BenchmarkReport report;
    for (const auto& c : cases) {
        EvalResult r;
        r.eval_case = c;
        const PropertyGraph* g = c.level == GraphLevel::complete ? graphs.complete : graphs.high;
        try {
            if (!g) throw ConfigError("no " + to_string(c.level) + " graph supplied");
            const auto pkey = c.provider.to_json().dump();
            auto& provider = providers[pkey];
            if (!provider) provider = factory(c.provider);

            auto skey = to_string(c.level) + "\n" + pkey;
            if (!options.shared_history) skey += "\n" + c.name;
            auto sit = sessions.find(skey);
            if (sit == sessions.end()) {
                sit = sessions.emplace(skey, rag::new_session(*g, rag::default_system_template(), options.token_budget))
                          .first;
            }
            r.answer = rag::ask(sit->second, c.question, *provider).content;

            switch (c.question_id) {
            case QuestionId::Q1_pattern: {
                auto known = graph_tags(*g, truth.sequence_label);
                known.insert(known.end(), truth.sequence.begin(), truth.sequence.end());
                r.extracted = extract_tags(r.answer, known);
                r.score = score_sequence(r.extracted, truth.sequence);
                break;
            }
            case QuestionId::Q2_completeness: {
                auto known = graph_tags(*g);
                known.insert(known.end(), truth.valves.begin(), truth.valves.end());
                r.extracted = extract_tags(r.answer, known);
                r.score = score_recall({r.extracted.begin(), r.extracted.end()}, truth.valves);
                break;
            }
            case QuestionId::Q3_inference:
                r.extracted = extract_tags(r.answer, graph_tags(*g));
                r.notes = "human-scored";
                break;
            }
        } catch (const Error& e) {
            r.failed = true;
            r.notes = e.what();
        }
        report.results.push_back(std::move(r));
    }
    return report;
}

std::string BenchmarkReport::to_csv() const {
    std::ostringstream os;
    os << "case,question_id,level,provider,model,status,score,recommendations,extracted,notes\n";
    for (const auto& r : results) {
        const auto& c = r.eval_case;
        os << csv_field(c.name) << ',' << to_string(c.question_id) << ',' << to_string(c.level) << ','
           << csv_field(c.provider.provider_name) << ',' << csv_field(c.provider.model_id) << ','
           << (r.failed ? "failed" : "ok") << ',' << score_text(r.score) << ','
           << (c.recommendations ? std::to_string(*c.recommendations) : "") << ','
           << csv_field(text::join(r.extracted, ";")) << ',' << csv_field(r.notes) << '\n';
    }
    return os.str();
}

std::string BenchmarkReport::to_table() const {
    std::ostringstream os;
    os << std::left << std::setw(28) << "case" << std::setw(17) << "question" << std::setw(10) << "level"
       << std::setw(12) << "provider" << std::setw(8) << "status" << std::setw(8) << "score" << "recs\n";
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> means;
    for (const auto& r : results) {
        const auto& c = r.eval_case;
        os << std::left << std::setw(28) << c.name << std::setw(17) << to_string(c.question_id) << std::setw(10)
           << to_string(c.level) << std::setw(12) << c.provider.provider_name << std::setw(8)
           << (r.failed ? "failed" : "ok") << std::setw(8) << (r.score ? score_text(r.score) : "-")
           << (c.recommendations ? std::to_string(*c.recommendations) : "-") << "\n";
        if (r.score) {
            auto& m = means[{to_string(c.question_id), to_string(c.level)}];
            m.first += *r.score;
            ++m.second;
        }
    }
    if (!means.empty()) {
        os << "\nmean score\n";
        for (const auto& [k, v] : means) {
            os << std::left << std::setw(17) << k.first << std::setw(10) << k.second
               << score_text(v.first / v.second) << "\n";
        }
    }
    return os.str();
}

json BenchmarkReport::to_json() const {
    json arr = json::array();
    for (const auto& r : results) {
        const auto& c = r.eval_case;
        json j{{"case", c.name},
               {"question_id", to_string(c.question_id)},
               {"question", c.question},
               {"level", to_string(c.level)},
               {"provider", c.provider.to_json()},
               {"status", r.failed ? "failed" : "ok"},
               {"answer", r.answer},
               {"extracted", r.extracted},
               {"notes", r.notes}};
        j["score"] = r.score ? json(*r.score) : json(nullptr);
        j["recommendations"] = c.recommendations ? json(*c.recommendations) : json(nullptr);
        arr.push_back(std::move(j));
    }
    return {{"results", arr}};
}

} // namespace pidrag::eval
