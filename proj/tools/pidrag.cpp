#include "pidrag/dexpi/parser.hpp"
#include "pidrag/error.hpp"
#include "pidrag/eval/eval.hpp"
#include "pidrag/graph/builder.hpp"
#include "pidrag/graph/condenser.hpp"
#include "pidrag/graph/graph_io.hpp"
#include "pidrag/pipeline.hpp"
#include "pidrag/rag/chat.hpp"
#include "pidrag/rag/repl.hpp"
#include "pidrag/service/service.hpp"
#include "pidrag/text.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <unistd.h>

using namespace pidrag;
using nlohmann::json;

namespace {

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        if (!content.empty() && content.back() != '\n') std::cout << '\n';
    } else {
        write_file_atomic(out_path, content);
    }
}

bool looks_like_graph(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
    if (first == std::string::npos) return false;
    if (text[first] == '{') return true;
    return text.find("<graphml", first) != std::string::npos &&
           text.find("<PlantModel", first) == std::string::npos;
}

graph::CondensationPolicy load_policy(const std::string& path) {
    if (path.empty()) return graph::CondensationPolicy::defaults();
    try {
        return graph::CondensationPolicy::from_json(json::parse(read_file(path)));
    } catch (const json::exception& e) {
        throw ConfigError("policy '" + path + "': " + e.what());
    }
}

/// A DEXPI file goes through the pipeline; a GraphML/JSON graph is loaded as is and condensed
/// on request.
graph::PropertyGraph load_graph(const std::string& path, const std::string& level, bool strict,
                                const graph::CondensationPolicy& policy) {
    const auto text = read_file(path);
    if (looks_like_graph(text)) {
        auto g = graph::import_any(text);
        return level == "high" ? graph::condense(g, policy).graph : g;
    }
    auto p = run_pipeline(text, strict, policy);
    return level == "high" ? std::move(p.high) : std::move(p.complete);
}

std::string format_graph(const graph::PropertyGraph& g, const std::string& format) {
    return format == "json" ? graph::export_json(g) + "\n" : graph::export_graphml(g);
}

void print_diagnostics(const std::vector<dexpi::Diagnostic>& diags) {
    for (const auto& d : diags) {
        std::cerr << dexpi::to_string(d.severity) << ": " << (d.item_id.empty() ? "" : d.item_id + ": ") << d.message
                  << "\n";
    }
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
    if (g_server) g_server->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DEXPI P&ID knowledge graphs, condensation and graph-RAG chat"};
    app.require_subcommand(1);

    // parse
    auto* parse = app.add_subcommand("parse", "Parse a DEXPI XML file and report its contents");
    std::string parse_file, parse_out;
    bool parse_strict = false, parse_json = false;
    parse->add_option("file", parse_file, "DEXPI XML file")->required()->check(CLI::ExistingFile);
    parse->add_flag("--strict", parse_strict, "Fail when any diagnostic is collected");
    parse->add_flag("--json", parse_json, "Print the parsed model as JSON");
    parse->add_option("--out", parse_out, "Write output to this file");

    // graph
    auto* graph_cmd = app.add_subcommand("graph", "Build the complete knowledge graph");
    std::string graph_file, graph_format = "graphml", graph_out;
    bool graph_strict = false, graph_no_presentation = false;
    graph_cmd->add_option("file", graph_file, "DEXPI XML file")->required()->check(CLI::ExistingFile);
    graph_cmd->add_option("--format", graph_format, "Output format")->check(CLI::IsMember({"json", "graphml"}));
    graph_cmd->add_option("--out", graph_out, "Output path (stdout when omitted)");
    graph_cmd->add_flag("--strict", graph_strict, "Fail on unresolved references");
    graph_cmd->add_flag("--no-presentation", graph_no_presentation, "Leave drawing data out of node properties");

    // condense
    auto* condense = app.add_subcommand("condense", "Condense a graph into the high-level graph");
    std::string cond_in, cond_policy, cond_out, cond_report, cond_format = "graphml";
    condense->add_option("input", cond_in, "Graph (GraphML or JSON) or DEXPI XML")->required()->check(CLI::ExistingFile);
    condense->add_option("--policy", cond_policy, "Condensation policy JSON")->check(CLI::ExistingFile);
    condense->add_option("--out", cond_out, "High-level graph output path");
    condense->add_option("--report", cond_report, "Condensation report output path");
    condense->add_option("--format", cond_format, "Output format")->check(CLI::IsMember({"json", "graphml"}));

    // export
    auto* export_cmd = app.add_subcommand("export", "Convert a graph between GraphML and JSON");
    std::string exp_in, exp_format = "graphml", exp_out, exp_level = "complete";
    export_cmd->add_option("graph", exp_in, "Graph (GraphML or JSON) or DEXPI XML")->required()->check(CLI::ExistingFile);
    export_cmd->add_option("--format", exp_format, "Output format")->check(CLI::IsMember({"json", "graphml"}));
    export_cmd->add_option("--level", exp_level, "complete or high")->check(CLI::IsMember({"complete", "high"}));
    export_cmd->add_option("--out", exp_out, "Output path (stdout when omitted)");

    // tokens
    auto* tokens = app.add_subcommand("tokens", "Estimate the token count of a text file");
    std::string tok_file, tok_name = "heuristic";
    tokens->add_option("file", tok_file, "Any text file")->required()->check(CLI::ExistingFile);
    tokens->add_option("--tokenizer", tok_name, "heuristic or pretokenize");

    // trace
    auto* trace = app.add_subcommand("trace", "Walk material flow from an inlet");
    std::string trace_in, trace_inlet, trace_label = "equipment", trace_level = "high";
    trace->add_option("graph", trace_in, "Graph or DEXPI XML")->required()->check(CLI::ExistingFile);
    trace->add_option("--inlet", trace_inlet, "Start node id (every inlet when omitted)");
    trace->add_option("--label", trace_label, "List only nodes with this label; empty lists all tagged nodes");
    trace->add_option("--level", trace_level, "complete or high")->check(CLI::IsMember({"complete", "high"}));

    // list
    auto* list = app.add_subcommand("list", "List nodes carrying a label");
    std::string list_in, list_label = "valve", list_level = "high";
    list->add_option("graph", list_in, "Graph or DEXPI XML")->required()->check(CLI::ExistingFile);
    list->add_option("--label", list_label, "Label to select");
    list->add_option("--level", list_level, "complete or high")->check(CLI::IsMember({"complete", "high"}));

    // chat
    auto* chat = app.add_subcommand("chat", "Interactive chat over a graph");
    std::string chat_in, chat_level = "high", chat_provider, chat_model, chat_endpoint, chat_policy;
    std::size_t chat_budget = 200000;
    bool chat_quiet = false;
    chat->add_option("graph", chat_in, "Graph or DEXPI XML")->required()->check(CLI::ExistingFile);
    chat->add_option("--level", chat_level, "complete or high")->check(CLI::IsMember({"complete", "high"}));
    chat->add_option("--provider", chat_provider, "openai, anthropic, local or scripted")->required();
    chat->add_option("--model", chat_model, "Model id");
    chat->add_option("--endpoint", chat_endpoint, "Endpoint URL, or the script path for the scripted provider");
    chat->add_option("--budget", chat_budget, "Prompt token budget");
    chat->add_option("--policy", chat_policy, "Condensation policy JSON")->check(CLI::ExistingFile);
    chat->add_flag("--quiet", chat_quiet, "No input prompt (for piped input)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Run the question benchmark");
    std::string eval_file, eval_cases, eval_out, eval_trace = "fixtures/golden/trace_reference.json",
                                                 eval_valves = "fixtures/golden/valves_reference.json", eval_json;
    std::size_t eval_budget = 200000;
    eval_cmd->add_option("file", eval_file, "DEXPI XML file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--cases", eval_cases, "Cases JSON")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", eval_out, "CSV report path");
    eval_cmd->add_option("--json", eval_json, "JSON report path (includes answers)");
    eval_cmd->add_option("--trace-ref", eval_trace, "Reference flow sequence")->check(CLI::ExistingFile);
    eval_cmd->add_option("--valves-ref", eval_valves, "Reference valve tags")->check(CLI::ExistingFile);
    eval_cmd->add_option("--budget", eval_budget, "Prompt token budget");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string serve_addr = "127.0.0.1:8080", serve_store = "pidrag-store", serve_static, serve_scripts, serve_policy;
    std::size_t serve_max_upload = 32u << 20;
    serve->add_option("--addr", serve_addr, "host:port to listen on");
    serve->add_option("--store", serve_store, "Storage directory");
    serve->add_option("--static", serve_static, "Directory served under /")->check(CLI::ExistingDirectory);
    serve->add_option("--scripts", serve_scripts, "Directory of scripted-provider scripts")->check(CLI::ExistingDirectory);
    serve->add_option("--policy", serve_policy, "Condensation policy JSON")->check(CLI::ExistingFile);
    serve->add_option("--max-upload", serve_max_upload, "Upload size limit in bytes");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*parse) {
            auto model = dexpi::parse_dexpi(read_file(parse_file), {parse_strict});
            if (parse_json) {
                emit(parse_out, dexpi::to_json(model).dump(2));
            } else {
                std::map<std::string, int> per_package;
                for (const auto& it : model.items) ++per_package[dexpi::to_string(it.package)];
                std::ostringstream os;
                os << "items " << model.items.size() << "\n";
                for (const auto& [k, v] : per_package) os << "  " << k << " " << v << "\n";
                os << "piping connections " << model.piping_connections.size() << "\n";
                os << "signal connections " << model.signal_connections.size() << "\n";
                for (const auto& [k, v] : model.metadata) os << k << ": " << v << "\n";
                os << "diagnostics " << model.diagnostics.size() << "\n";
                emit(parse_out, os.str());
                print_diagnostics(model.diagnostics);
            }
        } else if (*graph_cmd) {
            auto model = dexpi::parse_dexpi(read_file(graph_file), {graph_strict});
            graph::BuildOptions opts;
            opts.strict = graph_strict;
            opts.include_presentation = !graph_no_presentation;
            std::vector<dexpi::Diagnostic> diags;
            auto g = graph::build_graph(model, opts, &diags);
            print_diagnostics(diags);
            emit(graph_out, format_graph(g, graph_format));
        } else if (*condense) {
            const auto policy = load_policy(cond_policy);
            const auto g = load_graph(cond_in, "complete", false, policy);
            auto result = graph::condense(g, policy);
            emit(cond_out, format_graph(result.graph, cond_format));
            const auto report = result.report.to_json().dump(2);
            if (!cond_report.empty()) {
                write_file_atomic(cond_report, report + "\n");
            } else if (!cond_out.empty()) {
                std::cout << report << "\n";
            }
        } else if (*export_cmd) {
            emit(exp_out, format_graph(load_graph(exp_in, exp_level, false, graph::CondensationPolicy::defaults()),
                                       exp_format));
        } else if (*tokens) {
            auto tokenizer = graph::make_tokenizer(tok_name);
            const auto est = graph::estimate_tokens(read_file(tok_file), tokenizer.get());
            std::cout << "chars " << est.char_count << "\ntokens " << est.token_count << "\nmethod "
                      << (tokenizer ? tokenizer->name() : "heuristic") << "\n";
        } else if (*trace) {
            const auto g = load_graph(trace_in, trace_level, false, graph::CondensationPolicy::defaults());
            std::vector<std::string> inlets = trace_inlet.empty() ? eval::flow_inlets(g)
                                                                  : std::vector<std::string>{trace_inlet};
            for (const auto& inlet : inlets) {
                std::cout << inlet << ":";
                for (const auto& s : eval::trace_flow(g, inlet, {trace_label})) std::cout << " " << s;
                std::cout << "\n";
            }
        } else if (*list) {
            const auto g = load_graph(list_in, list_level, false, graph::CondensationPolicy::defaults());
            const auto nodes = eval::list_nodes_by_label(g, list_label);
            for (const auto& n : nodes) {
                std::cout << (n.tag() ? *n.tag() : "-") << "\t" << n.id << "\t" << text::join(n.labels, ";") << "\n";
            }
            std::cout << nodes.size() << " node(s)\n";
        } else if (*chat) {
            const auto g = load_graph(chat_in, chat_level, false, load_policy(chat_policy));
            auto spec = rag::ProviderSpec::resolve(chat_provider, chat_model, chat_endpoint);
            auto provider = rag::make_provider(spec);
            auto session = rag::new_session(g, rag::default_system_template(), chat_budget);
            rag::ReplOptions opts;
            opts.show_prompt = !chat_quiet && ::isatty(STDIN_FILENO);
            rag::run_repl(session, *provider, std::cin, std::cout, std::cerr, opts);
        } else if (*eval_cmd) {
            auto p = run_pipeline(read_file(eval_file));
            const auto base = std::filesystem::path(eval_cases).parent_path().string();
            const auto cases = eval::load_cases(json::parse(read_file(eval_cases)), base);
            const auto truth = eval::GroundTruth::load(eval_trace, eval_valves);
            eval::BenchmarkOptions opts;
            opts.token_budget = eval_budget;
            const auto report = eval::run_benchmark(cases, {&p.complete, &p.high}, truth, opts);
            if (!eval_out.empty()) write_file_atomic(eval_out, report.to_csv());
            if (!eval_json.empty()) write_file_atomic(eval_json, report.to_json().dump(2) + "\n");
            std::cout << report.to_table();
        } else if (*serve) {
            service::ServiceConfig cfg;
            cfg.store_dir = serve_store;
            cfg.static_dir = serve_static;
            cfg.script_dir = serve_scripts;
            cfg.max_upload_bytes = serve_max_upload;
            cfg.policy = load_policy(serve_policy);
            if (const char* token = std::getenv("PIDRAG_BEARER_TOKEN")) cfg.bearer_token = token;

            const auto colon = serve_addr.rfind(':');
            if (colon == std::string::npos) throw ConfigError("--addr must be host:port");
            const auto host = serve_addr.substr(0, colon);
            const int port = std::stoi(serve_addr.substr(colon + 1));

            service::Service svc(cfg);
            for (const auto& id : svc.store().regenerated()) {
                std::cerr << "regenerated graphs of " << id << " for the current policy\n";
            }
            httplib::Server server;
            svc.mount(server);
            g_server = &server;
            std::signal(SIGINT, stop_server);
            std::signal(SIGTERM, stop_server);
            std::cerr << "listening on " << host << ":" << port << "\n";
            if (!server.listen(host, port)) throw Error("cannot listen on " + serve_addr);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const BudgetError& e) {
        std::cerr << "budget error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
