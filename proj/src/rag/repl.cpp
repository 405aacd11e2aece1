#include "pidrag/rag/repl.hpp"

#include "pidrag/error.hpp"
#include "pidrag/text.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace pidrag::rag {

std::size_t run_repl(ChatSession& session, Provider& provider, std::istream& in, std::ostream& out,
                     std::ostream& err, const ReplOptions& options) {
    std::size_t turns = 0;
    std::string line;
    for (;;) {
        if (options.show_prompt) out << "> " << std::flush;
        if (!std::getline(in, line)) break;
        const auto q = text::trim(line);
        if (q.empty()) continue;
        if (q == "/quit" || q == "/exit") break;
        if (q == "/history") {
            for (const auto& m : session.history) out << "[" << to_string(m.role) << "] " << m.content << "\n";
            continue;
        }
        try {
            ask(session, q, provider, [&](std::string_view chunk) { out << chunk << std::flush; });
            out << "\n";
            ++turns;
        } catch (const AuthError& e) {
            out << "\n";
            err << "auth error: " << e.what() << "\n";
        } catch (const Error& e) {
            out << "\n";
            err << "error: " << e.what() << "\n";
        }
    }
    return turns;
}

} // namespace pidrag::rag
