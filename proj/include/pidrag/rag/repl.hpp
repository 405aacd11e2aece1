#pragma once

#include "pidrag/rag/chat.hpp"
#include "pidrag/rag/provider.hpp"

#include <iosfwd>

namespace pidrag::rag {

struct ReplOptions {
    bool show_prompt = true; ///< print "> " before reading each line
};

/// Line-oriented chat loop. Answers stream to out as they arrive; failures go to err and leave
/// history untouched. "/history" prints the transcript, "/quit" or EOF ends the loop.
/// Returns the number of completed turns.
std::size_t run_repl(ChatSession& session, Provider& provider, std::istream& in, std::ostream& out,
                     std::ostream& err, const ReplOptions& options = {});

} // namespace pidrag::rag
