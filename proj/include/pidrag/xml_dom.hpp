#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pidrag::xml {

/// Minimal owning element tree produced by the expat front end.
struct Element {
    std::string name;       ///< local name, namespace prefix stripped
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<std::unique_ptr<Element>> children;
    std::string text;
    int line = 0;
    int column = 0;
    std::size_t document_index = 0; ///< pre-order position in the whole document

    const std::string* attribute(std::string_view key) const;
    std::string attribute_or(std::string_view key, std::string fallback = {}) const;

    const Element* child(std::string_view local_name) const;
    std::vector<const Element*> children_named(std::string_view local_name) const;
};

struct Document {
    std::unique_ptr<Element> root;
    std::size_t element_count = 0;
};

/// Parses UTF-8 XML text. Throws ParseError with line/column on malformed input.
Document parse(std::string_view text);

/// Escapes text for use in element content or double-quoted attribute values.
std::string escape(std::string_view text);

/// True when the text is valid UTF-8 made only of characters XML 1.0 allows.
bool representable(std::string_view text);

std::string_view local_name(std::string_view qualified);

} // namespace pidrag::xml
