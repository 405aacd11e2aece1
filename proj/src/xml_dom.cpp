#include "pidrag/xml_dom.hpp"

#include "pidrag/error.hpp"

#include <expat.h>

#include <limits>

namespace pidrag::xml {

namespace {

struct BuildState {
    XML_Parser parser = nullptr;
    Document doc;
    std::vector<Element*> stack;
};

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
    auto* state = static_cast<BuildState*>(user);
    auto element = std::make_unique<Element>();
    element->name = std::string(local_name(name));
    element->line = static_cast<int>(XML_GetCurrentLineNumber(state->parser));
    element->column = static_cast<int>(XML_GetCurrentColumnNumber(state->parser)) + 1;
    element->document_index = state->doc.element_count++;
    for (int i = 0; attrs[i] != nullptr; i += 2) {
        element->attributes.emplace_back(std::string(local_name(attrs[i])), attrs[i + 1]);
    }

    Element* raw = element.get();
    if (state->stack.empty()) {
        state->doc.root = std::move(element);
    } else {
        state->stack.back()->children.push_back(std::move(element));
    }
    state->stack.push_back(raw);
}

void XMLCALL on_end(void* user, const XML_Char*) {
    static_cast<BuildState*>(user)->stack.pop_back();
}

void XMLCALL on_text(void* user, const XML_Char* s, int len) {
    auto* state = static_cast<BuildState*>(user);
    if (!state->stack.empty()) {
        state->stack.back()->text.append(s, static_cast<std::size_t>(len));
    }
}

} // namespace

std::string_view local_name(std::string_view qualified) {
    auto colon = qualified.rfind(':');
    return colon == std::string_view::npos ? qualified : qualified.substr(colon + 1);
}

const std::string* Element::attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

std::string Element::attribute_or(std::string_view key, std::string fallback) const {
    const auto* value = attribute(key);
    return value ? *value : std::move(fallback);
}

const Element* Element::child(std::string_view name_) const {
    for (const auto& c : children) {
        if (c->name == name_) {
            return c.get();
        }
    }
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view name_) const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
        if (c->name == name_) {
            out.push_back(c.get());
        }
    }
    return out;
}

Document parse(std::string_view text) {
    if (text.size() > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
        throw ParseError("document too large");
    }

    BuildState state;
    state.parser = XML_ParserCreate("UTF-8");
    if (state.parser == nullptr) {
        throw ParseError("unable to allocate XML parser");
    }
    XML_SetUserData(state.parser, &state);
    XML_SetElementHandler(state.parser, on_start, on_end);
    XML_SetCharacterDataHandler(state.parser, on_text);

    const auto status = XML_Parse(state.parser, text.data(), static_cast<int>(text.size()), 1);
    if (status != XML_STATUS_OK) {
        const int line = static_cast<int>(XML_GetCurrentLineNumber(state.parser));
        const int column = static_cast<int>(XML_GetCurrentColumnNumber(state.parser)) + 1;
        std::string message = std::string("malformed XML: ") +
                              XML_ErrorString(XML_GetErrorCode(state.parser));
        XML_ParserFree(state.parser);
        throw ParseError(message, line, column);
    }
    XML_ParserFree(state.parser);

    if (!state.doc.root) {
        throw ParseError("document has no root element", 1, 1);
    }
    return std::move(state.doc);
}

std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\r': out += "&#13;"; break;
            case '\n': out += "&#10;"; break;
            case '\t': out += "&#9;"; break;
            default: out += c;
        }
    }
    return out;
}

bool representable(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) {
            if (c < 0x20 && c != '\t' && c != '\n' && c != '\r') return false;
            ++i;
            continue;
        }
        int len = (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : (c & 0xF8) == 0xF0 ? 4 : 0;
        if (len == 0 || i + len > text.size()) return false;
        char32_t cp = c & (0x7F >> len);
        for (int k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        const char32_t min = len == 2 ? 0x80 : len == 3 ? 0x800 : 0x10000;
        if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF) || cp == 0xFFFE || cp == 0xFFFF) {
            return false;
        }
        i += static_cast<std::size_t>(len);
    }
    return true;
}

} // namespace pidrag::xml
