#include "conductor/text.hpp"

#include <algorithm>
#include <cctype>

namespace conductor::text {

namespace {

bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

bool is_placeholder_name_char(unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
}

} // namespace

std::string fold_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        unsigned char u = static_cast<unsigned char>(c);
        if (u < 0x80) c = static_cast<char>(std::tolower(u));
    }
    return out;
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (unsigned char u : s) {
        char c;
        if (u >= 0x80) {
            c = static_cast<char>(u);
        } else if (std::isalnum(u)) {
            c = static_cast<char>(std::tolower(u));
        } else {
            // Punctuation and whitespace both become a single separator.
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> tokenize_words(std::string_view s) {
    std::vector<std::string> words;
    std::string cur;
    for (unsigned char u : s) {
        if (is_word_byte(u)) {
            cur.push_back(u < 0x80 ? static_cast<char>(std::tolower(u))
                                   : static_cast<char>(u));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

bool phrase_matches(std::string_view text, std::string_view pattern) {
    auto text_words = tokenize_words(text);
    auto pat_words = tokenize_words(pattern);
    if (pat_words.empty() || pat_words.size() > text_words.size()) return false;
    for (size_t i = 0; i + pat_words.size() <= text_words.size(); ++i) {
        if (std::equal(pat_words.begin(), pat_words.end(), text_words.begin() + i))
            return true;
    }
    return false;
}

std::set<std::string> token_set(std::string_view normalized) {
    auto words = tokenize_words(normalized);
    return {words.begin(), words.end()};
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    size_t inter = 0;
    for (const auto& w : a)
        if (b.count(w)) ++inter;
    size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string substitute_placeholders(
    std::string_view tmpl,
    const std::function<std::optional<std::string>(const std::string&, const std::string&)>& resolve,
    std::vector<std::string>* unresolved) {
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out.push_back(tmpl[i++]);
            continue;
        }
        // Find a well-formed {name} or {name:spec}; anything else is literal.
        size_t j = i + 1;
        std::string name, spec;
        while (j < tmpl.size() && is_placeholder_name_char(static_cast<unsigned char>(tmpl[j])))
            name.push_back(tmpl[j++]);
        if (j < tmpl.size() && tmpl[j] == ':') {
            ++j;
            while (j < tmpl.size() && tmpl[j] != '}') spec.push_back(tmpl[j++]);
        }
        if (name.empty() || j >= tmpl.size() || tmpl[j] != '}') {
            out.push_back(tmpl[i++]);
            continue;
        }
        if (auto replacement = resolve(name, spec)) {
            out += *replacement;
        } else {
            if (unresolved) unresolved->push_back(name);
            out.append(tmpl.substr(i, j - i + 1));
        }
        i = j + 1;
    }
    return out;
}

std::vector<std::string> placeholder_names(std::string_view tmpl) {
    std::vector<std::string> names;
    substitute_placeholders(
        tmpl,
        [&](const std::string& name, const std::string&) -> std::optional<std::string> {
            names.push_back(name);
            return std::nullopt;
        });
    return names;
}

} // namespace conductor::text
