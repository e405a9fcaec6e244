#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace conductor::text {

// Lowercase ASCII letters; bytes >= 0x80 (multi-byte UTF-8) pass through.
std::string fold_ascii(std::string_view s);

// Canonical form used by the cache key and golden-answer comparison:
// lowercased, ASCII punctuation replaced by spaces, whitespace collapsed,
// trimmed. Idempotent. Non-ASCII bytes are preserved.
std::string normalize(std::string_view s);

std::string trim(std::string_view s);

// Words = maximal runs of ASCII alphanumerics / non-ASCII bytes, lowercased.
std::vector<std::string> tokenize_words(std::string_view s);

// True when `pattern`'s words occur as a consecutive word sequence in `text`
// (case-insensitive, punctuation-insensitive).
bool phrase_matches(std::string_view text, std::string_view pattern);

std::set<std::string> token_set(std::string_view normalized);

// Jaccard similarity of two token sets; both empty counts as 1.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// Placeholder substitution for `{name}` / `{name:commas}` templates.
// `resolve(name, spec)` returns the rendered replacement or nullopt when the
// name is unknown; unknown names are collected into `unresolved` and the
// placeholder is left verbatim. Names may contain [A-Za-z0-9_-].
std::string substitute_placeholders(
    std::string_view tmpl,
    const std::function<std::optional<std::string>(const std::string& name,
                                                   const std::string& spec)>& resolve,
    std::vector<std::string>* unresolved = nullptr);

// Names of all placeholders appearing in a template, in order of appearance.
std::vector<std::string> placeholder_names(std::string_view tmpl);

} // namespace conductor::text
