#pragma once

#include <set>
#include <string>
#include <vector>

#include "conductor/core.hpp"

namespace conductor {

struct IntentSpec {
    std::string intent;
    std::vector<std::string> trigger_patterns; // case-insensitive word-boundary phrases
    std::string target_domain;
    std::string sub_prompt_template;           // may reference other intents as {R<k>},
                                               // k = 1-based catalog declaration index
    std::set<std::string> depends_on_intents;
    int priority = 0;                          // larger value ranks first on ties
};

// Declarative catalog driving prompt decomposition. Construction validates:
// unique intent labels, dependencies declared in the same catalog, acyclic
// dependency relation, and every {R<k>} template reference pointing at a
// declared dependency of its intent.
class IntentCatalog {
public:
    IntentCatalog(std::vector<IntentSpec> intents, std::string version);

    const std::vector<IntentSpec>& intents() const { return intents_; }
    const std::string& version() const { return version_; }

    // 0-based declaration index; -1 when the label is unknown.
    int declaration_index(const std::string& intent) const;
    const IntentSpec* find(const std::string& intent) const;

private:
    std::vector<IntentSpec> intents_;
    std::string version_;
};

// Every intent with at least one trigger phrase occurring in the prompt,
// plus the transitive closure of their dependencies, in dependency order
// (prerequisites first; ties by priority desc, then declaration order).
// Throws no-intent-matched when nothing triggers.
std::vector<IntentSpec> match_intents(const Prompt& prompt, const IntentCatalog& catalog);

// One SubPrompt per matched intent, ids 1..n in the match_intents order,
// {R<k>} catalog references rewritten to decomposition ids.
std::vector<SubPrompt> decompose(const Prompt& prompt, const IntentCatalog& catalog);

} // namespace conductor
