#include "conductor/decomposer.hpp"

#include <algorithm>
#include <map>

#include "conductor/errors.hpp"
#include "conductor/text.hpp"

namespace conductor {

namespace {

// Parses a {R<k>} chaining reference; returns k or -1.
int chain_ref(const std::string& name) {
    if (name.size() < 2 || name[0] != 'R') return -1;
    for (size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return -1;
    return std::stoi(name.substr(1));
}

} // namespace

IntentCatalog::IntentCatalog(std::vector<IntentSpec> intents, std::string version)
    : intents_(std::move(intents)), version_(std::move(version)) {
    if (intents_.empty())
        throw PipelineError(errors::kConfig, "invalid-catalog",
                            "intent catalog must declare at least one intent");
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < intents_.size(); ++i) {
        const auto& spec = intents_[i];
        if (spec.intent.empty())
            throw PipelineError(errors::kConfig, "invalid-catalog",
                                "intent label must be non-empty");
        if (!index.emplace(spec.intent, i).second)
            throw PipelineError(errors::kConfig, "invalid-catalog",
                                "duplicate intent label '" + spec.intent + "'");
    }
    for (const auto& spec : intents_) {
        for (const auto& dep : spec.depends_on_intents) {
            if (!index.count(dep))
                throw PipelineError(errors::kConfig, "invalid-catalog",
                                    "intent '" + spec.intent +
                                        "' depends on undeclared intent '" + dep + "'");
            if (dep == spec.intent)
                throw PipelineError(errors::kConfig, "invalid-catalog",
                                    "intent '" + spec.intent + "' depends on itself");
        }
        for (const auto& name : text::placeholder_names(spec.sub_prompt_template)) {
            int k = chain_ref(name);
            if (k < 0) continue;
            if (k < 1 || static_cast<size_t>(k) > intents_.size())
                throw PipelineError(errors::kConfig, "invalid-catalog",
                                    "intent '" + spec.intent + "' references {R" +
                                        std::to_string(k) + "} outside the catalog");
            const auto& referenced = intents_[k - 1].intent;
            if (!spec.depends_on_intents.count(referenced))
                throw PipelineError(errors::kConfig, "invalid-catalog",
                                    "intent '" + spec.intent + "' references {R" +
                                        std::to_string(k) + "} (" + referenced +
                                        ") which is not among its dependencies");
        }
    }
    // Cycle check over the dependency relation.
    std::map<std::string, int> state; // 0 unvisited, 1 in progress, 2 done
    std::vector<std::string> stack;
    for (const auto& spec : intents_) stack.push_back(spec.intent);
    std::vector<std::pair<std::string, bool>> dfs;
    for (const auto& root : stack) {
        if (state[root] == 2) continue;
        dfs.push_back({root, false});
        while (!dfs.empty()) {
            auto [label, leaving] = dfs.back();
            dfs.pop_back();
            if (leaving) {
                state[label] = 2;
                continue;
            }
            if (state[label] == 1)
                throw PipelineError(errors::kConfig, "invalid-catalog",
                                    "intent dependency cycle through '" + label + "'");
            if (state[label] == 2) continue;
            state[label] = 1;
            dfs.push_back({label, true});
            for (const auto& dep : intents_[index[label]].depends_on_intents) {
                if (state[dep] == 1)
                    throw PipelineError(errors::kConfig, "invalid-catalog",
                                        "intent dependency cycle through '" + dep + "'");
                if (state[dep] == 0) dfs.push_back({dep, false});
            }
        }
    }
}

int IntentCatalog::declaration_index(const std::string& intent) const {
    for (size_t i = 0; i < intents_.size(); ++i)
        if (intents_[i].intent == intent) return static_cast<int>(i);
    return -1;
}

const IntentSpec* IntentCatalog::find(const std::string& intent) const {
    int i = declaration_index(intent);
    return i < 0 ? nullptr : &intents_[static_cast<size_t>(i)];
}

std::vector<IntentSpec> match_intents(const Prompt& prompt, const IntentCatalog& catalog) {
    const auto& all = catalog.intents();

    std::set<std::string> selected;
    for (const auto& spec : all) {
        for (const auto& pattern : spec.trigger_patterns) {
            if (text::phrase_matches(prompt.text, pattern)) {
                selected.insert(spec.intent);
                break;
            }
        }
    }
    if (selected.empty())
        throw PipelineError(errors::kDecomposition, "no-intent-matched",
                            "prompt matched no intent in catalog version '" +
                                catalog.version() + "'");

    // Transitive dependency closure.
    std::vector<std::string> frontier(selected.begin(), selected.end());
    while (!frontier.empty()) {
        std::string label = frontier.back();
        frontier.pop_back();
        for (const auto& dep : catalog.find(label)->depends_on_intents)
            if (selected.insert(dep).second) frontier.push_back(dep);
    }

    // Dependency order via Kahn's algorithm; ready intents ordered by
    // priority desc, then declaration order.
    auto rank = [&](const std::string& label) {
        const IntentSpec* spec = catalog.find(label);
        return std::pair<int, int>(-spec->priority, catalog.declaration_index(label));
    };
    std::map<std::string, int> indegree;
    std::map<std::string, std::vector<std::string>> dependents;
    for (const auto& label : selected) {
        int deg = 0;
        for (const auto& dep : catalog.find(label)->depends_on_intents) {
            if (selected.count(dep)) {
                ++deg;
                dependents[dep].push_back(label);
            }
        }
        indegree[label] = deg;
    }
    std::set<std::pair<std::pair<int, int>, std::string>> ready;
    for (const auto& [label, deg] : indegree)
        if (deg == 0) ready.insert({rank(label), label});

    std::vector<IntentSpec> ordered;
    ordered.reserve(selected.size());
    while (!ready.empty()) {
        auto [_, label] = *ready.begin();
        ready.erase(ready.begin());
        ordered.push_back(*catalog.find(label));
        for (const auto& next : dependents[label])
            if (--indegree[next] == 0) ready.insert({rank(next), next});
    }
    if (ordered.size() != selected.size())
        throw PipelineError(errors::kDecomposition, "cycle-detected",
                            "intent dependency cycle in matched set");
    return ordered;
}

std::vector<SubPrompt> decompose(const Prompt& prompt, const IntentCatalog& catalog) {
    auto matched = match_intents(prompt, catalog);

    // Catalog declaration index -> assigned sub-prompt id for this decomposition.
    std::map<int, int> decl_to_id;
    std::map<std::string, int> label_to_id;
    for (size_t i = 0; i < matched.size(); ++i) {
        int id = static_cast<int>(i) + 1;
        decl_to_id[catalog.declaration_index(matched[i].intent)] = id;
        label_to_id[matched[i].intent] = id;
    }

    std::vector<SubPrompt> subs;
    subs.reserve(matched.size());
    for (size_t i = 0; i < matched.size(); ++i) {
        const auto& spec = matched[i];
        int id = static_cast<int>(i) + 1;

        std::set<int> depends_on;
        for (const auto& dep : spec.depends_on_intents)
            depends_on.insert(label_to_id.at(dep));

        // Rewrite {R<declaration-index>} references into decomposition ids.
        std::string instantiated = text::substitute_placeholders(
            spec.sub_prompt_template,
            [&](const std::string& name, const std::string&) -> std::optional<std::string> {
                int k = chain_ref(name);
                if (k < 0) return std::nullopt;
                auto it = decl_to_id.find(k - 1);
                if (it == decl_to_id.end())
                    throw PipelineError(errors::kDecomposition, "invalid-catalog",
                                        "{R" + std::to_string(k) +
                                            "} references an intent outside this decomposition");
                return "{R" + std::to_string(it->second) + "}";
            });

        subs.push_back(make_sub_prompt(id, spec.intent, std::move(instantiated),
                                       std::move(depends_on), spec.target_domain));
    }
    validate_decomposition(subs);
    return subs;
}

} // namespace conductor
