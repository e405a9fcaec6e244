#include "conductor/graph_store.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "conductor/errors.hpp"

namespace conductor {

FilterOp filter_op_from_string(const std::string& s) {
    if (s == "eq") return FilterOp::eq;
    if (s == "lt") return FilterOp::lt;
    if (s == "gt") return FilterOp::gt;
    if (s == "contains") return FilterOp::contains;
    throw PipelineError(errors::kGraphStore, "unknown-attribute-operator",
                        "unknown attribute filter operator '" + s + "'");
}

std::string to_string(FilterOp op) {
    switch (op) {
        case FilterOp::eq: return "eq";
        case FilterOp::lt: return "lt";
        case FilterOp::gt: return "gt";
        case FilterOp::contains: return "contains";
    }
    return "eq";
}

bool filter_matches(const KGNode& node, const AttributeFilter& f) {
    auto it = node.attributes.find(f.key);
    if (it == node.attributes.end()) return false;
    const Scalar& v = it->second;
    switch (f.op) {
        case FilterOp::eq:
            return v == f.value;
        case FilterOp::lt:
        case FilterOp::gt: {
            // Numbers compare numerically, strings lexicographically;
            // mixed categories never match.
            bool comparable = (v.is_number() && f.value.is_number()) ||
                              (v.is_string() && f.value.is_string());
            if (!comparable) return false;
            return f.op == FilterOp::lt ? (v <=> f.value) < 0 : (v <=> f.value) > 0;
        }
        case FilterOp::contains:
            if (!v.is_string() || !f.value.is_string()) return false;
            return v.as_string().find(f.value.as_string()) != std::string::npos;
    }
    return false;
}

nlohmann::json KGQuery::to_json() const {
    auto filters = nlohmann::json::array();
    for (const auto& f : attribute_filters)
        filters.push_back({{"key", f.key}, {"op", to_string(f.op)}, {"value", f.value.to_json()}});
    auto relations = nlohmann::json::array();
    for (const auto& rc : relation_constraints) {
        auto nested = nlohmann::json::array();
        for (const auto& f : rc.filters)
            nested.push_back({{"key", f.key}, {"op", to_string(f.op)}, {"value", f.value.to_json()}});
        relations.push_back({{"relation", rc.relation},
                             {"node_kind", rc.node_kind},
                             {"filters", std::move(nested)}});
    }
    nlohmann::json j{{"node_kind", node_kind},
                     {"filters", std::move(filters)},
                     {"relations", std::move(relations)}};
    if (limit) j["limit"] = *limit;
    return j;
}

namespace {

AttributeFilter filter_from_json(const nlohmann::json& j) {
    return AttributeFilter{j.at("key").get<std::string>(),
                           filter_op_from_string(j.at("op").get<std::string>()),
                           Scalar::from_json(j.at("value"))};
}

} // namespace

KGQuery KGQuery::from_json(const nlohmann::json& j) {
    KGQuery q;
    q.node_kind = j.value("node_kind", std::string{});
    for (const auto& f : j.value("filters", nlohmann::json::array()))
        q.attribute_filters.push_back(filter_from_json(f));
    for (const auto& rc : j.value("relations", nlohmann::json::array())) {
        RelationConstraint c;
        c.relation = rc.at("relation").get<std::string>();
        c.node_kind = rc.value("node_kind", std::string{});
        for (const auto& f : rc.value("filters", nlohmann::json::array()))
            c.filters.push_back(filter_from_json(f));
        q.relation_constraints.push_back(std::move(c));
    }
    if (j.contains("limit")) {
        int limit = j.at("limit").get<int>();
        if (limit < 1)
            throw PipelineError(errors::kGraphStore, "schema-error",
                                "query limit must be positive");
        q.limit = limit;
    }
    if (q.empty())
        throw PipelineError(errors::kGraphStore, "schema-error",
                            "query must constrain kind, attributes or relations");
    return q;
}

nlohmann::json ContextBundle::to_json() const {
    auto nodes = nlohmann::json::array();
    for (const auto& n : matched_nodes) {
        auto attrs = nlohmann::json::object();
        for (const auto& [k, v] : n.attributes) attrs[k] = v.to_json();
        nodes.push_back({{"id", n.node_id}, {"kind", n.kind}, {"attributes", std::move(attrs)}});
    }
    auto edges = nlohmann::json::array();
    for (const auto& e : matched_edges)
        edges.push_back({{"from", e.from}, {"to", e.to}, {"relation", e.relation}});
    auto facts = nlohmann::json::object();
    for (const auto& [k, v] : rendered_facts) facts[k] = v.to_json();
    return nlohmann::json{{"kg_id", kg_id},
                          {"sub_prompt_id", sub_prompt_id},
                          {"matched_nodes", std::move(nodes)},
                          {"matched_edges", std::move(edges)},
                          {"rendered_facts", std::move(facts)}};
}

ContextBundle ContextBundle::from_json(const nlohmann::json& j) {
    ContextBundle b;
    b.kg_id = j.value("kg_id", std::string{});
    b.sub_prompt_id = j.value("sub_prompt_id", 0);
    for (const auto& n : j.value("matched_nodes", nlohmann::json::array())) {
        KGNode node{n.at("id").get<std::string>(), n.at("kind").get<std::string>(), {}};
        for (auto it = n.at("attributes").begin(); it != n.at("attributes").end(); ++it)
            node.attributes.emplace(it.key(), Scalar::from_json(it.value()));
        b.matched_nodes.push_back(std::move(node));
    }
    for (const auto& e : j.value("matched_edges", nlohmann::json::array()))
        b.matched_edges.push_back(KGEdge{e.at("from").get<std::string>(),
                                         e.at("to").get<std::string>(),
                                         e.at("relation").get<std::string>()});
    const auto facts = j.value("rendered_facts", nlohmann::json::object());
    for (auto it = facts.begin(); it != facts.end(); ++it)
        b.rendered_facts.emplace(it.key(), Scalar::from_json(it.value()));
    return b;
}

KnowledgeGraph KnowledgeGraph::from_json(const nlohmann::json& doc, DataSourceDescriptor source) {
    KnowledgeGraph g;
    g.source_ = std::move(source);
    try {
        g.kg_id_ = doc.at("kg_id").get<std::string>();
        for (const auto& n : doc.value("nodes", nlohmann::json::array())) {
            KGNode node{n.at("id").get<std::string>(), n.at("kind").get<std::string>(), {}};
            if (node.node_id.empty())
                throw PipelineError(errors::kGraphStore, "schema-error", "node id must be non-empty");
            if (node.kind.empty())
                throw PipelineError(errors::kGraphStore, "schema-error",
                                    "node '" + node.node_id + "' has empty kind");
            const auto attrs = n.value("attributes", nlohmann::json::object());
            for (auto it = attrs.begin(); it != attrs.end(); ++it)
                node.attributes.emplace(it.key(), Scalar::from_json(it.value()));
            g.nodes_.push_back(std::move(node));
        }
        for (const auto& e : doc.value("edges", nlohmann::json::array()))
            g.edges_.push_back(KGEdge{e.at("from").get<std::string>(),
                                      e.at("to").get<std::string>(),
                                      e.at("relation").get<std::string>()});
        const auto exports = doc.value("fact_exports", nlohmann::json::object());
        for (auto it = exports.begin(); it != exports.end(); ++it)
            g.fact_exports_[it.key()] = it.value().get<std::vector<std::string>>();
        g.hierarchy_relations_ =
            doc.value("hierarchy_relations", std::vector<std::string>{"has-subdomain"});
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(errors::kGraphStore, "schema-error",
                            std::string("malformed knowledge-graph document: ") + e.what());
    }
    if (g.kg_id_.empty())
        throw PipelineError(errors::kGraphStore, "schema-error", "kg_id must be non-empty");

    std::sort(g.nodes_.begin(), g.nodes_.end(),
              [](const KGNode& a, const KGNode& b) { return a.node_id < b.node_id; });
    for (size_t i = 0; i + 1 < g.nodes_.size(); ++i)
        if (g.nodes_[i].node_id == g.nodes_[i + 1].node_id)
            throw PipelineError(errors::kGraphStore, "schema-error",
                                "duplicate node id '" + g.nodes_[i].node_id + "'");

    g.build_indexes();

    for (const auto& e : g.edges_) {
        if (!g.node_index_.count(e.from) || !g.node_index_.count(e.to))
            throw PipelineError(errors::kGraphStore, "schema-error",
                                "edge " + e.from + " -" + e.relation + "-> " + e.to +
                                    " references a missing node");
    }

    // Hierarchy relations must form a DAG.
    std::set<std::string> hier(g.hierarchy_relations_.begin(), g.hierarchy_relations_.end());
    std::map<std::string, std::vector<std::string>> children;
    std::map<std::string, int> indegree;
    for (const auto& e : g.edges_) {
        if (!hier.count(e.relation)) continue;
        children[e.from].push_back(e.to);
        ++indegree[e.to];
        indegree.emplace(e.from, indegree[e.from]);
    }
    std::vector<std::string> queue;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) queue.push_back(id);
    size_t seen = 0;
    while (!queue.empty()) {
        auto id = queue.back();
        queue.pop_back();
        ++seen;
        for (const auto& child : children[id])
            if (--indegree[child] == 0) queue.push_back(child);
    }
    if (seen != indegree.size())
        throw PipelineError(errors::kGraphStore, "cycle-error",
                            "hierarchy relations form a cycle in graph '" + g.kg_id_ + "'");
    return g;
}

KnowledgeGraph KnowledgeGraph::load(const DataSourceDescriptor& desc) {
    if (desc.format != "json")
        throw PipelineError(errors::kGraphStore, "io-error",
                            "unsupported knowledge-graph format '" + desc.format + "'");
    std::ifstream in(desc.uri);
    if (!in)
        throw PipelineError(errors::kGraphStore, "io-error",
                            "cannot read knowledge-graph file '" + desc.uri + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(errors::kGraphStore, "parse-error",
                            "invalid JSON in '" + desc.uri + "': " + e.what());
    }
    return from_json(doc, desc);
}

void KnowledgeGraph::build_indexes() {
    for (size_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        node_index_[n.node_id] = i;
        kind_index_[n.kind].push_back(i);
        for (const auto& [key, value] : n.attributes)
            eq_index_[n.kind][key][value].push_back(i);
    }
    for (size_t i = 0; i < edges_.size(); ++i) {
        edges_by_node_[edges_[i].from].push_back(i);
        edges_by_node_[edges_[i].to].push_back(i);
    }
}

const KGNode* KnowledgeGraph::find_node(const std::string& node_id) const {
    auto it = node_index_.find(node_id);
    return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

std::vector<const KGNode*> KnowledgeGraph::candidates(const KGQuery& q) const {
    // Seed from the narrowest exact-match index available, then verify all
    // predicates on the survivors.
    std::vector<size_t> seed;
    bool seeded = false;
    if (!q.node_kind.empty()) {
        auto it = kind_index_.find(q.node_kind);
        if (it == kind_index_.end()) return {};
        seed = it->second;
        seeded = true;
        for (const auto& f : q.attribute_filters) {
            if (f.op != FilterOp::eq) continue;
            auto kind_it = eq_index_.find(q.node_kind);
            if (kind_it == eq_index_.end()) return {};
            auto key_it = kind_it->second.find(f.key);
            if (key_it == kind_it->second.end()) return {};
            auto val_it = key_it->second.find(f.value);
            if (val_it == key_it->second.end()) return {};
            if (val_it->second.size() < seed.size()) seed = val_it->second;
        }
    }
    if (!seeded) {
        seed.resize(nodes_.size());
        for (size_t i = 0; i < nodes_.size(); ++i) seed[i] = i;
    }
    std::vector<const KGNode*> out;
    out.reserve(seed.size());
    for (size_t i : seed) out.push_back(&nodes_[i]);
    return out;
}

bool KnowledgeGraph::satisfies_relations(
    const KGNode& node, const std::vector<RelationConstraint>& constraints) const {
    for (const auto& c : constraints) {
        bool found = false;
        auto it = edges_by_node_.find(node.node_id);
        if (it != edges_by_node_.end()) {
            for (size_t ei : it->second) {
                const auto& e = edges_[ei];
                if (e.relation != c.relation) continue;
                const std::string& other_id = e.from == node.node_id ? e.to : e.from;
                const KGNode* other = find_node(other_id);
                if (!other) continue;
                if (!c.node_kind.empty() && other->kind != c.node_kind) continue;
                bool all = true;
                for (const auto& f : c.filters)
                    if (!filter_matches(*other, f)) { all = false; break; }
                if (all) { found = true; break; }
            }
        }
        if (!found) return false;
    }
    return true;
}

ContextBundle KnowledgeGraph::bundle_from(std::vector<const KGNode*> matched) const {
    ContextBundle bundle;
    bundle.kg_id = kg_id_;
    std::set<std::string> ids;
    for (const KGNode* n : matched) {
        bundle.matched_nodes.push_back(*n);
        ids.insert(n->node_id);
    }
    for (const auto& e : edges_)
        if (ids.count(e.from) && ids.count(e.to)) bundle.matched_edges.push_back(e);

    // Fact extraction: match_count plus, per exported key, a collapsed fact
    // when all carriers agree, indexed <key>_<i> facts when several nodes
    // carry it, and a joined <key>_list rendering.
    bundle.rendered_facts.emplace("match_count",
                                  Scalar(static_cast<std::int64_t>(bundle.matched_nodes.size())));
    std::map<std::string, std::vector<Scalar>> pooled;
    for (const auto& node : bundle.matched_nodes) {
        auto exp = fact_exports_.find(node.kind);
        if (exp == fact_exports_.end()) continue;
        for (const auto& key : exp->second) {
            auto attr = node.attributes.find(key);
            if (attr != node.attributes.end()) pooled[key].push_back(attr->second);
        }
    }
    for (const auto& [key, values] : pooled) {
        bool uniform = std::all_of(values.begin(), values.end(),
                                   [&](const Scalar& v) { return v == values.front(); });
        if (uniform) bundle.rendered_facts.emplace(key, values.front());
        if (values.size() >= 2) {
            std::string joined;
            for (size_t i = 0; i < values.size(); ++i) {
                bundle.rendered_facts.emplace(key + "_" + std::to_string(i + 1), values[i]);
                if (i) joined += ", ";
                joined += values[i].display();
            }
            bundle.rendered_facts.emplace(key + "_list", Scalar(joined));
        }
    }
    return bundle;
}

ContextBundle KnowledgeGraph::query(const KGQuery& q) const {
    std::vector<const KGNode*> matched;
    for (const KGNode* n : candidates(q)) {
        if (!q.node_kind.empty() && n->kind != q.node_kind) continue;
        bool ok = true;
        for (const auto& f : q.attribute_filters)
            if (!filter_matches(*n, f)) { ok = false; break; }
        if (!ok) continue;
        if (!satisfies_relations(*n, q.relation_constraints)) continue;
        matched.push_back(n);
    }
    // Candidates come from indexes keyed by insertion order of a sorted node
    // vector, so they are already in node_id order; keep it explicit anyway.
    std::sort(matched.begin(), matched.end(),
              [](const KGNode* a, const KGNode* b) { return a->node_id < b->node_id; });
    if (q.limit && matched.size() > static_cast<size_t>(*q.limit))
        matched.resize(static_cast<size_t>(*q.limit));
    return bundle_from(std::move(matched));
}

ContextBundle KnowledgeGraph::whole_bundle() const {
    std::vector<const KGNode*> all;
    all.reserve(nodes_.size());
    for (const auto& n : nodes_) all.push_back(&n);
    return bundle_from(std::move(all));
}

nlohmann::json KnowledgeGraph::to_json() const {
    auto nodes = nlohmann::json::array();
    for (const auto& n : nodes_) {
        auto attrs = nlohmann::json::object();
        for (const auto& [k, v] : n.attributes) attrs[k] = v.to_json();
        nodes.push_back({{"id", n.node_id}, {"kind", n.kind}, {"attributes", std::move(attrs)}});
    }
    auto edges = nlohmann::json::array();
    for (const auto& e : edges_)
        edges.push_back({{"from", e.from}, {"to", e.to}, {"relation", e.relation}});
    auto exports = nlohmann::json::object();
    for (const auto& [kind, keys] : fact_exports_) exports[kind] = keys;
    return nlohmann::json{{"kg_id", kg_id_},
                          {"nodes", std::move(nodes)},
                          {"edges", std::move(edges)},
                          {"fact_exports", std::move(exports)},
                          {"hierarchy_relations", hierarchy_relations_}};
}

void GraphRegistry::register_graph(KnowledgeGraph graph, bool replace) {
    auto snapshot = std::make_shared<const KnowledgeGraph>(std::move(graph));
    std::lock_guard lock(mutex_);
    auto [it, inserted] = graphs_.emplace(snapshot->kg_id(), snapshot);
    if (!inserted) {
        if (!replace)
            throw PipelineError(errors::kGraphStore, "duplicate-kg-id",
                                "knowledge graph '" + snapshot->kg_id() +
                                    "' is already registered");
        it->second = snapshot;
    }
}

std::shared_ptr<const KnowledgeGraph> GraphRegistry::get(const std::string& kg_id) const {
    std::lock_guard lock(mutex_);
    auto it = graphs_.find(kg_id);
    return it == graphs_.end() ? nullptr : it->second;
}

std::shared_ptr<const KnowledgeGraph> GraphRegistry::require(const std::string& kg_id) const {
    auto g = get(kg_id);
    if (!g)
        throw PipelineError(errors::kGraphStore, "unknown-kg-id",
                            "knowledge graph '" + kg_id + "' is not registered");
    return g;
}

std::vector<std::string> GraphRegistry::ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    out.reserve(graphs_.size());
    for (const auto& [id, _] : graphs_) out.push_back(id);
    return out;
}

} // namespace conductor
