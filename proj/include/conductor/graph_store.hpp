#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "conductor/scalar.hpp"

namespace conductor {

struct KGNode {
    std::string node_id;
    std::string kind;
    std::map<std::string, Scalar> attributes;
};

struct KGEdge {
    std::string from;
    std::string to;
    std::string relation;
};

struct DataSourceDescriptor {
    std::string source_id;
    std::string uri;     // file path (resolved against the config directory)
    std::string format;  // currently "json"
};

enum class FilterOp { eq, lt, gt, contains };

FilterOp filter_op_from_string(const std::string& s); // throws unknown-attribute-operator
std::string to_string(FilterOp op);

struct AttributeFilter {
    std::string key;
    FilterOp op = FilterOp::eq;
    Scalar value;
};

// One-hop constraint: the candidate node must share an edge with the given
// relation whose other endpoint satisfies the nested kind/filters.
struct RelationConstraint {
    std::string relation;
    std::string node_kind;                  // empty = any kind
    std::vector<AttributeFilter> filters;
};

struct KGQuery {
    std::string node_kind;                  // empty = any kind
    std::vector<AttributeFilter> attribute_filters;
    std::vector<RelationConstraint> relation_constraints;
    std::optional<int> limit;

    bool empty() const {
        return node_kind.empty() && attribute_filters.empty() &&
               relation_constraints.empty();
    }

    nlohmann::json to_json() const;
    static KGQuery from_json(const nlohmann::json& j);
};

struct ContextBundle {
    std::string kg_id;
    int sub_prompt_id = 0;
    std::vector<KGNode> matched_nodes;      // deterministic node_id order
    std::vector<KGEdge> matched_edges;      // induced edges among matched nodes
    std::map<std::string, Scalar> rendered_facts;

    nlohmann::json to_json() const;
    static ContextBundle from_json(const nlohmann::json& j);
};

// Filter semantics shared by the query engine and the test oracle.
bool filter_matches(const KGNode& node, const AttributeFilter& f);

// Immutable snapshot of one knowledge graph. Load validates node-id
// uniqueness, edge endpoints, and acyclicity of the hierarchy relations.
class KnowledgeGraph {
public:
    static KnowledgeGraph from_json(const nlohmann::json& doc,
                                    DataSourceDescriptor source = {});
    // io-error / parse-error / schema-error / cycle-error
    static KnowledgeGraph load(const DataSourceDescriptor& desc);

    const std::string& kg_id() const { return kg_id_; }
    const DataSourceDescriptor& source() const { return source_; }
    const std::vector<KGNode>& nodes() const { return nodes_; } // sorted by node_id
    const std::vector<KGEdge>& edges() const { return edges_; }
    const std::map<std::string, std::vector<std::string>>& fact_exports() const {
        return fact_exports_;
    }

    const KGNode* find_node(const std::string& node_id) const;

    // All nodes satisfying kind + filters + relation constraints, truncated
    // to limit in node_id order; induced edges; facts per fact_exports.
    ContextBundle query(const KGQuery& q) const;

    // The whole graph as a bundle (bench scenarios without rule narrowing).
    ContextBundle whole_bundle() const;

    nlohmann::json to_json() const;

private:
    KnowledgeGraph() = default;
    void build_indexes();
    std::vector<const KGNode*> candidates(const KGQuery& q) const;
    bool satisfies_relations(const KGNode& node,
                             const std::vector<RelationConstraint>& constraints) const;
    ContextBundle bundle_from(std::vector<const KGNode*> matched) const;

    std::string kg_id_;
    DataSourceDescriptor source_;
    std::vector<KGNode> nodes_;
    std::vector<KGEdge> edges_;
    std::map<std::string, std::vector<std::string>> fact_exports_; // kind -> exported keys
    std::vector<std::string> hierarchy_relations_;

    std::map<std::string, size_t> node_index_;                      // id -> nodes_ index
    std::map<std::string, std::vector<size_t>> kind_index_;
    // Exact-match index per (kind, key): value -> node indexes. Range and
    // contains filters scan the kind's candidates.
    std::map<std::string, std::map<std::string, std::map<Scalar, std::vector<size_t>>>> eq_index_;
    std::map<std::string, std::vector<size_t>> edges_by_node_;      // id -> edges_ indexes
};

// Thread-safe registry of graph snapshots; replace is atomic with respect to
// concurrent readers (readers hold shared_ptr snapshots).
class GraphRegistry {
public:
    // duplicate-kg-id unless replace is set.
    void register_graph(KnowledgeGraph graph, bool replace = false);
    std::shared_ptr<const KnowledgeGraph> get(const std::string& kg_id) const;
    std::shared_ptr<const KnowledgeGraph> require(const std::string& kg_id) const;
    std::vector<std::string> ids() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const KnowledgeGraph>> graphs_;
};

} // namespace conductor
