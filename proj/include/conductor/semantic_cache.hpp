#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "conductor/core.hpp"

namespace conductor {

struct CacheKey {
    std::string normalized_text;     // normalize() of the substituted sub-prompt text
    std::string context_fingerprint; // stable hash of (user_id, role, attributes)
};

// Normalizes the text and fingerprints the context. The fingerprint covers
// user identity so responses never leak across users sharing a role.
CacheKey make_cache_key(std::string_view substituted_text, const UserContext& ctx);

// Token-set Jaccard gated by fingerprint equality: 0 across differing
// fingerprints, 1 on self, symmetric, in [0,1].
double similarity(const CacheKey& a, const CacheKey& b);

struct CachePolicy {
    std::size_t capacity = 1024;
    double similarity_threshold = 0.8;
    std::optional<std::chrono::milliseconds> ttl; // max idle age, swept by evict()
};

CachePolicy make_cache_policy(std::size_t capacity, double similarity_threshold,
                              std::optional<std::chrono::milliseconds> ttl = std::nullopt);

struct CacheEntry {
    CacheKey key;
    ServiceResponse value;
    std::string group_id; // representative key of the entry's semantic group
    std::chrono::steady_clock::time_point created_at;
    std::chrono::steady_clock::time_point last_used_at;
    std::uint64_t hit_count = 0;
    std::uint64_t last_used_seq = 0; // breaks last_used_at ties in LRU order
};

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t evictions = 0;
    std::size_t size = 0;
};

// In-process semantic key-value cache. All operations are atomic under one
// mutex; the injectable clock keeps recency behavior testable.
class SemanticCache {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    SemanticCache();
    explicit SemanticCache(Clock clock);

    // Best entry with similarity >= threshold (ties: most recently used).
    // Hits bump hit_count/last_used_at and return the stored value with
    // from_cache=true and the cache as source_service. Miss is not an error.
    std::optional<ServiceResponse> get(const CacheKey& key, const CachePolicy& policy);

    // Inserts (or refreshes the exact same key). group_id joins the best
    // existing group at or above the threshold, else the entry leads its own
    // group. Evicts LRU entries when capacity is exceeded.
    void put(const CacheKey& key, const ServiceResponse& value, const CachePolicy& policy);

    // Capacity eviction (ascending last_used_at) plus TTL sweep when set.
    void evict(const CachePolicy& policy);

    CacheStats stats() const;
    std::size_t size() const;
    void clear();

    std::vector<CacheEntry> snapshot() const; // test/inspection copy

private:
    void evict_locked(const CachePolicy& policy);
    static std::string representative(const CacheKey& key);

    mutable std::mutex mutex_;
    Clock clock_;
    std::uint64_t seq_ = 0;
    std::list<CacheEntry> entries_;
    CacheStats stats_;
};

} // namespace conductor
