#include "conductor/semantic_cache.hpp"

#include <algorithm>

#include "conductor/errors.hpp"
#include "conductor/text.hpp"

namespace conductor {

CacheKey make_cache_key(std::string_view substituted_text, const UserContext& ctx) {
    std::string canon = ctx.user_id;
    canon += '\x1f';
    canon += ctx.role;
    for (const auto& [k, v] : ctx.attributes) {
        canon += '\x1f';
        canon += k;
        canon += '=';
        canon += v.display();
    }
    return CacheKey{text::normalize(substituted_text), text::fnv1a64_hex(canon)};
}

double similarity(const CacheKey& a, const CacheKey& b) {
    if (a.context_fingerprint != b.context_fingerprint) return 0.0;
    return text::jaccard(text::token_set(a.normalized_text),
                         text::token_set(b.normalized_text));
}

CachePolicy make_cache_policy(std::size_t capacity, double similarity_threshold,
                              std::optional<std::chrono::milliseconds> ttl) {
    if (capacity < 1)
        throw PipelineError(errors::kConfig, "invalid-cache-policy", "capacity must be >= 1");
    if (!(similarity_threshold > 0.0) || similarity_threshold > 1.0)
        throw PipelineError(errors::kConfig, "invalid-cache-policy",
                            "similarity_threshold must be in (0, 1]");
    return CachePolicy{capacity, similarity_threshold, ttl};
}

SemanticCache::SemanticCache() : clock_([] { return std::chrono::steady_clock::now(); }) {}

SemanticCache::SemanticCache(Clock clock) : clock_(std::move(clock)) {}

std::string SemanticCache::representative(const CacheKey& key) {
    return key.context_fingerprint + "|" + key.normalized_text;
}

std::optional<ServiceResponse> SemanticCache::get(const CacheKey& key,
                                                  const CachePolicy& policy) {
    std::lock_guard lock(mutex_);
    CacheEntry* best = nullptr;
    double best_sim = 0.0;
    for (auto& e : entries_) {
        if (e.key.context_fingerprint != key.context_fingerprint) continue;
        double sim = similarity(e.key, key);
        if (sim < policy.similarity_threshold) continue;
        if (!best || sim > best_sim ||
            (sim == best_sim && e.last_used_seq > best->last_used_seq)) {
            best = &e;
            best_sim = sim;
        }
    }
    if (!best) {
        ++stats_.misses;
        return std::nullopt;
    }
    ++stats_.hits;
    ++best->hit_count;
    best->last_used_at = clock_();
    best->last_used_seq = ++seq_;
    ServiceResponse out = best->value;
    out.from_cache = true;
    out.source_service = kCacheServiceId;
    return out;
}

void SemanticCache::put(const CacheKey& key, const ServiceResponse& value,
                        const CachePolicy& policy) {
    std::lock_guard lock(mutex_);
    auto now = clock_();

    // Exact key already present: refresh the value in place.
    for (auto& e : entries_) {
        if (e.key.context_fingerprint == key.context_fingerprint &&
            e.key.normalized_text == key.normalized_text) {
            e.value = value;
            e.value.from_cache = false;
            e.last_used_at = now;
            e.last_used_seq = ++seq_;
            return;
        }
    }

    // Join the most similar existing group at or above the threshold.
    std::string group = representative(key);
    double best_sim = 0.0;
    for (const auto& e : entries_) {
        double sim = similarity(e.key, key);
        if (sim >= policy.similarity_threshold && sim > best_sim) {
            best_sim = sim;
            group = e.group_id;
        }
    }

    CacheEntry entry;
    entry.key = key;
    entry.value = value;
    entry.value.from_cache = false;
    entry.group_id = std::move(group);
    entry.created_at = now;
    entry.last_used_at = now;
    entry.hit_count = 0;
    entry.last_used_seq = ++seq_;
    entries_.push_back(std::move(entry));
    evict_locked(policy);
}

void SemanticCache::evict(const CachePolicy& policy) {
    std::lock_guard lock(mutex_);
    evict_locked(policy);
}

void SemanticCache::evict_locked(const CachePolicy& policy) {
    if (policy.ttl) {
        auto now = clock_();
        for (auto it = entries_.begin(); it != entries_.end();) {
            if (now - it->last_used_at > *policy.ttl) {
                it = entries_.erase(it);
                ++stats_.evictions;
            } else {
                ++it;
            }
        }
    }
    while (entries_.size() > policy.capacity) {
        auto victim = entries_.begin();
        for (auto it = std::next(entries_.begin()); it != entries_.end(); ++it) {
            if (it->last_used_at < victim->last_used_at ||
                (it->last_used_at == victim->last_used_at &&
                 it->last_used_seq < victim->last_used_seq))
                victim = it;
        }
        entries_.erase(victim);
        ++stats_.evictions;
    }
}

CacheStats SemanticCache::stats() const {
    std::lock_guard lock(mutex_);
    CacheStats s = stats_;
    s.size = entries_.size();
    return s;
}

std::size_t SemanticCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void SemanticCache::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
    stats_ = CacheStats{};
    seq_ = 0;
}

std::vector<CacheEntry> SemanticCache::snapshot() const {
    std::lock_guard lock(mutex_);
    return {entries_.begin(), entries_.end()};
}

} // namespace conductor
