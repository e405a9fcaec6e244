#include <doctest.h>

#include <random>

#include "conductor/core.hpp"
#include "conductor/errors.hpp"

using namespace conductor;

TEST_CASE("user context requires a non-empty user_id") {
    CHECK_NOTHROW(make_user_context("XXX", "retail-customer"));
    CHECK_THROWS_AS(make_user_context("", "retail-customer"), PipelineError);
    CHECK_THROWS_AS(make_user_context("   ", "retail-customer"), PipelineError);
}

TEST_CASE("prompt text must be non-empty after trimming") {
    auto ctx = make_user_context("u1", "retail-customer");
    Prompt p = make_prompt("  hello bank  ", ctx);
    CHECK(p.text == "hello bank");
    CHECK_THROWS_AS(make_prompt("", ctx), PipelineError);
    CHECK_THROWS_AS(make_prompt("   \t\n ", ctx), PipelineError);
}

TEST_CASE("sub-prompt construction enforces its invariants") {
    CHECK_NOTHROW(make_sub_prompt(2, "fd-catalog", "details + {R1}", {1}, "fixed-deposits"));
    // self-dependency
    CHECK_THROWS_AS(make_sub_prompt(2, "x", "t", {2}, "d"), PipelineError);
    // {R<k>} outside depends_on
    CHECK_THROWS_AS(make_sub_prompt(3, "x", "uses {R2}", {1}, "d"), PipelineError);
    // id must be >= 1
    CHECK_THROWS_AS(make_sub_prompt(0, "x", "t", {}, "d"), PipelineError);
    // non-chain placeholders are allowed in templates
    CHECK_NOTHROW(make_sub_prompt(1, "x", "uses {owner}", {}, "d"));
}

TEST_CASE("decomposition validation finds duplicates, dangling deps and cycles") {
    auto ok = std::vector<SubPrompt>{
        make_sub_prompt(1, "a", "t1", {}, "d"),
        make_sub_prompt(2, "b", "t2", {1}, "d"),
        make_sub_prompt(3, "c", "t3", {2}, "d"),
    };
    auto order = validate_decomposition(ok);
    CHECK(order == std::vector<int>{1, 2, 3});

    auto dangling = std::vector<SubPrompt>{make_sub_prompt(1, "a", "t", {}, "d"),
                                           make_sub_prompt(2, "b", "t", {9}, "d")};
    CHECK_THROWS_AS(validate_decomposition(dangling), PipelineError);

    // Forward references are allowed as long as the relation stays acyclic.
    auto forward = std::vector<SubPrompt>{make_sub_prompt(1, "a", "t", {2}, "d"),
                                          make_sub_prompt(2, "b", "t", {}, "d")};
    CHECK(validate_decomposition(forward) == std::vector<int>{2, 1});

    auto cyclic = std::vector<SubPrompt>{make_sub_prompt(1, "a", "t", {2}, "d"),
                                         make_sub_prompt(2, "b", "t", {1}, "d")};
    CHECK_THROWS_AS(validate_decomposition(cyclic), PipelineError);
}

TEST_CASE("service response invariants") {
    CHECK_NOTHROW(make_service_response(1, "answer", {}, "fd-service", false,
                                        std::chrono::microseconds(1)));
    // empty text rejected
    CHECK_THROWS_AS(make_service_response(1, "", {}, "fd-service", false,
                                          std::chrono::microseconds(1)),
                    PipelineError);
    // a cached response must name the cache
    CHECK_THROWS_AS(make_service_response(1, "answer", {}, "fd-service", true,
                                          std::chrono::microseconds(1)),
                    PipelineError);
    CHECK_NOTHROW(make_service_response(1, "answer", {}, kCacheServiceId, true,
                                        std::chrono::microseconds(1)));
}

// Construction-time rejection over randomized field combinations: a value is
// accepted exactly when none of the declared invariants is violated.
TEST_CASE("randomized construction accepts iff invariants hold") {
    std::mt19937 rng(11);
    for (int i = 0; i < 500; ++i) {
        int id = static_cast<int>(rng() % 4); // 0..3, 0 invalid
        std::set<int> deps;
        for (int d = 1; d <= 3; ++d)
            if (rng() % 3 == 0) deps.insert(d);
        bool self_dep = id >= 1 && deps.count(id) > 0;
        bool use_chain_ref = rng() % 2 == 0;
        int ref = 1 + static_cast<int>(rng() % 3);
        std::string tmpl = use_chain_ref ? "text {R" + std::to_string(ref) + "}" : "text";
        bool bad_ref = use_chain_ref && !deps.count(ref);

        bool expect_ok = id >= 1 && !self_dep && !bad_ref;
        if (expect_ok) {
            CHECK_NOTHROW(make_sub_prompt(id, "intent", tmpl, deps, "domain"));
        } else {
            CHECK_THROWS_AS(make_sub_prompt(id, "intent", tmpl, deps, "domain"), PipelineError);
        }
    }
}

TEST_CASE("canonical serialization excludes timing fields") {
    ServiceResponse r = make_service_response(1, "answer", {{"fee_percent", Scalar(1)}},
                                              "policy-service", false,
                                              std::chrono::microseconds(1234));
    auto with = to_json(r, true);
    auto without = to_json(r, false);
    CHECK(with.contains("elapsed_us"));
    CHECK_FALSE(without.contains("elapsed_us"));
    CHECK(without.at("facts").at("fee_percent") == 1);
}
