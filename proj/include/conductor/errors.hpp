#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace conductor {

// One exception type for every pipeline error path. `stage` names the phase
// that failed (context-validation, decomposition, planning, execution, ...)
// and `code` is the stable machine-readable identifier surfaced in the
// gateway's error documents ({stage, code, message}).
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, std::string code, const std::string& message)
        : std::runtime_error(message), stage_(std::move(stage)), code_(std::move(code)) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& code() const noexcept { return code_; }

private:
    std::string stage_;
    std::string code_;
};

namespace errors {
// Stage labels.
inline constexpr const char* kConfig = "config";
inline constexpr const char* kRequest = "request";
inline constexpr const char* kContextValidation = "context-validation";
inline constexpr const char* kDecomposition = "decomposition";
inline constexpr const char* kPlanning = "planning";
inline constexpr const char* kExecution = "execution";
inline constexpr const char* kAggregation = "aggregation";
inline constexpr const char* kGraphStore = "graph-store";
inline constexpr const char* kService = "service";
inline constexpr const char* kBench = "bench";
} // namespace errors

} // namespace conductor
