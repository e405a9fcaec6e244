#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <variant>

#include <json.hpp>

namespace conductor {

// Scalar attribute/fact value: bool, integer, real or string. Integer and
// real values compare numerically against each other, so a config author may
// write 100000 where a graph stores 100000.0 and filters still match.
class Scalar {
public:
    Scalar() : value_(std::string{}) {}
    Scalar(bool v) : value_(v) {}
    Scalar(std::int64_t v) : value_(v) {}
    Scalar(int v) : value_(static_cast<std::int64_t>(v)) {}
    Scalar(double v) : value_(v) {}
    Scalar(const char* v) : value_(std::string(v)) {}
    Scalar(std::string v) : value_(std::move(v)) {}

    bool is_bool() const { return std::holds_alternative<bool>(value_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(value_); }
    bool is_real() const { return std::holds_alternative<double>(value_); }
    bool is_number() const { return is_int() || is_real(); }
    bool is_string() const { return std::holds_alternative<std::string>(value_); }

    bool as_bool() const { return std::get<bool>(value_); }
    double as_double() const;
    const std::string& as_string() const { return std::get<std::string>(value_); }

    // Plain rendering: "saving", "true", "100000", "8.65" (shortest
    // round-trip for reals, so 9.0 renders as "9").
    std::string display() const;
    // Integer rendering with western thousands grouping: 100000 -> "100,000".
    // Non-integral reals keep their fraction; strings/bools fall back to
    // display().
    std::string display_grouped() const;

    friend bool operator==(const Scalar& a, const Scalar& b);
    friend std::strong_ordering operator<=>(const Scalar& a, const Scalar& b);

    nlohmann::json to_json() const;
    static Scalar from_json(const nlohmann::json& j);

private:
    // Category rank for cross-type ordering: bool < number < string.
    int category() const;

    std::variant<bool, std::int64_t, double, std::string> value_;
};

} // namespace conductor
