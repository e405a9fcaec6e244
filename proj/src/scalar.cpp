#include "conductor/scalar.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace conductor {

double Scalar::as_double() const {
    if (is_int()) return static_cast<double>(std::get<std::int64_t>(value_));
    return std::get<double>(value_);
}

namespace {

std::string real_to_string(double v) {
    // Shortest fixed-notation round-trip: 8.65 -> "8.65", 100000.0 -> "100000".
    char buf[348];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
    if (ec != std::errc{}) throw std::runtime_error("real formatting failed");
    return std::string(buf, ptr);
}

std::string group_thousands(std::string digits) {
    std::string out;
    out.reserve(digits.size() + digits.size() / 3);
    int count = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (count != 0 && count % 3 == 0) out.push_back(',');
        out.push_back(*it);
        ++count;
    }
    return std::string(out.rbegin(), out.rend());
}

} // namespace

std::string Scalar::display() const {
    if (is_bool()) return as_bool() ? "true" : "false";
    if (is_int()) return std::to_string(std::get<std::int64_t>(value_));
    if (is_real()) return real_to_string(std::get<double>(value_));
    return as_string();
}

std::string Scalar::display_grouped() const {
    if (is_int()) {
        auto v = std::get<std::int64_t>(value_);
        std::string digits = std::to_string(v < 0 ? -v : v);
        return (v < 0 ? "-" : "") + group_thousands(std::move(digits));
    }
    if (is_real()) {
        double v = std::get<double>(value_);
        double integral = 0.0;
        double frac = std::modf(std::abs(v), &integral);
        std::string whole = group_thousands(real_to_string(integral));
        // real_to_string of an integral double may carry no fraction; strip
        // any trailing ".0"-style artifacts before grouping.
        if (auto dot = whole.find('.'); dot != std::string::npos) whole.erase(dot);
        std::string out = (v < 0 ? "-" : "") + whole;
        if (frac > 0.0) {
            std::string full = real_to_string(std::abs(v));
            if (auto dot = full.find('.'); dot != std::string::npos) out += full.substr(dot);
        }
        return out;
    }
    return display();
}

int Scalar::category() const {
    if (is_bool()) return 0;
    if (is_number()) return 1;
    return 2;
}

bool operator==(const Scalar& a, const Scalar& b) {
    if (a.is_number() && b.is_number()) return a.as_double() == b.as_double();
    return a.value_ == b.value_;
}

std::strong_ordering operator<=>(const Scalar& a, const Scalar& b) {
    if (int c = a.category() - b.category(); c != 0)
        return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a.is_bool()) {
        return static_cast<int>(a.as_bool()) <=> static_cast<int>(b.as_bool());
    }
    if (a.is_number()) {
        double x = a.as_double(), y = b.as_double();
        if (x < y) return std::strong_ordering::less;
        if (x > y) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    return a.as_string().compare(b.as_string()) <=> 0;
}

nlohmann::json Scalar::to_json() const {
    if (is_bool()) return as_bool();
    if (is_int()) return std::get<std::int64_t>(value_);
    if (is_real()) return std::get<double>(value_);
    return as_string();
}

Scalar Scalar::from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return Scalar(j.get<bool>());
    if (j.is_number_integer()) return Scalar(j.get<std::int64_t>());
    if (j.is_number()) return Scalar(j.get<double>());
    if (j.is_string()) return Scalar(j.get<std::string>());
    throw std::invalid_argument("scalar value must be bool, number or string");
}

} // namespace conductor
