#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "conductor/core.hpp"
#include "conductor/graph_store.hpp"

namespace conductor {

struct ServiceDescriptor {
    std::string service_id;
    std::string domain;  // routing key; one service per domain
    std::string kind;    // "mock" | "http"
    std::string endpoint;                              // http kind
    std::map<std::string, std::string> answer_templates; // mock kind: intent -> template
    std::chrono::milliseconds simulated_latency{0};    // mock kind
    std::chrono::milliseconds http_timeout{2000};      // http kind
    int max_in_flight = 4;                             // http kind
};

// Validates the kind-specific requirements (http needs an endpoint, mock
// needs answer templates).
ServiceDescriptor make_service_descriptor(ServiceDescriptor d);

struct ServiceRequest {
    std::string intent;   // selects the mock answer template; not on the wire
    std::string sub_text; // chained sub-prompt text
    ContextBundle context;
};

struct HealthStatus {
    bool healthy = false;
    std::string reason; // empty when healthy
};

class Service {
public:
    explicit Service(ServiceDescriptor descriptor) : descriptor_(std::move(descriptor)) {}
    virtual ~Service() = default;

    const ServiceDescriptor& descriptor() const { return descriptor_; }

    virtual ServiceResponse invoke(const ServiceRequest& request) = 0;
    virtual HealthStatus health() = 0;

protected:
    ServiceDescriptor descriptor_;
};

// Deterministic template renderer over the retrieved context facts; the
// default backend that keeps the whole system testable offline.
class MockService : public Service {
public:
    explicit MockService(ServiceDescriptor descriptor);
    ServiceResponse invoke(const ServiceRequest& request) override;
    HealthStatus health() override { return HealthStatus{true, ""}; }
};

// Adapter for an external endpoint speaking the pinned wire format:
// POST {sub_text, context} -> {text, facts}. Failures surface as
// service-unavailable. In-flight requests are bounded per endpoint.
class HttpService : public Service {
public:
    explicit HttpService(ServiceDescriptor descriptor);
    ServiceResponse invoke(const ServiceRequest& request) override;
    HealthStatus health() override;

private:
    std::string base_url_;
    std::string path_;
    std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    int in_flight_ = 0;
};

// Test helper: wraps a function as a service.
class FunctionService : public Service {
public:
    using Fn = std::function<ServiceResponse(const ServiceRequest&)>;
    FunctionService(ServiceDescriptor descriptor, Fn fn)
        : Service(std::move(descriptor)), fn_(std::move(fn)) {}
    ServiceResponse invoke(const ServiceRequest& request) override { return fn_(request); }
    HealthStatus health() override { return HealthStatus{true, ""}; }

private:
    Fn fn_;
};

std::shared_ptr<Service> make_service(ServiceDescriptor descriptor);

// Domain -> service map; at most one service per domain.
class ServiceRegistry {
public:
    void register_service(std::shared_ptr<Service> service, bool replace = false);
    std::shared_ptr<Service> for_domain(const std::string& domain) const;
    std::shared_ptr<Service> require_domain(const std::string& domain) const;
    std::vector<std::string> domains() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Service>> by_domain_;
};

// Mock answer rendering, exposed for reuse by the aggregator's conclusion
// templates: {name} -> fact display, {name:commas} -> grouped integers.
// Missing facts raise `error_code` listing the absent names.
std::string render_fact_template(const std::string& tmpl,
                                 const std::map<std::string, Scalar>& facts,
                                 const char* error_code);

} // namespace conductor
