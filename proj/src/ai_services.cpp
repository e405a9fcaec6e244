#include "conductor/ai_services.hpp"

#include <condition_variable>
#include <thread>

#include <httplib.h>

#include "conductor/errors.hpp"
#include "conductor/text.hpp"

namespace conductor {

ServiceDescriptor make_service_descriptor(ServiceDescriptor d) {
    if (d.service_id.empty() || d.domain.empty())
        throw PipelineError(errors::kConfig, "invalid-service",
                            "services require service_id and domain");
    if (d.kind == "http") {
        if (d.endpoint.rfind("http://", 0) != 0)
            throw PipelineError(errors::kConfig, "invalid-service",
                                "http service '" + d.service_id +
                                    "' requires an http:// endpoint");
    } else if (d.kind == "mock") {
        if (d.answer_templates.empty())
            throw PipelineError(errors::kConfig, "invalid-service",
                                "mock service '" + d.service_id +
                                    "' requires answer_templates");
    } else {
        throw PipelineError(errors::kConfig, "invalid-service",
                            "service '" + d.service_id + "' has unknown kind '" + d.kind + "'");
    }
    return d;
}

std::string render_fact_template(const std::string& tmpl,
                                 const std::map<std::string, Scalar>& facts,
                                 const char* error_code) {
    std::vector<std::string> missing;
    std::string rendered = text::substitute_placeholders(
        tmpl,
        [&](const std::string& name, const std::string& spec) -> std::optional<std::string> {
            auto it = facts.find(name);
            if (it == facts.end()) return std::nullopt;
            return spec == "commas" ? it->second.display_grouped() : it->second.display();
        },
        &missing);
    if (!missing.empty()) {
        std::string names;
        for (const auto& n : missing) {
            if (!names.empty()) names += ", ";
            names += n;
        }
        throw PipelineError(errors::kService, error_code,
                            "template references fact(s) not present in context: " + names);
    }
    return rendered;
}

MockService::MockService(ServiceDescriptor descriptor)
    : Service(make_service_descriptor(std::move(descriptor))) {}

ServiceResponse MockService::invoke(const ServiceRequest& request) {
    auto start = std::chrono::steady_clock::now();
    auto it = descriptor_.answer_templates.find(request.intent);
    if (it == descriptor_.answer_templates.end())
        throw PipelineError(errors::kService, "template-missing",
                            "mock service '" + descriptor_.service_id +
                                "' has no answer template for intent '" + request.intent + "'");
    std::string answer =
        render_fact_template(it->second, request.context.rendered_facts, "template-fact-missing");
    if (descriptor_.simulated_latency.count() > 0)
        std::this_thread::sleep_for(descriptor_.simulated_latency);
    auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    return make_service_response(request.context.sub_prompt_id, std::move(answer),
                                 request.context.rendered_facts, descriptor_.service_id,
                                 /*from_cache=*/false, elapsed);
}

namespace {

// Splits "http://host:port/path" into client base and request path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto after_scheme = endpoint.find("://");
    auto path_start = endpoint.find('/', after_scheme + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

} // namespace

HttpService::HttpService(ServiceDescriptor descriptor)
    : Service(make_service_descriptor(std::move(descriptor))) {
    std::tie(base_url_, path_) = split_endpoint(descriptor_.endpoint);
}

ServiceResponse HttpService::invoke(const ServiceRequest& request) {
    auto start = std::chrono::steady_clock::now();
    {
        std::unique_lock lock(slots_mutex_);
        slots_cv_.wait(lock, [&] { return in_flight_ < descriptor_.max_in_flight; });
        ++in_flight_;
    }
    struct SlotRelease {
        HttpService* self;
        ~SlotRelease() {
            {
                std::lock_guard lock(self->slots_mutex_);
                --self->in_flight_;
            }
            self->slots_cv_.notify_one();
        }
    } release{this};

    nlohmann::json body{{"sub_text", request.sub_text},
                        {"context", request.context.to_json()}};
    httplib::Client client(base_url_);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(
                                      descriptor_.http_timeout).count(),
                                  (descriptor_.http_timeout.count() % 1000) * 1000);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(
                                descriptor_.http_timeout).count(),
                            (descriptor_.http_timeout.count() % 1000) * 1000);

    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res)
        throw PipelineError(errors::kService, "service-unavailable",
                            "service '" + descriptor_.service_id + "' unreachable at " +
                                descriptor_.endpoint);
    if (res->status < 200 || res->status >= 300)
        throw PipelineError(errors::kService, "service-unavailable",
                            "service '" + descriptor_.service_id + "' replied HTTP " +
                                std::to_string(res->status));
    std::string answer;
    std::map<std::string, Scalar> facts;
    try {
        auto reply = nlohmann::json::parse(res->body);
        answer = reply.at("text").get<std::string>();
        facts = facts_from_json(reply.value("facts", nlohmann::json::object()));
    } catch (const nlohmann::json::exception& e) {
        throw PipelineError(errors::kService, "service-unavailable",
                            "service '" + descriptor_.service_id +
                                "' returned a malformed reply: " + e.what());
    }
    auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    return make_service_response(request.context.sub_prompt_id, std::move(answer),
                                 std::move(facts), descriptor_.service_id,
                                 /*from_cache=*/false, elapsed);
}

HealthStatus HttpService::health() {
    httplib::Client client(base_url_);
    client.set_connection_timeout(1, 0);
    client.set_read_timeout(1, 0);
    auto res = client.Get(path_);
    if (!res) return HealthStatus{false, "connection"};
    return HealthStatus{true, ""};
}

std::shared_ptr<Service> make_service(ServiceDescriptor descriptor) {
    auto validated = make_service_descriptor(std::move(descriptor));
    if (validated.kind == "http") return std::make_shared<HttpService>(std::move(validated));
    return std::make_shared<MockService>(std::move(validated));
}

void ServiceRegistry::register_service(std::shared_ptr<Service> service, bool replace) {
    std::lock_guard lock(mutex_);
    const std::string& domain = service->descriptor().domain;
    auto [it, inserted] = by_domain_.emplace(domain, service);
    if (!inserted) {
        if (!replace)
            throw PipelineError(errors::kConfig, "duplicate-service-domain",
                                "domain '" + domain + "' already has service '" +
                                    it->second->descriptor().service_id + "'");
        it->second = std::move(service);
    }
}

std::shared_ptr<Service> ServiceRegistry::for_domain(const std::string& domain) const {
    std::lock_guard lock(mutex_);
    auto it = by_domain_.find(domain);
    return it == by_domain_.end() ? nullptr : it->second;
}

std::shared_ptr<Service> ServiceRegistry::require_domain(const std::string& domain) const {
    auto svc = for_domain(domain);
    if (!svc)
        throw PipelineError(errors::kPlanning, "no-service-for-domain",
                            "no service registered for domain '" + domain + "'");
    return svc;
}

std::vector<std::string> ServiceRegistry::domains() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    out.reserve(by_domain_.size());
    for (const auto& [domain, _] : by_domain_) out.push_back(domain);
    return out;
}

} // namespace conductor
