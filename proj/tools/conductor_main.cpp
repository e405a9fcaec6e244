#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conductor/bench.hpp"
#include "conductor/errors.hpp"
#include "conductor/http_server.hpp"
#include "conductor/platform.hpp"

namespace {

std::pair<std::string, conductor::Scalar> parse_attr(const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw CLI::ValidationError("--attr", "expected key=value, got '" + kv + "'");
    return {kv.substr(0, eq), conductor::Scalar(kv.substr(eq + 1))};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conductor - agent-orchestrated query engine over graph knowledge stores"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "platform configuration file")
        ->envname("CONDUCTOR_CONFIG");

    auto* validate = app.add_subcommand("validate-config", "parse and cross-validate the config");

    auto* query = app.add_subcommand("query", "run one prompt through the pipeline");
    std::string user_id, role, prompt_text;
    std::vector<std::string> attrs;
    bool verbose = false;
    query->add_option("--user", user_id, "user id")->required();
    query->add_option("--role", role, "user role")->required();
    query->add_option("--attr", attrs, "context attribute key=value (repeatable)");
    query->add_flag("--verbose", verbose, "include the execution trace");
    query->add_option("prompt", prompt_text, "the prompt text")->required();

    auto* serve = app.add_subcommand("serve", "run the HTTP gateway");
    std::string host = "0.0.0.0";
    int port = 8080;
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "bind port");

    auto* bench = app.add_subcommand("bench", "compare scenarios on a fixture suite");
    std::string scenario_name = "all";
    std::string fixture_path;
    int repetitions = 2;
    bench->add_option("--scenario", scenario_name,
                      "baseline | cache | cache_and_rules | all");
    bench->add_option("--fixtures", fixture_path, "bench fixture file")->required();
    bench->add_option("--repetitions", repetitions, "repetitions per query");

    CLI11_PARSE(app, argc, argv);

    try {
        if (config_path.empty())
            throw conductor::PipelineError(conductor::errors::kConfig, "parse-error",
                                           "no config file given (--config or CONDUCTOR_CONFIG)");

        if (validate->parsed()) {
            conductor::load_config(config_path);
            std::cout << "config ok: " << config_path << "\n";
            return 0;
        }

        conductor::Platform platform{std::filesystem::path(config_path)};

        if (query->parsed()) {
            conductor::QueryRequest request;
            request.user_id = user_id;
            request.role = role;
            for (const auto& kv : attrs) request.attributes.insert(parse_attr(kv));
            request.prompt = prompt_text;
            request.verbose = verbose;
            auto reply = platform.handle_query_json(
                nlohmann::json{{"user_id", request.user_id},
                               {"role", request.role},
                               {"attributes", conductor::facts_to_json(request.attributes)},
                               {"prompt", request.prompt},
                               {"verbose", request.verbose}});
            if (reply.contains("error")) {
                std::cerr << reply.dump(2) << "\n";
                return 1;
            }
            if (verbose) {
                std::cout << reply.dump(2) << "\n";
            } else {
                std::cout << reply.at("final_text").get<std::string>() << "\n";
            }
            return 0;
        }

        if (serve->parsed()) {
            conductor::GatewayServer server(platform);
            std::cout << "serving on " << host << ":" << port << "\n";
            if (!server.listen(host, port)) {
                std::cerr << "failed to bind " << host << ":" << port << "\n";
                return 1;
            }
            return 0;
        }

        if (bench->parsed()) {
            std::vector<conductor::Scenario> scenarios;
            if (scenario_name == "all") {
                scenarios = {conductor::Scenario::baseline, conductor::Scenario::cache,
                             conductor::Scenario::cache_and_rules};
            } else {
                scenarios = {conductor::scenario_from_string(scenario_name)};
            }
            auto queries = conductor::load_bench_fixture(fixture_path);
            auto report = conductor::run_bench(platform, scenarios, queries, repetitions);
            std::cout << report.to_json().dump(2) << "\n";
            return 0;
        }
    } catch (const conductor::PipelineError& e) {
        std::cerr << conductor::error_document(e).dump(2) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
