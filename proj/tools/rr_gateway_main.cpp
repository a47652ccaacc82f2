// Gateway daemon: simulated upstream, one receipt per completion.
//
//   rr-gateway --scenario fixtures/scenarios/northstar.json --store /var/lib/rr \
//              [--policy policy.json] [--host 127.0.0.1] [--port 8080]
//
// Config precedence: flags, then RR_STORE_PATH / RR_LISTEN_HOST / RR_LISTEN_PORT /
// RR_POLICY_PATH, then defaults.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "routereceipt/http_server.hpp"

namespace {

std::string env_or(const char* var, std::string fallback) {
    if (const char* v = std::getenv(var)) return v;
    return fallback;
}

routereceipt::jdoc load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw routereceipt::Error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    auto doc = routereceipt::jdoc::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw routereceipt::Error(path + " is not well-formed JSON");
    return doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"route receipt gateway (simulated upstream)"};
    std::string scenario_path;
    std::string store_path = env_or("RR_STORE_PATH", "");
    std::string policy_path = env_or("RR_POLICY_PATH", "");
    std::string host = env_or("RR_LISTEN_HOST", "127.0.0.1");
    int port = std::atoi(env_or("RR_LISTEN_PORT", "8080").c_str());
    app.add_option("--scenario", scenario_path, "scenario JSON file")->required();
    app.add_option("--store", store_path, "store directory");
    app.add_option("--policy", policy_path, "redaction policy JSON file");
    app.add_option("--host", host, "listen address");
    app.add_option("--port", port, "listen port");
    CLI11_PARSE(app, argc, argv);

    try {
        if (store_path.empty()) {
            std::cerr << "--store or RR_STORE_PATH is required\n";
            return 2;
        }
        auto scenario = routereceipt::SimScenario::parse(load_json(scenario_path));
        routereceipt::GatewayOptions options;
        if (!policy_path.empty()) {
            options.policy = routereceipt::parse_redaction_policy(load_json(policy_path));
        }
        routereceipt::Gateway gateway(std::move(scenario), store_path, std::move(options));

        httplib::Server server;
        routereceipt::register_routes(server, gateway);
        std::cout << "listening on " << host << ":" << port << ", store at " << store_path << "\n";
        if (!server.listen(host, port)) {
            std::cerr << "failed to listen on " << host << ":" << port << "\n";
            return 3;
        }
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
