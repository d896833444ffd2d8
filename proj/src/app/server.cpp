#include "formfunc/app/server.hpp"

#include <httplib.h>

#include <thread>

#include "formfunc/app/wire.hpp"
#include "formfunc/arithmetic/latent_json.hpp"

namespace formfunc {

using nlohmann::json;

namespace {

Response ok(json body) {
    body["schema_version"] = kSchemaVersion;
    return {200, std::move(body)};
}

Response fail(int status, const std::string& message) {
    return {status, {{"schema_version", kSchemaVersion}, {"error", message}}};
}

Response not_loaded() { return fail(503, "model and corpus not loaded"); }

json design_json(const Session& session, const Design& d, bool raw) {
    json nearest = json::array();
    for (const auto& n : d.nearest)
        nearest.push_back({{"index", n.index},
                           {"class_label", session.corpus().shapes[n.index].class_label},
                           {"distance", n.distance}});
    json body{{"base", d.base},
              {"top", d.top},
              {"dim", d.grid.dim},
              {"grid", grid_to_json(d.grid)},
              {"code", d.code},
              {"affordance_report", to_json(d.report)},
              {"nearest", nearest}};
    if (raw) body["probabilities"] = probabilities_to_json(d.probabilities);
    return body;
}

std::optional<double> percent_field(const json& body, const char* key, std::string& error) {
    if (!body.contains(key)) return 0.5;
    if (!body[key].is_number()) {
        error = std::string(key) + " must be a number";
        return std::nullopt;
    }
    const double p = body[key].get<double>();
    if (!(p >= 0 && p <= 1)) {
        error = std::string(key) + " must lie in [0, 1]";
        return std::nullopt;
    }
    return p;
}

}  // namespace

Response DesignService::health() const {
    return ok({{"status", session_ ? "ok" : "loading"}, {"loaded", bool(session_)}});
}

Response DesignService::list_classes() const {
    if (!session_) return not_loaded();
    json classes = json::array();
    for (const auto& c : session_->corpus().classes)
        classes.push_back({{"label", c.label}, {"affordances", c.affordances}, {"sample_count", c.sample_count}});
    return ok({{"classes", classes}});
}

Response DesignService::essence(const std::string& label, bool raw) const {
    if (!session_) return not_loaded();
    if (!session_->has_class(label)) return fail(404, "unknown class '" + label + "'");
    try {
        const auto entry = session_->essence(label);
        const ProbabilityGrid p = session_->decode(entry->essence.code);
        json body{{"label", label},
                  {"sample_count", entry->essence.sample_count},
                  {"dim", p.dim},
                  {"grid", grid_to_json(threshold(p, 0.5f))},
                  {"code", entry->essence.code},
                  {"importance_histogram", importance_histogram(entry->importance)}};
        if (raw) body["probabilities"] = probabilities_to_json(p);
        return ok(std::move(body));
    } catch (const NotFound& e) {
        return fail(404, e.what());
    } catch (const std::exception& e) {
        return fail(500, std::string("essence failed: ") + e.what());
    }
}

Response DesignService::combine(const json& body) const {
    if (!session_) return not_loaded();
    if (!body.is_object()) return fail(400, "body must be a JSON object");
    if (!body.contains("base") || !body["base"].is_string() || !body.contains("top") || !body["top"].is_string())
        return fail(400, "base and top class labels are required");
    const auto base = body["base"].get<std::string>(), top = body["top"].get<std::string>();
    for (const auto& label : {base, top})
        if (!session_->has_class(label)) return fail(404, "unknown class '" + label + "'");
    std::string error;
    const auto bp = percent_field(body, "base_percent", error);
    const auto tp = percent_field(body, "top_percent", error);
    if (!bp || !tp) return fail(422, error);
    try {
        const Design d = session_->combine(base, top, *bp, *tp);
        return ok(design_json(*session_, d, body.value("raw", false)));
    } catch (const NotFound& e) {
        return fail(404, e.what());
    } catch (const std::exception& e) {
        return fail(500, std::string("combine failed: ") + e.what());
    }
}

Response DesignService::afford_test(const json& body) const {
    if (!body.is_object() || !body.contains("grid")) return fail(400, "body must contain a grid");
    VoxelGrid grid;
    AffordanceOptions options;
    std::vector<std::string> tests{"support", "contain"};
    try {
        grid = grid_from_json(body["grid"]);
        options.probe.side = body.value("probe_side", options.probe.side);
        options.probe.flatness_tol = body.value("flatness_tol", options.probe.flatness_tol);
        options.sphere_radius = body.value("sphere_radius", 0.0);
        if (body.contains("tests")) tests = body["tests"].get<std::vector<std::string>>();
    } catch (const std::exception& e) {
        return fail(400, e.what());
    }
    try {
        json out = json::object();
        for (const auto& t : tests) {
            if (t == "support")
                out["supportability"] = to_json(supportability_test(grid, options.probe));
            else if (t == "contain")
                out["containability"] = to_json(containability_test(
                    grid, options.sphere_radius > 0 ? options.sphere_radius : default_sphere_radius(grid)));
            else
                return fail(400, "unknown test '" + t + "'");
        }
        return ok(std::move(out));
    } catch (const Error& e) {
        return fail(422, e.what());
    }
}

struct HttpServer::Impl {
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(const DesignService& service) : impl_(std::make_unique<Impl>()) {
    auto& server = impl_->server;
    auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Get("/health", [&service, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service.health());
    });
    server.Get("/classes", [&service, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service.list_classes());
    });
    server.Get(R"(/essence/([^/]+))", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        const bool raw = req.has_param("raw") && req.get_param_value("raw") != "0";
        reply(res, service.essence(req.matches[1], raw));
    });
    auto with_body = [reply](auto handler) {
        return [reply, handler](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const json::exception& e) {
                reply(res, fail(400, std::string("invalid JSON: ") + e.what()));
                return;
            }
            reply(res, handler(body));
        };
    };
    server.Post("/combine", with_body([&service](const json& b) { return service.combine(b); }));
    server.Post("/afford-test", with_body([&service](const json& b) { return service.afford_test(b); }));
}

HttpServer::~HttpServer() {
    stop();
    wait();
}

int HttpServer::start(const std::string& host, int port) {
    auto& server = impl_->server;
    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot listen on " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
    return bound;
}

void HttpServer::stop() { impl_->server.stop(); }

void HttpServer::wait() {
    if (impl_->thread.joinable()) impl_->thread.join();
}

void serve(const DesignService& service, const std::string& host, int port) {
    HttpServer server(service);
    server.start(host, port);
    server.wait();
}

}  // namespace formfunc
