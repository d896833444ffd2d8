#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "formfunc/app/pipeline.hpp"

namespace formfunc {

struct Response {
    int status = 200;
    nlohmann::json body;
};

/// HTTP-independent handlers of the design service. Every body carries
/// "schema_version"; errors are {"error": message}.
class DesignService {
public:
    /// A null session answers 503 until one is attached.
    explicit DesignService(std::shared_ptr<const Session> session = nullptr) : session_(std::move(session)) {}

    Response health() const;
    Response list_classes() const;
    Response essence(const std::string& label, bool raw = false) const;
    /// {"base", "top", "base_percent"?, "top_percent"?, "raw"?}
    Response combine(const nlohmann::json& body) const;
    /// {"grid": wire grid, "tests"?: ["support", "contain"], "probe_side"?, "flatness_tol"?, "sphere_radius"?}
    Response afford_test(const nlohmann::json& body) const;

private:
    std::shared_ptr<const Session> session_;
};

/// HTTP/1.1 front end for a DesignService, with permissive CORS.
class HttpServer {
public:
    explicit HttpServer(const DesignService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and starts serving on a background thread. Port 0 picks a free
    /// port; the bound port is returned. Throws Error if binding fails.
    int start(const std::string& host, int port);
    void stop();
    /// Blocks until the server stops.
    void wait();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Serves `service` in the calling thread until the process ends.
void serve(const DesignService& service, const std::string& host, int port);

}  // namespace formfunc
