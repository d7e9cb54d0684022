#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "thermo/knowledge_base.hpp"
#include "thermo/problem_builder.hpp"
#include "thermo/reasoner.hpp"

namespace httplib {
class Server;
}

namespace thermo {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::chrono::seconds session_timeout{3600};
    std::vector<std::string> cors_origins;
    ReasonerOptions reasoner;
    std::function<std::chrono::steady_clock::time_point()> clock = [] { return std::chrono::steady_clock::now(); };

    /// THERMO_LISTEN (host:port), THERMO_SESSION_TIMEOUT (seconds) and
    /// THERMO_CORS_ORIGINS (comma separated) override the defaults.
    static ServiceConfig from_environment();
};

struct Session {
    std::string id;
    ProblemBuilder builder;
    std::chrono::steady_clock::time_point created;
    std::chrono::steady_clock::time_point touched;
    std::mutex mutex;

    Session(std::string session_id, ProblemBuilder b, std::chrono::steady_clock::time_point now)
        : id(std::move(session_id)), builder(std::move(b)), created(now), touched(now) {}
};

class SessionStore {
public:
    SessionStore(std::chrono::seconds timeout, std::function<std::chrono::steady_clock::time_point()> clock);

    std::shared_ptr<Session> create(ProblemBuilder builder);
    /// Null when unknown or idle longer than the timeout (expired sessions are dropped).
    std::shared_ptr<Session> find(const std::string& id);
    bool remove(const std::string& id);
    std::size_t size();
    void purge_expired();

private:
    std::chrono::seconds timeout_;
    std::function<std::chrono::steady_clock::time_point()> clock_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// 32 lowercase hex digits from the system entropy source.
std::string random_session_id();

struct HttpResponse {
    int status = 200;
    nlohmann::json body;
};

/// The dialogue and solver over HTTP. `handle` is the transport-independent
/// core; `mount` wires it into an httplib server.
class Service {
public:
    Service(const KnowledgeBase& kb, ServiceConfig config = {});
    ~Service();

    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body,
                        const std::map<std::string, std::string>& query = {});

    void mount(httplib::Server& server);
    /// Binds and serves until stop(). Returns false if the address cannot be bound.
    bool listen();
    /// Binds to an ephemeral port on the configured host and serves in the background.
    int start_background();
    void stop();

    SessionStore& sessions() { return sessions_; }
    const ServiceConfig& config() const { return config_; }

    /// The full dialogue state sent with every session response.
    nlohmann::json session_state(const Session& session) const;

private:
    HttpResponse dispatch(const std::string& method, const std::vector<std::string>& parts, const nlohmann::json& body,
                          const std::map<std::string, std::string>& query);
    HttpResponse mutate(const std::string& id, const std::function<void(ProblemBuilder&)>& change);
    HttpResponse solve(const std::string& id, const std::map<std::string, std::string>& query);

    const KnowledgeBase* kb_;
    ServiceConfig config_;
    SessionStore sessions_;
    std::unique_ptr<httplib::Server> server_;
    std::unique_ptr<std::thread> thread_;
};

nlohmann::json error_body(const std::string& code, const std::string& message,
                          const std::vector<std::string>& details = {}, const std::string& stage = "");

}  // namespace thermo
