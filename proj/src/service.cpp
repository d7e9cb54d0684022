#include "thermo/service.hpp"

#include <cstdlib>
#include <random>
#include <sstream>

#include <httplib.h>

#include "thermo/error.hpp"

namespace thermo {

using nlohmann::json;

ServiceConfig ServiceConfig::from_environment() {
    ServiceConfig c;
    if (const char* listen = std::getenv("THERMO_LISTEN")) {
        const std::string s(listen);
        const auto colon = s.rfind(':');
        if (colon != std::string::npos) {
            c.host = s.substr(0, colon);
            c.port = std::stoi(s.substr(colon + 1));
        }
    }
    if (const char* timeout = std::getenv("THERMO_SESSION_TIMEOUT")) {
        c.session_timeout = std::chrono::seconds(std::stol(timeout));
    }
    if (const char* origins = std::getenv("THERMO_CORS_ORIGINS")) {
        std::stringstream ss(origins);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) c.cors_origins.push_back(item);
        }
    }
    return c;
}

std::string random_session_id() {
    static std::mutex m;
    static std::random_device rd;
    std::lock_guard lock(m);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (int i = 0; i < 4; ++i) {
        auto word = static_cast<std::uint32_t>(rd());
        for (int j = 0; j < 8; ++j) {
            out += hex[word & 0xF];
            word >>= 4;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sessions

SessionStore::SessionStore(std::chrono::seconds timeout, std::function<std::chrono::steady_clock::time_point()> clock)
    : timeout_(timeout), clock_(std::move(clock)) {}

std::shared_ptr<Session> SessionStore::create(ProblemBuilder builder) {
    std::lock_guard lock(mutex_);
    std::string id;
    do {
        id = random_session_id();
    } while (sessions_.count(id));
    auto s = std::make_shared<Session>(id, std::move(builder), clock_());
    sessions_.emplace(id, s);
    return s;
}

std::shared_ptr<Session> SessionStore::find(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    const auto now = clock_();
    if (now - it->second->touched > timeout_) {
        sessions_.erase(it);
        return nullptr;
    }
    it->second->touched = now;
    return it->second;
}

bool SessionStore::remove(const std::string& id) {
    std::lock_guard lock(mutex_);
    return sessions_.erase(id) > 0;
}

std::size_t SessionStore::size() {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

void SessionStore::purge_expired() {
    std::lock_guard lock(mutex_);
    const auto now = clock_();
    std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->touched > timeout_; });
}

// ---------------------------------------------------------------------------
// JSON views

json error_body(const std::string& code, const std::string& message, const std::vector<std::string>& details,
                const std::string& stage) {
    json j = {{"code", code}, {"message", message}, {"details", details}};
    if (!stage.empty()) j["stage"] = stage;
    return j;
}

namespace {

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
        case ErrorCode::UnknownProcessClass: return 400;
        default: return 422;
    }
}

HttpResponse error_response(const Error& e) {
    return {status_for(e.code()), error_body(std::string(to_string(e.code())), e.what(), e.details(), e.stage())};
}

HttpResponse bad_request(const std::string& message) { return {400, error_body("BadRequest", message)}; }

std::string required_string(const json& body, const std::string& key) {
    if (!body.is_object() || !body.contains(key) || !body[key].is_string()) {
        throw std::invalid_argument("field '" + key + "' (string) is required");
    }
    return body[key].get<std::string>();
}

std::string attribute_value(const json& v) {
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_string()) return v.get<std::string>();
    throw std::invalid_argument("field 'value' must be a string or boolean");
}

double numeric_value(const std::string& name, const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        if (const auto d = parse_number(v.get<std::string>())) return *d;
    }
    throw Error(ErrorCode::NotANumber, "value for '" + name + "' is not a number", {name});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string item;
    while (std::getline(ss, item, '/')) {
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

}  // namespace

json Service::session_state(const Session& session) const {
    const auto& b = session.builder;
    const auto& p = b.problem();
    json j;
    j["session_id"] = session.id;
    j["process_class"] = p.process_class;
    j["status"] = p.status == ProblemStatus::Finalized ? "finalized" : "building";
    j["material"] = p.material;
    j["instances"] = json::object();
    for (const auto& [id, inst] : p.instances) {
        j["instances"][id] = {{"concept", inst.concept_name},
                              {"base_concept", inst.base_concept},
                              {"attributes", inst.attributes},
                              {"derived_attributes", inst.derived}};
    }
    j["pending_choices"] = json::array();
    for (const auto& c : b.pending_choices()) {
        j["pending_choices"].push_back({{"kind", std::string(to_string(c.kind))},
                                        {"instance", c.instance},
                                        {"attribute", c.attribute},
                                        {"options", c.options}});
    }
    j["variables"] = json::array();
    for (const auto& v : b.variables()) {
        json entry = {{"name", v.name},     {"variable", v.variable}, {"instance", v.instance},
                      {"symbol", v.symbol}, {"unit", v.unit},         {"known", v.known.has_value()},
                      {"target", v.target}};
        if (v.known) {
            entry["value"] = v.known->value;
            entry["source"] = std::string(to_string(v.known->source));
        }
        j["variables"].push_back(std::move(entry));
    }
    j["knowns"] = json::object();
    for (const auto& [name, k] : p.knowns) {
        j["knowns"][name] = {{"value", k.value}, {"source", std::string(to_string(k.source))}};
    }
    j["targets"] = p.targets;
    j["missing"] = b.missing_items();
    return j;
}

// ---------------------------------------------------------------------------
// Dispatch

Service::Service(const KnowledgeBase& kb, ServiceConfig config)
    : kb_(&kb), config_(std::move(config)), sessions_(config_.session_timeout, config_.clock) {}

Service::~Service() { stop(); }

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body,
                             const std::map<std::string, std::string>& query) {
    json parsed;
    if (!body.empty()) {
        try {
            parsed = json::parse(body);
        } catch (const json::exception& e) {
            return {400, error_body("ParseError", std::string("request body is not JSON: ") + e.what())};
        }
    }
    try {
        return dispatch(method, split_path(path), parsed, query);
    } catch (const Error& e) {
        return error_response(e);
    } catch (const std::invalid_argument& e) {
        return bad_request(e.what());
    } catch (const std::exception& e) {
        return {500, error_body("InternalError", e.what())};
    }
}

HttpResponse Service::dispatch(const std::string& method, const std::vector<std::string>& parts, const json& body,
                               const std::map<std::string, std::string>& query) {
    sessions_.purge_expired();
    if (parts.size() < 2 || parts[0] != "api") return {404, error_body("NotFound", "no such endpoint")};

    if (parts[1] == "process-classes" && parts.size() == 2 && method == "GET") {
        json list = json::array();
        for (const auto* pc : kb_->process_classes().all()) {
            json instances = json::array();
            for (const auto& i : pc->instances) instances.push_back({{"id", i.id}, {"concept", i.concept_name}});
            list.push_back({{"name", pc->name}, {"description", pc->description}, {"instances", instances}});
        }
        return {200, {{"process_classes", list}}};
    }
    if (parts[1] != "problems") return {404, error_body("NotFound", "no such endpoint")};

    if (parts.size() == 2) {
        if (method != "POST") return {405, error_body("MethodNotAllowed", "use POST to create a problem")};
        const auto pc = required_string(body, "process_class");
        auto session = sessions_.create(ProblemBuilder(*kb_, pc));
        return {201, session_state(*session)};
    }

    const auto& id = parts[2];
    if (parts.size() == 3) {
        if (method == "GET") {
            auto session = sessions_.find(id);
            if (!session) return {404, error_body("SessionNotFound", "no live session '" + id + "'", {id})};
            std::unique_lock lock(session->mutex, std::try_to_lock);
            if (!lock) return {409, error_body("ConcurrentModification", "session is busy", {id})};
            return {200, session_state(*session)};
        }
        if (method == "DELETE") {
            if (!sessions_.remove(id)) return {404, error_body("SessionNotFound", "no live session '" + id + "'", {id})};
            return {200, {{"deleted", id}}};
        }
        return {405, error_body("MethodNotAllowed", "unsupported method")};
    }
    if (parts.size() != 4 || method != "POST") return {404, error_body("NotFound", "no such endpoint")};

    const auto& action = parts[3];
    if (action == "attributes") {
        const auto instance = required_string(body, "instance");
        const auto attribute = required_string(body, "attribute");
        if (!body.contains("value")) throw std::invalid_argument("field 'value' is required");
        const auto value = attribute_value(body["value"]);
        return mutate(id, [&](ProblemBuilder& b) { b.set_attribute(instance, attribute, value); });
    }
    if (action == "material") {
        const auto material = required_string(body, "material");
        return mutate(id, [&](ProblemBuilder& b) { b.set_material(material); });
    }
    if (action == "values") {
        std::vector<std::pair<std::string, json>> values;
        if (body.is_object() && body.contains("values") && body["values"].is_object()) {
            for (const auto& [k, v] : body["values"].items()) values.emplace_back(k, v);
        } else if (body.is_object() && body.contains("name") && body.contains("value")) {
            values.emplace_back(required_string(body, "name"), body["value"]);
        } else {
            throw std::invalid_argument("expected {name, value} or {values: {name: value}}");
        }
        return mutate(id, [&](ProblemBuilder& b) {
            for (const auto& [name, v] : values) b.set_value(name, numeric_value(name, v));
        });
    }
    if (action == "targets") {
        if (!body.is_object() || !body.contains("targets") || !body["targets"].is_array()) {
            throw std::invalid_argument("field 'targets' (list) is required");
        }
        std::vector<std::string> targets;
        for (const auto& t : body["targets"]) {
            if (!t.is_string()) throw std::invalid_argument("targets must be strings");
            targets.push_back(t.get<std::string>());
        }
        return mutate(id, [&](ProblemBuilder& b) { b.set_targets(targets); });
    }
    if (action == "rename") {
        const auto from = required_string(body, "from");
        const auto to = required_string(body, "to");
        return mutate(id, [&](ProblemBuilder& b) { b.rename_variable(from, to); });
    }
    if (action == "solve") return solve(id, query);
    return {404, error_body("NotFound", "no such endpoint")};
}

HttpResponse Service::mutate(const std::string& id, const std::function<void(ProblemBuilder&)>& change) {
    auto session = sessions_.find(id);
    if (!session) return {404, error_body("SessionNotFound", "no live session '" + id + "'", {id})};
    std::unique_lock lock(session->mutex, std::try_to_lock);
    if (!lock) return {409, error_body("ConcurrentModification", "another request is modifying this session", {id})};
    auto next = session->builder;
    change(next);
    session->builder = std::move(next);
    return {200, session_state(*session)};
}

HttpResponse Service::solve(const std::string& id, const std::map<std::string, std::string>& query) {
    auto session = sessions_.find(id);
    if (!session) return {404, error_body("SessionNotFound", "no live session '" + id + "'", {id})};
    std::unique_lock lock(session->mutex, std::try_to_lock);
    if (!lock) return {409, error_body("ConcurrentModification", "another request is modifying this session", {id})};

    std::string graph_format;
    if (const auto g = query.find("graph"); g != query.end()) {
        graph_format = g->second;
        if (graph_format != "dot" && graph_format != "json") {
            throw std::invalid_argument("graph must be 'dot' or 'json'");
        }
    }
    auto builder = session->builder;
    try {
        if (builder.problem().status != ProblemStatus::Finalized) builder.finalize();
    } catch (Error& e) {
        e.with_stage("setup");
        throw;
    }
    ReasoningGraph graph;
    const auto report = solve_problem(builder.problem(), *kb_, config_.reasoner, &graph);
    json body = {{"report", to_json(report)}, {"state", session_state(*session)}};
    if (graph_format == "json") body["graph"] = export_reasoning_graph(graph).to_json();
    if (graph_format == "dot") body["graph"] = export_reasoning_graph(graph).to_dot("reasoning");

    if (report.status == SolveStatus::NotSolvable) {
        auto err = error_body("NotSolvable", "targets cannot be reached", report.undetermined, "reasoning");
        err["report"] = body["report"];
        if (body.contains("graph")) err["graph"] = body["graph"];
        return {422, err};
    }
    if (report.status == SolveStatus::InconsistentInput) {
        std::vector<std::string> violated;
        for (const auto& a : report.audit) {
            if (!a.ok) violated.push_back(a.equation);
        }
        auto err = error_body("InconsistentInput", "given values contradict the equations", violated, "execution");
        err["report"] = body["report"];
        if (body.contains("graph")) err["graph"] = body["graph"];
        return {422, err};
    }
    return {200, body};
}

// ---------------------------------------------------------------------------
// HTTP transport

void Service::mount(httplib::Server& server) {
    auto cors = [this](const httplib::Request& req, httplib::Response& res) {
        const auto origin = req.get_header_value("Origin");
        if (origin.empty()) return;
        for (const auto& allowed : config_.cors_origins) {
            if (allowed == origin || allowed == "*") {
                res.set_header("Access-Control-Allow-Origin", origin);
                res.set_header("Vary", "Origin");
                res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
                res.set_header("Access-Control-Allow-Headers", "Content-Type");
                return;
            }
        }
    };
    auto route = [this, cors](const std::string& method) {
        return [this, cors, method](const httplib::Request& req, httplib::Response& res) {
            std::map<std::string, std::string> query;
            for (const auto& [k, v] : req.params) query[k] = v;
            const auto out = handle(method, req.path, req.body, query);
            res.status = out.status;
            res.set_content(out.body.dump(), "application/json");
            cors(req, res);
        };
    };
    server.Get(R"(/api/.*)", route("GET"));
    server.Post(R"(/api/.*)", route("POST"));
    server.Delete(R"(/api/.*)", route("DELETE"));
    server.Options(R"(/api/.*)", [cors](const httplib::Request& req, httplib::Response& res) {
        res.status = 204;
        cors(req, res);
    });
}

bool Service::listen() {
    server_ = std::make_unique<httplib::Server>();
    mount(*server_);
    return server_->listen(config_.host, config_.port);
}

int Service::start_background() {
    server_ = std::make_unique<httplib::Server>();
    mount(*server_);
    const int port = server_->bind_to_any_port(config_.host);
    if (port < 0) return port;
    thread_ = std::make_unique<std::thread>([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_ && thread_->joinable()) thread_->join();
    thread_.reset();
}

}  // namespace thermo
