#include "elab/service/config.hpp"

#include "elab/common/text.hpp"

#include <json.hpp>

#include <set>

namespace elab::service {

using nlohmann::json;

std::vector<Milestone> ServiceConfig::default_milestones()
{
    return {
        { "research-question", "Pose a research question" },
        { "background", "Background on cosmic rays and detectors" },
        { "data-selection", "Choose the data" },
        { "analysis", "Run and interpret the analysis" },
        { "results", "State the results and uncertainties" },
        { "poster", "Publish the poster" },
    };
}

namespace {

template <class T>
T field(const json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

} // namespace

ServiceConfig config_from_json(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    static const std::set<std::string> known { "bind_address", "port", "storage_root", "page_size",
        "worker_pool_size", "job_width", "session_idle_hours", "password_iterations", "tls_cert", "tls_key",
        "static_root", "milestones", "admin" };
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    ServiceConfig c;
    if (j.contains("bind_address")) {
        c.bind_address = field<std::string>(j, "bind_address");
    }
    if (j.contains("port")) {
        c.port = field<int>(j, "port");
        if (c.port < 0 || c.port > 65535) {
            throw ConfigError("port out of range");
        }
    }
    if (j.contains("storage_root")) {
        c.storage_root = field<std::string>(j, "storage_root");
    }
    if (j.contains("page_size")) {
        c.page_size = field<std::size_t>(j, "page_size");
        if (c.page_size == 0) {
            throw ConfigError("page_size must be positive");
        }
    }
    if (j.contains("worker_pool_size")) {
        c.worker_pool_size = field<std::size_t>(j, "worker_pool_size");
        if (c.worker_pool_size == 0) {
            throw ConfigError("worker_pool_size must be positive");
        }
    }
    if (j.contains("job_width")) {
        c.job_width = field<std::size_t>(j, "job_width");
    }
    if (j.contains("session_idle_hours")) {
        c.session_idle_hours = field<double>(j, "session_idle_hours");
        if (!(c.session_idle_hours > 0)) {
            throw ConfigError("session_idle_hours must be positive");
        }
    }
    if (j.contains("password_iterations")) {
        c.password_iterations = field<int>(j, "password_iterations");
        if (c.password_iterations < 1) {
            throw ConfigError("password_iterations must be positive");
        }
    }
    if (j.contains("tls_cert")) {
        c.tls_cert = field<std::string>(j, "tls_cert");
    }
    if (j.contains("tls_key")) {
        c.tls_key = field<std::string>(j, "tls_key");
    }
    if (c.tls_cert.has_value() != c.tls_key.has_value()) {
        throw ConfigError("tls_cert and tls_key must be given together");
    }
    if (j.contains("static_root")) {
        c.static_root = field<std::string>(j, "static_root");
    }
    if (j.contains("milestones")) {
        c.milestones.clear();
        std::set<std::string> ids;
        for (const auto& m : j.at("milestones")) {
            Milestone ms { field<std::string>(m, "id"), field<std::string>(m, "title") };
            if (ms.id.empty() || !ids.insert(ms.id).second) {
                throw ConfigError("milestone ids must be nonempty and unique");
            }
            c.milestones.push_back(std::move(ms));
        }
    }
    if (j.contains("admin")) {
        const auto& a = j.at("admin");
        c.admin = BootstrapAdmin { field<std::string>(a, "name"), field<std::string>(a, "school"),
            field<std::string>(a, "password") };
    }
    return c;
}

ServiceConfig load_config(const std::filesystem::path& file)
{
    try {
        return config_from_json(read_file(file));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

} // namespace elab::service
