#pragma once

#include "elab/common/error.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elab::service {

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A study-guide milestone that logbook entries link to.
struct Milestone {
    std::string id;
    std::string title;
};

/// Account created at startup when no group of that name exists at the school.
struct BootstrapAdmin {
    std::string name;
    std::string school;
    std::string password;
};

struct ServiceConfig {
    std::string bind_address = "127.0.0.1";
    /// 0 binds an ephemeral port.
    int port = 8443;
    std::filesystem::path storage_root = "elab-data";
    std::size_t page_size = 20;
    std::size_t worker_pool_size = 2;
    /// Concurrent jobs within one analysis; 0 means the machine's parallelism.
    std::size_t job_width = 0;
    double session_idle_hours = 8;
    int password_iterations = 210'000;
    std::optional<std::filesystem::path> tls_cert;
    std::optional<std::filesystem::path> tls_key;
    std::optional<std::filesystem::path> static_root;
    std::vector<Milestone> milestones = default_milestones();
    std::optional<BootstrapAdmin> admin;
    /// Session clock in ns; the system clock when empty. Not read from JSON.
    std::function<std::int64_t()> clock;

    static std::vector<Milestone> default_milestones();
    bool tls() const { return tls_cert.has_value(); }
};

/// Reads a JSON object; absent keys keep their defaults, unknown keys are errors.
ServiceConfig config_from_json(std::string_view text);
ServiceConfig load_config(const std::filesystem::path& file);

} // namespace elab::service
