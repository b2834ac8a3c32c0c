#pragma once

// An in-process service on an ephemeral port plus a small cookie-carrying client.

#include "elab/cosmic/dataset.hpp"
#include "elab/cosmic/generator.hpp"
#include "elab/service/server.hpp"
#include "support/tempdir.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <string>
#include <thread>

namespace testing {

using nlohmann::json;

struct Reply {
    int status = 0;
    std::string raw;
    std::string set_cookie;
    std::string content_type;

    json body() const { return raw.empty() ? json() : json::parse(raw, nullptr, false); }
};

/// One browser: remembers the session cookie the server hands it.
class Client {
public:
    explicit Client(int port) : http_(std::make_unique<httplib::ClientImpl>("127.0.0.1", port)) { http_->set_read_timeout(60, 0); }
    explicit Client(std::unique_ptr<httplib::ClientImpl> impl) : http_(std::move(impl)) {}

    Reply get(const std::string& path, const httplib::Params& params = {})
    {
        return take(http_->Get(path, params, headers()));
    }
    Reply post(const std::string& path, const json& body) { return take(http_->Post(path, headers(), body.dump(), "application/json")); }
    Reply post_raw(const std::string& path, const std::string& body, const std::string& type)
    {
        return take(http_->Post(path, headers(), body, type));
    }
    Reply post_multipart(const std::string& path, const httplib::MultipartFormDataItems& items)
    {
        return take(http_->Post(path, headers(), items));
    }
    Reply put(const std::string& path, const json& body) { return take(http_->Put(path, headers(), body.dump(), "application/json")); }
    Reply del(const std::string& path) { return take(http_->Delete(path, headers())); }

    bool login(const std::string& school, const std::string& name, const std::string& password)
    {
        return post("/api/session", { { "school", school }, { "name", name }, { "password", password } }).status == 200;
    }

    const std::string& token() const { return token_; }
    void set_token(std::string t) { token_ = std::move(t); }

private:
    httplib::Headers headers() const
    {
        if (token_.empty()) return {};
        return { { "Cookie", std::string(elab::service::session_cookie) + "=" + token_ } };
    }

    Reply take(const httplib::Result& r)
    {
        Reply out;
        if (!r) return out;
        out.status = r->status;
        out.raw = r->body;
        out.set_cookie = r->get_header_value("Set-Cookie");
        out.content_type = r->get_header_value("Content-Type");
        const std::string key = std::string(elab::service::session_cookie) + "=";
        if (out.set_cookie.starts_with(key)) {
            const auto value = out.set_cookie.substr(key.size(), out.set_cookie.find(';') - key.size());
            token_ = value;
        }
        return out;
    }

    std::unique_ptr<httplib::ClientImpl> http_;
    std::string token_;
};

inline constexpr const char* admin_password = "admin-password";

/// A running service with a controllable session clock and a bootstrap admin
/// "root" at school "Central".
class ServiceFixture {
public:
    explicit ServiceFixture(const std::function<void(elab::service::ServiceConfig&)>& tweak = {})
        : svc_(make_config(tweak))
    {
        port_ = svc_.start();
    }

    elab::service::Service& service() { return svc_; }
    int port() const { return port_; }
    Client client() const { return Client(port_); }
    void advance(std::chrono::nanoseconds d) { now_ += d.count(); }
    const TempDir& dir() const { return dir_; }

    /// Registers through the API and returns the new group id.
    std::int64_t add_group(const std::string& name, const std::string& school, const std::string& role,
        std::optional<std::int64_t> teacher = std::nullopt, Client* as = nullptr)
    {
        json body { { "name", name }, { "school", school }, { "city", "Batavia" }, { "state", "IL" },
            { "password", password_for(name) }, { "role", role } };
        if (teacher) body["teacher_id"] = *teacher;
        Client anon = client();
        const auto r = (as ? *as : anon).post("/api/groups", body);
        if (r.status != 201) throw std::runtime_error("registration failed: " + r.raw);
        return r.body().at("id").get<std::int64_t>();
    }

    Client login(const std::string& name, const std::string& school)
    {
        Client c = client();
        if (!c.login(school, name, name == "root" ? admin_password : password_for(name))) {
            throw std::runtime_error("login failed for " + name);
        }
        return c;
    }

    static std::string password_for(const std::string& name) { return "pw-" + name + "-secret"; }

private:
    elab::service::ServiceConfig make_config(const std::function<void(elab::service::ServiceConfig&)>& tweak)
    {
        elab::service::ServiceConfig c;
        c.port = 0;
        c.storage_root = dir_ / "data";
        c.password_iterations = 1000;
        c.page_size = 5;
        c.worker_pool_size = 2;
        c.job_width = 1;
        c.session_idle_hours = 1;
        c.admin = elab::service::BootstrapAdmin { "root", "Central", admin_password };
        c.clock = [this] { return now_.load(); };
        if (tweak) tweak(c);
        return c;
    }

    TempDir dir_ { "elab-svc" };
    std::atomic<std::int64_t> now_ { 1'100'000'000'000'000'000 };
    elab::service::Service svc_;
    int port_ = 0;
};

/// Polls an analysis until it leaves pending.
inline json wait_analysis(Client& c, const std::string& id, std::chrono::seconds limit = std::chrono::seconds(120))
{
    const auto until = std::chrono::steady_clock::now() + limit;
    while (true) {
        auto j = c.get("/api/analyses/" + id).body();
        if (j.value("status", "") != "pending" || std::chrono::steady_clock::now() > until) return j;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

/// A detector file with enough decays for a lifetime fit.
inline std::string decay_file(const std::string& detector, const std::string& school, std::uint64_t seed,
    std::int64_t triggers = 3000)
{
    elab::cosmic::GeneratorSpec spec;
    spec.duration_s = 120;
    spec.trigger_count = triggers;
    spec.decay_fraction = 0.3;
    spec.seed = seed;
    auto ds = elab::cosmic::generate_synthetic(spec).datasets[0];
    ds.detector_id = detector;
    ds.school = school;
    return elab::cosmic::format_dataset(ds);
}

} // namespace testing
