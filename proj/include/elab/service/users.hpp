#pragma once

#include "elab/common/database.hpp"
#include "elab/common/error.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace elab::service {

enum class Role { student, teacher, admin };

const char* to_string(Role r);
std::optional<Role> parse_role(std::string_view s);

using GroupId = std::int64_t;

/// A research group (or a teacher or admin account); the unit that logs in.
struct Group {
    GroupId id = 0;
    std::string name;
    std::string school;
    std::string city;
    std::string state;
    Role role = Role::student;
    std::optional<GroupId> teacher_id;

    bool operator==(const Group&) const = default;
};

struct Registration {
    std::string name;
    std::string school;
    std::string city;
    std::string state;
    Role role = Role::student;
    std::optional<GroupId> teacher_id;
    std::string password;
};

class DuplicateGroup : public Error {
public:
    using Error::Error;
};

class InvalidRegistration : public Error {
public:
    using Error::Error;
};

/// "pbkdf2-sha256$<iterations>$<salt hex>$<hash hex>"
std::string hash_password(std::string_view password, int iterations);
bool verify_password(std::string_view password, std::string_view stored);

inline constexpr std::size_t min_password_length = 8;

/// Groups in SQLite; names are unique per school and students point at a teacher.
class UserStore {
public:
    UserStore(Database& db, int password_iterations);

    Group register_group(const Registration& r);
    std::optional<Group> authenticate(std::string_view school, std::string_view name, std::string_view password) const;
    std::optional<Group> get(GroupId id) const;
    std::optional<Group> find(std::string_view school, std::string_view name) const;
    std::vector<GroupId> students_of(GroupId teacher) const;
    std::size_t size() const;

private:
    Database& db_;
    int iterations_;
};

/// Opaque session tokens with idle expiry, held in memory.
class SessionManager {
public:
    using Clock = std::function<std::int64_t()>;

    explicit SessionManager(std::chrono::nanoseconds idle, Clock clock = {});

    std::string open(GroupId group);
    /// The session's group, refreshing its idle timer; nullopt if unknown or expired.
    std::optional<GroupId> touch(const std::string& token);
    bool close(const std::string& token);
    std::size_t size() const;

private:
    struct Session {
        GroupId group;
        std::int64_t last_seen_ns;
    };

    std::int64_t now() const;

    std::int64_t idle_ns_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::map<std::string, Session, std::less<>> sessions_;
};

} // namespace elab::service
