#include "elab/service/users.hpp"

#include "elab/common/digest.hpp"
#include "elab/common/text.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>

namespace elab::service {

const char* to_string(Role r)
{
    switch (r) {
    case Role::student:
        return "student";
    case Role::teacher:
        return "teacher";
    case Role::admin:
        return "admin";
    }
    return "?";
}

std::optional<Role> parse_role(std::string_view s)
{
    for (auto r : { Role::student, Role::teacher, Role::admin }) {
        if (s == to_string(r)) {
            return r;
        }
    }
    return std::nullopt;
}

namespace {

constexpr std::size_t hash_bytes = 32;

std::string to_hex(const unsigned char* p, std::size_t n)
{
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out += digits[p[i] >> 4];
        out += digits[p[i] & 15];
    }
    return out;
}

std::string pbkdf2(std::string_view password, std::string_view salt, int iterations)
{
    std::array<unsigned char, hash_bytes> out {};
    if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()),
            reinterpret_cast<const unsigned char*>(salt.data()), static_cast<int>(salt.size()), iterations,
            EVP_sha256(), static_cast<int>(out.size()), out.data())
        != 1) {
        throw Error("PBKDF2 failed");
    }
    return to_hex(out.data(), out.size());
}

bool valid_text(std::string_view s, std::size_t max_len)
{
    if (s.empty() || s.size() > max_len) {
        return false;
    }
    return std::none_of(s.begin(), s.end(), [](unsigned char c) { return c < 0x20 || c == 0x7f; });
}

Group read_group(const Statement& st)
{
    Group g;
    g.id = st.column_int(0);
    g.name = st.column_text(1);
    g.school = st.column_text(2);
    g.city = st.column_text(3);
    g.state = st.column_text(4);
    g.role = parse_role(st.column_text(5)).value_or(Role::student);
    if (!st.column_is_null(6)) {
        g.teacher_id = st.column_int(6);
    }
    return g;
}

constexpr const char* group_columns = "id, name, school, city, state, role, teacher_id";

} // namespace

std::string hash_password(std::string_view password, int iterations)
{
    const std::string salt = random_token(16);
    return "pbkdf2-sha256$" + std::to_string(iterations) + "$" + salt + "$" + pbkdf2(password, salt, iterations);
}

bool verify_password(std::string_view password, std::string_view stored)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto bar = stored.find('$', start);
        parts.push_back(stored.substr(start, bar - start));
        if (bar == std::string_view::npos) {
            break;
        }
        start = bar + 1;
    }
    if (parts.size() != 4 || parts[0] != "pbkdf2-sha256") {
        return false;
    }
    const auto iterations = parse_int(parts[1]);
    if (!iterations || *iterations < 1 || *iterations > 100'000'000) {
        return false;
    }
    const auto want = pbkdf2(password, parts[2], static_cast<int>(*iterations));
    return want.size() == parts[3].size() && CRYPTO_memcmp(want.data(), parts[3].data(), want.size()) == 0;
}

UserStore::UserStore(Database& db, int password_iterations) : db_(db), iterations_(password_iterations)
{
    db_.transaction([](Database::Connection& c) {
        c.exec("CREATE TABLE IF NOT EXISTS research_groups ("
               " id INTEGER PRIMARY KEY AUTOINCREMENT,"
               " name TEXT NOT NULL,"
               " school TEXT NOT NULL,"
               " city TEXT NOT NULL,"
               " state TEXT NOT NULL,"
               " role TEXT NOT NULL,"
               " teacher_id INTEGER REFERENCES research_groups(id),"
               " password TEXT NOT NULL,"
               " created_at INTEGER NOT NULL,"
               " UNIQUE(school, name))");
    });
}

Group UserStore::register_group(const Registration& r)
{
    if (!valid_text(r.name, 100)) {
        throw InvalidRegistration("name must be 1 to 100 printable characters");
    }
    if (!valid_text(r.school, 200)) {
        throw InvalidRegistration("school must be 1 to 200 printable characters");
    }
    if ((!r.city.empty() && !valid_text(r.city, 200)) || (!r.state.empty() && !valid_text(r.state, 100))) {
        throw InvalidRegistration("city and state must be printable text");
    }
    if (r.password.size() < min_password_length) {
        throw InvalidRegistration("password must have at least " + std::to_string(min_password_length) + " characters");
    }
    if (r.role == Role::student && !r.teacher_id) {
        throw InvalidRegistration("a student group needs a teacher_id");
    }
    if (r.role != Role::student && r.teacher_id) {
        throw InvalidRegistration("only student groups have a teacher");
    }
    // Hash outside the database lock; it is the slow part.
    const auto stored = hash_password(r.password, iterations_);

    return db_.transaction([&](Database::Connection& c) {
        if (r.teacher_id) {
            auto st = c.prepare("SELECT role FROM research_groups WHERE id = ?");
            st.bind(1, *r.teacher_id);
            if (!st.step() || st.column_text(0) != "teacher") {
                throw InvalidRegistration("teacher_id " + std::to_string(*r.teacher_id) + " is not a teacher");
            }
        }
        {
            auto st = c.prepare("SELECT 1 FROM research_groups WHERE school = ? AND name = ?");
            st.bind(1, r.school).bind(2, r.name);
            if (st.step()) {
                throw DuplicateGroup("a group named '" + r.name + "' already exists at " + r.school);
            }
        }
        auto st = c.prepare("INSERT INTO research_groups (name, school, city, state, role, teacher_id, password, created_at)"
                            " VALUES (?, ?, ?, ?, ?, ?, ?, ?)");
        st.bind(1, r.name).bind(2, r.school).bind(3, r.city).bind(4, r.state).bind(5, std::string_view(to_string(r.role)));
        if (r.teacher_id) {
            st.bind(6, *r.teacher_id);
        } else {
            st.bind_null(6);
        }
        st.bind(7, stored).bind(8, now_ns());
        st.step();
        return Group { c.last_insert_id(), r.name, r.school, r.city, r.state, r.role, r.teacher_id };
    });
}

std::optional<Group> UserStore::authenticate(std::string_view school, std::string_view name, std::string_view password) const
{
    std::optional<Group> g;
    std::string stored;
    db_.read([&](Database::Connection& c) {
        auto st = c.prepare(std::string("SELECT ") + group_columns + ", password FROM research_groups WHERE school = ? AND name = ?");
        st.bind(1, school).bind(2, name);
        if (st.step()) {
            g = read_group(st);
            stored = st.column_text(7);
        }
    });
    if (!g) {
        // Same cost as a real check so timing does not reveal which names exist.
        verify_password(password, "pbkdf2-sha256$" + std::to_string(iterations_) + "$00$");
        return std::nullopt;
    }
    if (!verify_password(password, stored)) {
        return std::nullopt;
    }
    return g;
}

std::optional<Group> UserStore::get(GroupId id) const
{
    return db_.read([&](Database::Connection& c) -> std::optional<Group> {
        auto st = c.prepare(std::string("SELECT ") + group_columns + " FROM research_groups WHERE id = ?");
        st.bind(1, id);
        if (st.step()) {
            return read_group(st);
        }
        return std::nullopt;
    });
}

std::optional<Group> UserStore::find(std::string_view school, std::string_view name) const
{
    return db_.read([&](Database::Connection& c) -> std::optional<Group> {
        auto st = c.prepare(std::string("SELECT ") + group_columns + " FROM research_groups WHERE school = ? AND name = ?");
        st.bind(1, school).bind(2, name);
        if (st.step()) {
            return read_group(st);
        }
        return std::nullopt;
    });
}

std::vector<GroupId> UserStore::students_of(GroupId teacher) const
{
    return db_.read([&](Database::Connection& c) {
        std::vector<GroupId> out;
        auto st = c.prepare("SELECT id FROM research_groups WHERE teacher_id = ? ORDER BY id");
        st.bind(1, teacher);
        while (st.step()) {
            out.push_back(st.column_int(0));
        }
        return out;
    });
}

std::size_t UserStore::size() const
{
    return db_.read([](Database::Connection& c) {
        auto st = c.prepare("SELECT COUNT(*) FROM research_groups");
        st.step();
        return static_cast<std::size_t>(st.column_int(0));
    });
}

SessionManager::SessionManager(std::chrono::nanoseconds idle, Clock clock)
    : idle_ns_(idle.count()), clock_(std::move(clock))
{
}

std::int64_t SessionManager::now() const
{
    return clock_ ? clock_() : now_ns();
}

std::string SessionManager::open(GroupId group)
{
    auto token = random_token(32);
    std::lock_guard lock(mutex_);
    const auto t = now();
    // Drop expired sessions while we hold the lock anyway.
    std::erase_if(sessions_, [&](const auto& kv) { return t - kv.second.last_seen_ns > idle_ns_; });
    sessions_[token] = { group, t };
    return token;
}

std::optional<GroupId> SessionManager::touch(const std::string& token)
{
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(token);
    if (it == sessions_.end()) {
        return std::nullopt;
    }
    const auto t = now();
    if (t - it->second.last_seen_ns > idle_ns_) {
        sessions_.erase(it);
        return std::nullopt;
    }
    it->second.last_seen_ns = t;
    return it->second.group;
}

bool SessionManager::close(const std::string& token)
{
    std::lock_guard lock(mutex_);
    return sessions_.erase(token) > 0;
}

std::size_t SessionManager::size() const
{
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

} // namespace elab::service
