#pragma once

#include "elab/common/error.hpp"

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>

struct sqlite3;
struct sqlite3_stmt;

namespace elab {

class DatabaseError : public Error {
public:
    using Error::Error;
};

class Statement {
public:
    Statement(sqlite3* db, std::string_view sql);
    ~Statement();
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;
    Statement(Statement&& o) noexcept;
    Statement& operator=(Statement&&) = delete;

    Statement& bind(int index, std::int64_t v);
    Statement& bind(int index, double v);
    Statement& bind(int index, std::string_view v);
    Statement& bind_null(int index);

    /// True while a row is available.
    bool step();
    void reset();

    std::int64_t column_int(int i) const;
    double column_double(int i) const;
    std::string column_text(int i) const;
    bool column_is_null(int i) const;

private:
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

/// One SQLite connection in WAL mode. All access goes through read() or
/// transaction(), which serialize on the connection; writes run inside
/// BEGIN IMMEDIATE ... COMMIT and roll back if the callback throws.
class Database {
public:
    explicit Database(const std::filesystem::path& file);
    ~Database();
    Database(const Database&) = delete;
    Database& operator=(const Database&) = delete;

    class Connection {
    public:
        void exec(std::string_view sql);
        Statement prepare(std::string_view sql);
        std::int64_t last_insert_id() const;
        int changes() const;

    private:
        friend class Database;
        explicit Connection(sqlite3* db) : db_(db) {}
        sqlite3* db_;
    };

    template <class F>
    decltype(auto) read(F&& f)
    {
        std::lock_guard lock(mutex_);
        return f(conn_);
    }

    template <class F>
    decltype(auto) transaction(F&& f)
    {
        std::lock_guard lock(mutex_);
        conn_.exec("BEGIN IMMEDIATE");
        try {
            if constexpr (std::is_void_v<decltype(f(conn_))>) {
                f(conn_);
                conn_.exec("COMMIT");
            } else {
                auto result = f(conn_);
                conn_.exec("COMMIT");
                return result;
            }
        } catch (...) {
            try {
                conn_.exec("ROLLBACK");
            } catch (...) {
            }
            throw;
        }
    }

private:
    sqlite3* db_ = nullptr;
    Connection conn_ { nullptr };
    std::recursive_mutex mutex_;
};

/// Content-addressed file storage: objects/<sha256>.
class BlobStore {
public:
    explicit BlobStore(std::filesystem::path root);

    /// Stores bytes, returns their digest. Idempotent.
    std::string put(std::string_view bytes);
    /// Moves or copies a file into the store, returns its digest.
    std::string put_file(const std::filesystem::path& file);

    bool contains(std::string_view digest) const;
    std::filesystem::path path(std::string_view digest) const;
    std::string get(std::string_view digest) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

} // namespace elab
