#include "elab/common/database.hpp"

#include "elab/common/digest.hpp"
#include "elab/common/text.hpp"

#include <sqlite3.h>

#include <atomic>

namespace elab {

namespace {

[[noreturn]] void fail(sqlite3* db, std::string_view what)
{
    throw DatabaseError(std::string(what) + ": " + (db ? sqlite3_errmsg(db) : "no connection"));
}

} // namespace

Statement::Statement(sqlite3* db, std::string_view sql) : db_(db)
{
    if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr) != SQLITE_OK) {
        fail(db, "prepare");
    }
}

Statement::~Statement()
{
    sqlite3_finalize(stmt_);
}

Statement::Statement(Statement&& o) noexcept : db_(o.db_), stmt_(o.stmt_)
{
    o.stmt_ = nullptr;
}

Statement& Statement::bind(int index, std::int64_t v)
{
    if (sqlite3_bind_int64(stmt_, index, v) != SQLITE_OK) {
        fail(db_, "bind");
    }
    return *this;
}

Statement& Statement::bind(int index, double v)
{
    if (sqlite3_bind_double(stmt_, index, v) != SQLITE_OK) {
        fail(db_, "bind");
    }
    return *this;
}

Statement& Statement::bind(int index, std::string_view v)
{
    if (sqlite3_bind_text(stmt_, index, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT) != SQLITE_OK) {
        fail(db_, "bind");
    }
    return *this;
}

Statement& Statement::bind_null(int index)
{
    if (sqlite3_bind_null(stmt_, index) != SQLITE_OK) {
        fail(db_, "bind");
    }
    return *this;
}

bool Statement::step()
{
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) {
        return true;
    }
    if (rc == SQLITE_DONE) {
        return false;
    }
    fail(db_, "step");
}

void Statement::reset()
{
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
}

std::int64_t Statement::column_int(int i) const
{
    return sqlite3_column_int64(stmt_, i);
}

double Statement::column_double(int i) const
{
    return sqlite3_column_double(stmt_, i);
}

std::string Statement::column_text(int i) const
{
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, i));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, i))) : std::string();
}

bool Statement::column_is_null(int i) const
{
    return sqlite3_column_type(stmt_, i) == SQLITE_NULL;
}

void Database::Connection::exec(std::string_view sql)
{
    char* err = nullptr;
    const std::string s(sql);
    if (sqlite3_exec(db_, s.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw DatabaseError("exec: " + msg);
    }
}

Statement Database::Connection::prepare(std::string_view sql)
{
    return Statement(db_, sql);
}

std::int64_t Database::Connection::last_insert_id() const
{
    return sqlite3_last_insert_rowid(db_);
}

int Database::Connection::changes() const
{
    return sqlite3_changes(db_);
}

Database::Database(const std::filesystem::path& file)
{
    if (sqlite3_open_v2(file.string().c_str(), &db_,
            SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr)
        != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "open failed";
        sqlite3_close(db_);
        throw DatabaseError("open " + file.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    conn_ = Connection(db_);
    conn_.exec("PRAGMA journal_mode=WAL");
    conn_.exec("PRAGMA synchronous=FULL");
    conn_.exec("PRAGMA foreign_keys=ON");
}

Database::~Database()
{
    sqlite3_close(db_);
}

BlobStore::BlobStore(std::filesystem::path root) : root_(std::move(root))
{
    std::filesystem::create_directories(root_ / "objects");
    std::filesystem::create_directories(root_ / "tmp");
}

std::filesystem::path BlobStore::path(std::string_view digest) const
{
    return root_ / "objects" / std::string(digest);
}

bool BlobStore::contains(std::string_view digest) const
{
    return std::filesystem::exists(path(digest));
}

std::string BlobStore::put(std::string_view bytes)
{
    const std::string digest = sha256_hex(bytes);
    if (!contains(digest)) {
        static std::atomic<std::uint64_t> counter { 0 };
        const auto tmp = root_ / "tmp" / (digest + "." + std::to_string(counter++));
        write_file(tmp, bytes);
        std::filesystem::rename(tmp, path(digest));
    }
    return digest;
}

std::string BlobStore::put_file(const std::filesystem::path& file)
{
    const std::string digest = sha256_file(file);
    if (!contains(digest)) {
        static std::atomic<std::uint64_t> counter { 0 };
        const auto tmp = root_ / "tmp" / (digest + ".f" + std::to_string(counter++));
        std::filesystem::copy_file(file, tmp, std::filesystem::copy_options::overwrite_existing);
        std::filesystem::rename(tmp, path(digest));
    }
    return digest;
}

std::string BlobStore::get(std::string_view digest) const
{
    return read_file(path(digest));
}

} // namespace elab
