#include "elab/service/logbook.hpp"

#include "elab/common/text.hpp"

namespace elab::service {

namespace {

constexpr const char* columns = "SELECT id, group_id, milestone, body, created_at, author_role, teacher_comment, commented_at"
                                " FROM logbook_entries";

LogbookEntry read_entry(const Statement& st)
{
    LogbookEntry e;
    e.id = st.column_int(0);
    e.group_id = st.column_int(1);
    e.milestone = st.column_text(2);
    e.body = st.column_text(3);
    e.created_at_ns = st.column_int(4);
    e.author_role = parse_role(st.column_text(5)).value_or(Role::student);
    if (!st.column_is_null(6)) {
        e.teacher_comment = st.column_text(6);
        e.commented_at_ns = st.column_int(7);
    }
    return e;
}

} // namespace

LogbookStore::LogbookStore(Database& db) : db_(db)
{
    db_.transaction([](Database::Connection& c) {
        c.exec("CREATE TABLE IF NOT EXISTS logbook_entries ("
               " id INTEGER PRIMARY KEY AUTOINCREMENT,"
               " group_id INTEGER NOT NULL,"
               " milestone TEXT NOT NULL,"
               " body TEXT NOT NULL,"
               " created_at INTEGER NOT NULL,"
               " author_role TEXT NOT NULL,"
               " teacher_comment TEXT,"
               " commented_at INTEGER)");
        c.exec("CREATE INDEX IF NOT EXISTS logbook_by_group ON logbook_entries(group_id)");
    });
}

LogbookEntry LogbookStore::write(GroupId group, std::string_view milestone, std::string_view body, Role author_role)
{
    return db_.transaction([&](Database::Connection& c) {
        LogbookEntry e { 0, group, std::string(milestone), std::string(body), now_ns(), author_role, {}, {} };
        auto st = c.prepare("INSERT INTO logbook_entries (group_id, milestone, body, created_at, author_role)"
                            " VALUES (?, ?, ?, ?, ?)");
        st.bind(1, group).bind(2, milestone).bind(3, body).bind(4, e.created_at_ns).bind(5, std::string_view(to_string(author_role)));
        st.step();
        e.id = c.last_insert_id();
        return e;
    });
}

std::optional<LogbookEntry> LogbookStore::get(std::int64_t id) const
{
    return db_.read([&](Database::Connection& c) -> std::optional<LogbookEntry> {
        auto st = c.prepare(std::string(columns) + " WHERE id = ?");
        st.bind(1, id);
        if (st.step()) {
            return read_entry(st);
        }
        return std::nullopt;
    });
}

LogbookEntry LogbookStore::comment(std::int64_t id, std::string_view text)
{
    return db_.transaction([&](Database::Connection& c) {
        auto st = c.prepare("UPDATE logbook_entries SET teacher_comment = ?, commented_at = ? WHERE id = ?");
        st.bind(1, text).bind(2, now_ns()).bind(3, id);
        st.step();
        if (c.changes() == 0) {
            throw Error("no logbook entry " + std::to_string(id));
        }
        auto q = c.prepare(std::string(columns) + " WHERE id = ?");
        q.bind(1, id);
        q.step();
        return read_entry(q);
    });
}

std::vector<LogbookEntry> LogbookStore::by_group(GroupId group) const
{
    return db_.read([&](Database::Connection& c) {
        std::vector<LogbookEntry> out;
        auto st = c.prepare(std::string(columns) + " WHERE group_id = ? ORDER BY id");
        st.bind(1, group);
        while (st.step()) {
            out.push_back(read_entry(st));
        }
        return out;
    });
}

std::vector<LogbookEntry> LogbookStore::by_milestone(std::string_view milestone, const std::set<GroupId>& groups) const
{
    auto all = by_milestone(milestone);
    std::erase_if(all, [&](const LogbookEntry& e) { return !groups.contains(e.group_id); });
    return all;
}

std::vector<LogbookEntry> LogbookStore::by_milestone(std::string_view milestone) const
{
    return db_.read([&](Database::Connection& c) {
        std::vector<LogbookEntry> out;
        auto st = c.prepare(std::string(columns) + " WHERE milestone = ? ORDER BY id");
        st.bind(1, milestone);
        while (st.step()) {
            out.push_back(read_entry(st));
        }
        return out;
    });
}

} // namespace elab::service
