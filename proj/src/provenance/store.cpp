#include "elab/provenance/store.hpp"

#include <mutex>

namespace elab::provenance {

ProvenanceStore::ProvenanceStore(Database& db) : db_(db)
{
    db_.transaction([](Database::Connection& c) {
        c.exec("CREATE TABLE IF NOT EXISTS executions ("
               " id INTEGER PRIMARY KEY AUTOINCREMENT,"
               " record TEXT NOT NULL)");
    });
    db_.read([&](Database::Connection& c) {
        auto st = c.prepare("SELECT id, record FROM executions ORDER BY id");
        while (st.step()) {
            auto rec = record_from_json_line(st.column_text(1));
            rec.record_id = st.column_int(0);
            log_.push_back(std::move(rec));
        }
    });
}

std::int64_t ProvenanceStore::record_execution(ExecutionRecord rec)
{
    check(rec);
    std::unique_lock lock(mutex_);
    rec.record_id = db_.transaction([&](Database::Connection& c) {
        auto ins = c.prepare("INSERT INTO executions (record) VALUES ('')");
        ins.step();
        const auto id = c.last_insert_id();
        rec.record_id = id;
        auto upd = c.prepare("UPDATE executions SET record = ? WHERE id = ?");
        upd.bind(1, to_json_line(rec)).bind(2, id);
        upd.step();
        return id;
    });
    log_.push_back(rec);
    return rec.record_id;
}

std::optional<ExecutionRecord> ProvenanceStore::get(std::int64_t record_id) const
{
    std::shared_lock lock(mutex_);
    for (const auto& rec : log_) {
        if (rec.record_id == record_id) {
            return rec;
        }
    }
    return std::nullopt;
}

std::vector<ExecutionRecord> ProvenanceStore::records() const
{
    std::shared_lock lock(mutex_);
    return log_;
}

std::size_t ProvenanceStore::size() const
{
    std::shared_lock lock(mutex_);
    return log_.size();
}

std::optional<ExecutionRecord> ProvenanceStore::latest_producer(std::string_view lfn) const
{
    std::shared_lock lock(mutex_);
    for (auto it = log_.rbegin(); it != log_.rend(); ++it) {
        if (it->status != Status::succeeded) {
            continue;
        }
        for (const auto& out : it->outputs) {
            if (out.lfn == lfn) {
                return *it;
            }
        }
    }
    return std::nullopt;
}

WorkflowDag ProvenanceStore::build_dag(
    std::string_view lfn, const std::function<bool(std::string_view)>& known_source) const
{
    std::shared_lock lock(mutex_);
    return provenance::build_dag(log_, lfn, known_source);
}

std::string ProvenanceStore::export_audit() const
{
    std::shared_lock lock(mutex_);
    std::string out;
    for (const auto& rec : log_) {
        out += to_json_line(rec);
        out += '\n';
    }
    return out;
}

} // namespace elab::provenance
