#pragma once

// Reference models for the stateful parts of the service.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

/// Sessions as a map from token to last use; a use more than `idle_ns`
/// after the previous one finds the session gone.
class SessionModel {
public:
    explicit SessionModel(std::int64_t idle_ns) : idle_(idle_ns) {}

    void open(const std::string& token, std::int64_t now) { last_[token] = now; }

    /// Whether a request carrying `token` at `now` is authenticated.
    bool use(const std::string& token, std::int64_t now)
    {
        auto it = last_.find(token);
        if (it == last_.end()) return false;
        if (now - it->second > idle_) {
            last_.erase(it);
            return false;
        }
        it->second = now;
        return true;
    }

    /// Logout: succeeds only with a live session, which it ends.
    bool close(const std::string& token, std::int64_t now)
    {
        if (!use(token, now)) return false;
        last_.erase(token);
        return true;
    }

private:
    std::int64_t idle_;
    std::map<std::string, std::int64_t> last_;
};

/// Append-only comment threads keyed by target.
struct CommentLog {
    std::map<std::string, std::vector<std::string>> threads;
    void add(const std::string& target, const std::string& body) { threads[target].push_back(body); }
};

/// Page `page` (1-based) of `all` at `size` per page.
template <class T>
std::vector<T> page_of(const std::vector<T>& all, std::size_t page, std::size_t size)
{
    std::vector<T> out;
    for (std::size_t i = (page - 1) * size; i < all.size() && i < page * size; ++i) out.push_back(all[i]);
    return out;
}

struct LogEntry {
    std::int64_t id;
    std::int64_t group;
    std::string milestone;
};

/// Entries of `groups` at `milestone`, in id order.
inline std::vector<std::int64_t> logbook_filter(const std::vector<LogEntry>& all, const std::string& milestone,
    const std::set<std::int64_t>& groups)
{
    std::vector<std::int64_t> out;
    for (const auto& e : all) {
        if (e.milestone == milestone && groups.contains(e.group)) out.push_back(e.id);
    }
    return out;
}

} // namespace oracle
