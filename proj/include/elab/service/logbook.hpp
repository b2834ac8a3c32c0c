#pragma once

#include "elab/common/database.hpp"
#include "elab/service/users.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace elab::service {

struct LogbookEntry {
    std::int64_t id = 0;
    GroupId group_id = 0;
    std::string milestone;
    std::string body;
    std::int64_t created_at_ns = 0;
    Role author_role = Role::student;
    std::optional<std::string> teacher_comment;
    std::optional<std::int64_t> commented_at_ns;

    bool operator==(const LogbookEntry&) const = default;
};

/// Group research journals. Access rules live in the HTTP layer.
class LogbookStore {
public:
    explicit LogbookStore(Database& db);

    LogbookEntry write(GroupId group, std::string_view milestone, std::string_view body, Role author_role);
    std::optional<LogbookEntry> get(std::int64_t id) const;
    /// Sets (or replaces) the teacher's comment.
    LogbookEntry comment(std::int64_t id, std::string_view text);

    /// Ordered by id.
    std::vector<LogbookEntry> by_group(GroupId group) const;
    std::vector<LogbookEntry> by_milestone(std::string_view milestone, const std::set<GroupId>& groups) const;
    std::vector<LogbookEntry> by_milestone(std::string_view milestone) const;

private:
    Database& db_;
};

} // namespace elab::service
