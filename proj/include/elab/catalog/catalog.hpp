#pragma once

#include "elab/catalog/metadata.hpp"
#include "elab/catalog/query.hpp"
#include "elab/common/database.hpp"
#include "elab/common/error.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace elab::catalog {

enum class ObjectKind { dataset_file, transformation, derivation, parameter, plot, poster, glossary, reference };

const char* to_string(ObjectKind k);
std::optional<ObjectKind> parse_object_kind(std::string_view s);

/// dataset_file and plot objects name logical files and share one lfn namespace.
bool is_file_kind(ObjectKind k);

using ObjectId = std::int64_t;

struct CatalogObject {
    ObjectId id = 0;
    ObjectKind kind = ObjectKind::dataset_file;
    /// lfn for files, glossary and reference items; "name:version" for
    /// transformations; the definition name for derivations.
    std::string name;
    /// What the object stands for: content digest for files, canonical VDL
    /// for recipes, a JSON document for posters.
    std::string payload;
    Metadata metadata;

    void add(MetadataTuple t) { metadata.insert_or_assign(t.name, std::move(t)); }
    const MetadataTuple* attribute(std::string_view attr) const;

    bool operator==(const CatalogObject&) const = default;
};

class UnknownObject : public Error {
public:
    using Error::Error;
};

class DuplicateName : public Error {
public:
    using Error::Error;
};

class TypeConflict : public Error {
public:
    using Error::Error;
};

/// Name or prefix rule violations (Glossary_/Reference_, whitespace in lfns).
class InvalidObject : public Error {
public:
    using Error::Error;
};

/// Canonical JSON line for an object (keys in fixed order).
std::string to_json_line(const CatalogObject& obj);
CatalogObject from_json_line(std::string_view line);

/// The Virtual Data Catalog: durable objects with typed metadata.
///
/// Objects live in a SQLite table and are mirrored in memory; readers take a
/// shared lock, writers an exclusive lock plus a database transaction.
class Catalog {
public:
    explicit Catalog(Database& db);

    /// Stores `obj` (its id is ignored) and returns the id. Registering the
    /// same (kind, name, payload) again returns the existing id and upserts
    /// any metadata carried. A file object re-registered with new content
    /// takes the new payload; other kinds throw DuplicateName.
    ObjectId register_object(const CatalogObject& obj);

    /// Upserts tuples by attribute name. Throws UnknownObject / TypeConflict.
    CatalogObject annotate(ObjectId id, const std::vector<MetadataTuple>& tuples);

    /// Atomic read-modify-write: `make` sees the current object and returns
    /// the tuples to upsert.
    CatalogObject annotate_with(ObjectId id, const std::function<std::vector<MetadataTuple>(const CatalogObject&)>& make);

    CatalogObject get(ObjectId id) const;
    std::optional<CatalogObject> find(ObjectKind kind, std::string_view name) const;
    /// Looks an lfn up among dataset_file and plot objects.
    std::optional<CatalogObject> find_file(std::string_view lfn) const;
    std::optional<std::int64_t> registered_at_ns(ObjectId id) const;

    /// Sorted by name.
    std::vector<CatalogObject> list_by_kind(ObjectKind kind) const;

    /// Objects satisfying `q`, ordered by (kind, id).
    std::vector<CatalogObject> search(const QueryNode& q, std::optional<ObjectKind> kind = std::nullopt) const;

    std::size_t size() const;

    /// One JSON object per line, ordered by id.
    std::string export_records() const;
    /// Restores exported records; returns how many lines were applied.
    std::size_t import_records(std::string_view jsonl);

private:
    Database& db_;
    mutable std::shared_mutex mutex_;
    std::map<ObjectId, CatalogObject> objects_;
    std::map<std::pair<ObjectKind, std::string>, ObjectId, std::less<>> by_name_;
    std::map<ObjectId, std::int64_t> registered_at_;

    void load();
    void validate(const CatalogObject& obj) const;
    static void merge(CatalogObject& target, const std::vector<MetadataTuple>& tuples);
    void persist(Database::Connection& c, const CatalogObject& obj, bool insert, std::int64_t registered_at);
};

} // namespace elab::catalog
