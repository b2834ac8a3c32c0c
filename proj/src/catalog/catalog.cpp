#include "elab/catalog/catalog.hpp"

#include "elab/common/digest.hpp"
#include "elab/common/text.hpp"
#include "elab/vdl/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <mutex>

namespace elab::catalog {

using json = nlohmann::ordered_json;

namespace {

constexpr ObjectKind all_kinds[] = { ObjectKind::dataset_file, ObjectKind::transformation, ObjectKind::derivation,
    ObjectKind::parameter, ObjectKind::plot, ObjectKind::poster, ObjectKind::glossary, ObjectKind::reference };

json value_to_json(const MetadataValue& v)
{
    struct Visitor {
        json operator()(std::int64_t i) const { return i; }
        json operator()(double d) const { return d; }
        json operator()(const std::string& s) const { return s; }
        json operator()(const Date& d) const { return format_date(d); }
        json operator()(bool b) const { return b; }
    };
    return std::visit(Visitor {}, v);
}

MetadataValue value_from_json(MetadataType type, const json& j)
{
    switch (type) {
    case MetadataType::integer:
        if (j.is_number_integer()) {
            return j.get<std::int64_t>();
        }
        break;
    case MetadataType::floating:
        if (j.is_number()) {
            return j.get<double>();
        }
        break;
    case MetadataType::string:
        if (j.is_string()) {
            return j.get<std::string>();
        }
        break;
    case MetadataType::date:
        if (j.is_string()) {
            if (auto d = parse_date(j.get<std::string>())) {
                return *d;
            }
        }
        break;
    case MetadataType::boolean:
        if (j.is_boolean()) {
            return j.get<bool>();
        }
        break;
    }
    throw InvalidMetadata("value " + j.dump() + " is not a " + to_string(type));
}

json metadata_to_json(const Metadata& md)
{
    json arr = json::array();
    for (const auto& [name, t] : md) {
        json values = json::array();
        for (const auto& v : t.values) {
            values.push_back(value_to_json(v));
        }
        arr.push_back(json { { "name", t.name }, { "type", to_string(t.type) }, { "values", values } });
    }
    return arr;
}

Metadata metadata_from_json(const json& arr)
{
    Metadata md;
    for (const auto& jt : arr) {
        MetadataTuple t;
        t.name = jt.at("name").get<std::string>();
        auto type = parse_metadata_type(jt.at("type").get<std::string>());
        if (!type) {
            throw InvalidMetadata("unknown metadata type " + jt.at("type").dump());
        }
        t.type = *type;
        for (const auto& jv : jt.at("values")) {
            t.values.push_back(value_from_json(t.type, jv));
        }
        md.emplace(t.name, std::move(t));
    }
    return md;
}

} // namespace

const char* to_string(ObjectKind k)
{
    switch (k) {
    case ObjectKind::dataset_file:
        return "dataset_file";
    case ObjectKind::transformation:
        return "transformation";
    case ObjectKind::derivation:
        return "derivation";
    case ObjectKind::parameter:
        return "parameter";
    case ObjectKind::plot:
        return "plot";
    case ObjectKind::poster:
        return "poster";
    case ObjectKind::glossary:
        return "glossary";
    case ObjectKind::reference:
        return "reference";
    }
    return "?";
}

std::optional<ObjectKind> parse_object_kind(std::string_view s)
{
    for (auto k : all_kinds) {
        if (s == to_string(k)) {
            return k;
        }
    }
    return std::nullopt;
}

bool is_file_kind(ObjectKind k)
{
    return k == ObjectKind::dataset_file || k == ObjectKind::plot;
}

const MetadataTuple* CatalogObject::attribute(std::string_view attr) const
{
    auto it = metadata.find(std::string(attr));
    return it == metadata.end() ? nullptr : &it->second;
}

std::string to_json_line(const CatalogObject& obj)
{
    json j { { "id", obj.id }, { "kind", to_string(obj.kind) }, { "name", obj.name }, { "payload", obj.payload },
        { "metadata", metadata_to_json(obj.metadata) } };
    return j.dump();
}

CatalogObject from_json_line(std::string_view line)
{
    const json j = json::parse(line);
    CatalogObject obj;
    obj.id = j.at("id").get<ObjectId>();
    auto kind = parse_object_kind(j.at("kind").get<std::string>());
    if (!kind) {
        throw InvalidObject("unknown object kind " + j.at("kind").dump());
    }
    obj.kind = *kind;
    obj.name = j.at("name").get<std::string>();
    obj.payload = j.at("payload").get<std::string>();
    obj.metadata = metadata_from_json(j.at("metadata"));
    return obj;
}

Catalog::Catalog(Database& db) : db_(db)
{
    db_.transaction([](Database::Connection& c) {
        c.exec("CREATE TABLE IF NOT EXISTS catalog_objects ("
               " id INTEGER PRIMARY KEY AUTOINCREMENT,"
               " kind TEXT NOT NULL,"
               " name TEXT NOT NULL,"
               " payload TEXT NOT NULL,"
               " payload_digest TEXT NOT NULL,"
               " metadata TEXT NOT NULL,"
               " registered_at INTEGER NOT NULL,"
               " UNIQUE(kind, name))");
    });
    load();
}

void Catalog::load()
{
    std::unique_lock lock(mutex_);
    objects_.clear();
    by_name_.clear();
    db_.read([&](Database::Connection& c) {
        auto st = c.prepare("SELECT id, kind, name, payload, metadata, registered_at FROM catalog_objects ORDER BY id");
        while (st.step()) {
            CatalogObject obj;
            obj.id = st.column_int(0);
            obj.kind = *parse_object_kind(st.column_text(1));
            obj.name = st.column_text(2);
            obj.payload = st.column_text(3);
            obj.metadata = metadata_from_json(json::parse(st.column_text(4)));
            registered_at_[obj.id] = st.column_int(5);
            by_name_[{ obj.kind, obj.name }] = obj.id;
            objects_.emplace(obj.id, std::move(obj));
        }
    });
}

void Catalog::validate(const CatalogObject& obj) const
{
    if (!vdl::is_valid_lfn(obj.name)) {
        throw InvalidObject("invalid object name '" + obj.name + "'");
    }
    if (obj.kind == ObjectKind::glossary && !obj.name.starts_with("Glossary_")) {
        throw InvalidObject("glossary item '" + obj.name + "' must start with Glossary_");
    }
    if (obj.kind == ObjectKind::reference && !obj.name.starts_with("Reference_")) {
        throw InvalidObject("reference item '" + obj.name + "' must start with Reference_");
    }
    for (const auto& [key, t] : obj.metadata) {
        t.check();
        if (key != t.name) {
            throw InvalidMetadata("metadata key '" + key + "' does not match tuple name '" + t.name + "'");
        }
    }
}

void Catalog::merge(CatalogObject& target, const std::vector<MetadataTuple>& tuples)
{
    for (const auto& t : tuples) {
        t.check();
        if (const auto* existing = target.attribute(t.name); existing && existing->type != t.type) {
            throw TypeConflict("attribute '" + t.name + "' is " + to_string(existing->type) + ", not "
                + to_string(t.type));
        }
    }
    for (const auto& t : tuples) {
        target.metadata.insert_or_assign(t.name, t);
    }
}

void Catalog::persist(Database::Connection& c, const CatalogObject& obj, bool insert, std::int64_t registered_at)
{
    const std::string md = metadata_to_json(obj.metadata).dump();
    if (insert) {
        auto st = c.prepare("INSERT INTO catalog_objects (id, kind, name, payload, payload_digest, metadata, registered_at)"
                            " VALUES (?, ?, ?, ?, ?, ?, ?)");
        if (obj.id > 0) {
            st.bind(1, obj.id);
        } else {
            st.bind_null(1);
        }
        st.bind(2, std::string_view(to_string(obj.kind)))
            .bind(3, obj.name)
            .bind(4, obj.payload)
            .bind(5, sha256_hex(obj.payload))
            .bind(6, md)
            .bind(7, registered_at);
        st.step();
    } else {
        auto st = c.prepare("UPDATE catalog_objects SET payload = ?, payload_digest = ?, metadata = ?, registered_at = ?"
                            " WHERE id = ?");
        st.bind(1, obj.payload).bind(2, sha256_hex(obj.payload)).bind(3, md).bind(4, registered_at).bind(5, obj.id);
        st.step();
    }
}

ObjectId Catalog::register_object(const CatalogObject& input)
{
    validate(input);
    std::unique_lock lock(mutex_);

    auto existing = by_name_.find(std::pair { input.kind, input.name });
    if (existing == by_name_.end() && is_file_kind(input.kind)) {
        const auto other = input.kind == ObjectKind::plot ? ObjectKind::dataset_file : ObjectKind::plot;
        if (by_name_.contains(std::pair { other, input.name })) {
            throw DuplicateName("logical file '" + input.name + "' is already registered as " + to_string(other));
        }
    }

    if (existing != by_name_.end()) {
        CatalogObject updated = objects_.at(existing->second);
        std::int64_t registered_at = registered_at_.at(updated.id);
        if (updated.payload != input.payload) {
            if (!is_file_kind(input.kind)) {
                throw DuplicateName(std::string(to_string(input.kind)) + " '" + input.name
                    + "' already registered with a different definition");
            }
            updated.payload = input.payload;
            registered_at = now_ns();
        }
        std::vector<MetadataTuple> tuples;
        for (const auto& [key, t] : input.metadata) {
            tuples.push_back(t);
        }
        merge(updated, tuples);
        if (updated == objects_.at(updated.id) && registered_at == registered_at_.at(updated.id)) {
            return updated.id;
        }
        db_.transaction([&](Database::Connection& c) { persist(c, updated, false, registered_at); });
        registered_at_[updated.id] = registered_at;
        objects_[updated.id] = std::move(updated);
        return existing->second;
    }

    CatalogObject obj = input;
    obj.id = 0;
    const std::int64_t registered_at = now_ns();
    obj.id = db_.transaction([&](Database::Connection& c) {
        persist(c, obj, true, registered_at);
        return c.last_insert_id();
    });
    by_name_[{ obj.kind, obj.name }] = obj.id;
    registered_at_[obj.id] = registered_at;
    const ObjectId id = obj.id;
    objects_.emplace(id, std::move(obj));
    return id;
}

CatalogObject Catalog::annotate(ObjectId id, const std::vector<MetadataTuple>& tuples)
{
    return annotate_with(id, [&](const CatalogObject&) { return tuples; });
}

CatalogObject Catalog::annotate_with(
    ObjectId id, const std::function<std::vector<MetadataTuple>(const CatalogObject&)>& make)
{
    std::unique_lock lock(mutex_);
    auto it = objects_.find(id);
    if (it == objects_.end()) {
        throw UnknownObject("unknown catalog object " + std::to_string(id));
    }
    const auto tuples = make(it->second);
    if (tuples.empty()) {
        return it->second;
    }
    CatalogObject updated = it->second;
    merge(updated, tuples);
    db_.transaction([&](Database::Connection& c) { persist(c, updated, false, registered_at_.at(id)); });
    it->second = updated;
    return updated;
}

CatalogObject Catalog::get(ObjectId id) const
{
    std::shared_lock lock(mutex_);
    auto it = objects_.find(id);
    if (it == objects_.end()) {
        throw UnknownObject("unknown catalog object " + std::to_string(id));
    }
    return it->second;
}

std::optional<CatalogObject> Catalog::find(ObjectKind kind, std::string_view name) const
{
    std::shared_lock lock(mutex_);
    auto it = by_name_.find(std::pair { kind, std::string(name) });
    if (it == by_name_.end()) {
        return std::nullopt;
    }
    return objects_.at(it->second);
}

std::optional<CatalogObject> Catalog::find_file(std::string_view lfn) const
{
    if (auto obj = find(ObjectKind::dataset_file, lfn)) {
        return obj;
    }
    return find(ObjectKind::plot, lfn);
}

std::optional<std::int64_t> Catalog::registered_at_ns(ObjectId id) const
{
    std::shared_lock lock(mutex_);
    auto it = registered_at_.find(id);
    if (it == registered_at_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<CatalogObject> Catalog::list_by_kind(ObjectKind kind) const
{
    std::shared_lock lock(mutex_);
    std::vector<CatalogObject> out;
    for (auto it = by_name_.lower_bound(std::pair { kind, std::string() }); it != by_name_.end() && it->first.first == kind;
         ++it) {
        out.push_back(objects_.at(it->second));
    }
    return out;
}

std::vector<CatalogObject> Catalog::search(const QueryNode& q, std::optional<ObjectKind> kind) const
{
    std::shared_lock lock(mutex_);
    std::vector<CatalogObject> out;
    for (const auto& [id, obj] : objects_) {
        if ((!kind || obj.kind == *kind) && matches(q, obj.metadata)) {
            out.push_back(obj);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const CatalogObject& a, const CatalogObject& b) {
        return std::pair { a.kind, a.id } < std::pair { b.kind, b.id };
    });
    return out;
}

std::size_t Catalog::size() const
{
    std::shared_lock lock(mutex_);
    return objects_.size();
}

std::string Catalog::export_records() const
{
    std::shared_lock lock(mutex_);
    std::string out;
    for (const auto& [id, obj] : objects_) {
        out += to_json_line(obj);
        out += '\n';
    }
    return out;
}

std::size_t Catalog::import_records(std::string_view jsonl)
{
    std::size_t applied = 0;
    std::size_t start = 0;
    while (start < jsonl.size()) {
        std::size_t end = jsonl.find('\n', start);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        const auto line = jsonl.substr(start, end - start);
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        CatalogObject obj = from_json_line(line);
        validate(obj);
        bool fresh = false;
        {
            std::unique_lock lock(mutex_);
            fresh = obj.id > 0 && !objects_.contains(obj.id) && !by_name_.contains(std::pair { obj.kind, obj.name });
            if (fresh) {
                const std::int64_t registered_at = now_ns();
                db_.transaction([&](Database::Connection& c) { persist(c, obj, true, registered_at); });
                by_name_[{ obj.kind, obj.name }] = obj.id;
                registered_at_[obj.id] = registered_at;
                objects_.emplace(obj.id, obj);
            }
        }
        if (!fresh) {
            register_object(obj);
        }
        ++applied;
    }
    return applied;
}

} // namespace elab::catalog
