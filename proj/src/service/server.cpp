#include "elab/service/server.hpp"

#include "elab/catalog/catalog.hpp"
#include "elab/common/digest.hpp"
#include "elab/common/text.hpp"
#include "elab/cosmic/dataset.hpp"
#include "elab/cosmic/transformations.hpp"
#include "elab/provenance/dag.hpp"
#include "elab/provenance/store.hpp"
#include "elab/service/analyses.hpp"
#include "elab/service/html.hpp"
#include "elab/service/logbook.hpp"
#include "elab/service/users.hpp"
#include "elab/vds/vds.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <thread>

namespace elab::service {

using catalog::CatalogObject;
using catalog::MetadataTuple;
using catalog::ObjectKind;
using nlohmann::json;

namespace {

constexpr std::size_t max_comment_length = 10'000;
constexpr std::size_t max_upload_bytes = 64u << 20;

struct HttpError : Error {
    HttpError(int status, const std::string& message, json extra = json::object())
        : Error(message), status(status), extra(std::move(extra))
    {
    }
    int status;
    json extra;
};

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req)
{
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) {
            throw HttpError(400, "request body must be a JSON object");
        }
        return j;
    } catch (const json::parse_error& e) {
        throw HttpError(400, std::string("malformed JSON: ") + e.what());
    }
}

std::string string_field(const json& j, const char* key, bool required = true)
{
    if (!j.contains(key)) {
        if (required) {
            throw HttpError(400, std::string("missing field '") + key + "'", { { "field", key } });
        }
        return {};
    }
    if (!j.at(key).is_string()) {
        throw HttpError(400, std::string("field '") + key + "' must be a string", { { "field", key } });
    }
    return j.at(key).get<std::string>();
}

std::optional<std::int64_t> id_param(std::string_view s)
{
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return std::nullopt;
    }
    return parse_int(s);
}

bool blank(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<std::string> cookie_value(const httplib::Request& req, std::string_view name)
{
    for (auto [it, end] = req.headers.equal_range("Cookie"); it != end; ++it) {
        std::string_view header = it->second;
        while (!header.empty()) {
            const auto semi = header.find(';');
            auto part = header.substr(0, semi);
            header = semi == std::string_view::npos ? std::string_view {} : header.substr(semi + 1);
            while (!part.empty() && part.front() == ' ') {
                part.remove_prefix(1);
            }
            const auto eq = part.find('=');
            if (eq != std::string_view::npos && part.substr(0, eq) == name) {
                return std::string(part.substr(eq + 1));
            }
        }
    }
    return std::nullopt;
}

json group_json(const Group& g)
{
    json j { { "id", g.id }, { "name", g.name }, { "school", g.school }, { "city", g.city }, { "state", g.state },
        { "role", to_string(g.role) } };
    if (g.teacher_id) {
        j["teacher_id"] = *g.teacher_id;
    }
    return j;
}

json object_json(const CatalogObject& obj)
{
    return json::parse(catalog::to_json_line(obj));
}

std::vector<MetadataTuple> metadata_from_request(const json& j)
{
    if (!j.is_object()) {
        throw HttpError(400, "metadata must be an object of attribute → value");
    }
    std::vector<MetadataTuple> out;
    for (const auto& [name, value] : j.items()) {
        if (name.empty() || name.starts_with("comment.")) {
            throw HttpError(400, "reserved or empty metadata attribute '" + name + "'", { { "field", name } });
        }
        const json items = value.is_array() ? value : json::array({ value });
        if (items.empty()) {
            throw HttpError(400, "metadata attribute '" + name + "' has no values", { { "field", name } });
        }
        bool any_float = false;
        bool all_numbers = true;
        for (const auto& v : items) {
            any_float |= v.is_number_float();
            all_numbers &= v.is_number();
        }
        MetadataTuple t;
        t.name = name;
        if (all_numbers) {
            t.type = any_float ? catalog::MetadataType::floating : catalog::MetadataType::integer;
            for (const auto& v : items) {
                if (any_float) {
                    t.values.emplace_back(v.get<double>());
                } else {
                    t.values.emplace_back(v.get<std::int64_t>());
                }
            }
        } else if (items.front().is_boolean()) {
            t.type = catalog::MetadataType::boolean;
            for (const auto& v : items) {
                if (!v.is_boolean()) {
                    throw HttpError(400, "metadata attribute '" + name + "' mixes value types", { { "field", name } });
                }
                t.values.emplace_back(v.get<bool>());
            }
        } else if (items.front().is_string()) {
            // Strings that read as dates become dates so range queries work on them.
            bool dates = true;
            for (const auto& v : items) {
                if (!v.is_string()) {
                    throw HttpError(400, "metadata attribute '" + name + "' mixes value types", { { "field", name } });
                }
                dates &= catalog::parse_date(v.get<std::string>()).has_value();
            }
            t.type = dates ? catalog::MetadataType::date : catalog::MetadataType::string;
            for (const auto& v : items) {
                if (dates) {
                    t.values.emplace_back(*catalog::parse_date(v.get<std::string>()));
                } else {
                    t.values.emplace_back(v.get<std::string>());
                }
            }
        } else {
            throw HttpError(400, "metadata attribute '" + name + "' must hold strings, numbers or booleans",
                { { "field", name } });
        }
        try {
            t.check();
        } catch (const catalog::InvalidMetadata& e) {
            throw HttpError(400, e.what(), { { "field", name } });
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::string academic_year(const catalog::Date& d)
{
    const auto text = catalog::format_date(d);
    const int year = std::stoi(text.substr(0, 4));
    const int month = std::stoi(text.substr(5, 2));
    return "AY" + std::to_string(month >= 8 ? year : year - 1);
}

std::string slug(std::string_view title)
{
    std::string out;
    for (unsigned char c : title) {
        if (std::isalnum(c)) {
            out += static_cast<char>(std::tolower(c));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
        if (out.size() >= 40) {
            break;
        }
    }
    while (!out.empty() && out.back() == '_') {
        out.pop_back();
    }
    return out.empty() ? "untitled" : out;
}

std::string dataset_lfn(const cosmic::Dataset& ds, std::string_view digest)
{
    const bool plain = !ds.detector_id.empty() && ds.detector_id.size() <= 40
        && std::all_of(ds.detector_id.begin(), ds.detector_id.end(), [](unsigned char c) {
               return std::isalnum(c) || c == '_' || c == '-';
           });
    return (plain ? ds.detector_id : std::string("upload")) + "-" + std::string(digest) + ".data";
}

struct CommentView {
    std::string seq;
    GroupId author_group_id = 0;
    std::string author;
    std::string created_at;
    std::string body;
};

std::vector<CommentView> comments_of(const CatalogObject& obj)
{
    std::vector<CommentView> out;
    for (const auto& [name, t] : obj.metadata) {
        if (!name.starts_with("comment.") || t.type != catalog::MetadataType::string || t.values.size() != 4) {
            continue;
        }
        CommentView c;
        c.seq = name.substr(8);
        c.author_group_id = parse_int(std::get<std::string>(t.values[0])).value_or(0);
        c.author = std::get<std::string>(t.values[1]);
        c.created_at = std::get<std::string>(t.values[2]);
        c.body = std::get<std::string>(t.values[3]);
        out.push_back(std::move(c));
    }
    return out;
}

json comment_json(const CommentView& c)
{
    return { { "seq", c.seq }, { "author_group_id", c.author_group_id }, { "author", c.author },
        { "created_at", c.created_at }, { "body", c.body } };
}

json entry_json(const LogbookEntry& e)
{
    json j { { "id", e.id }, { "group_id", e.group_id }, { "milestone", e.milestone }, { "body", e.body },
        { "created_at", format_timestamp(e.created_at_ns) }, { "author_role", to_string(e.author_role) } };
    if (e.teacher_comment) {
        j["teacher_comment"] = *e.teacher_comment;
        j["commented_at"] = format_timestamp(*e.commented_at_ns);
    }
    return j;
}

std::optional<ObjectKind> content_kind(std::string_view s)
{
    if (s == "glossary") {
        return ObjectKind::glossary;
    }
    if (s == "reference") {
        return ObjectKind::reference;
    }
    return std::nullopt;
}

std::string content_name(ObjectKind kind, std::string_view name)
{
    const std::string prefix = kind == ObjectKind::glossary ? "Glossary_" : "Reference_";
    return name.starts_with(prefix) ? std::string(name) : prefix + std::string(name);
}

std::string text_attribute(const CatalogObject& obj, std::string_view attr)
{
    const auto* t = obj.attribute(attr);
    if (!t || t->type != catalog::MetadataType::string || t->values.empty()) {
        return {};
    }
    return std::get<std::string>(t->values.front());
}

} // namespace

struct Service::Impl {
    ServiceConfig config;
    Database db;
    BlobStore blobs;
    catalog::Catalog catalog;
    provenance::ProvenanceStore provenance;
    planner::Registry registry;
    vds::VirtualDataSystem vds;
    UserStore users;
    SessionManager sessions;
    LogbookStore logbook;
    AnalysisRunner analyses;
    std::unique_ptr<httplib::Server> server;
    std::thread thread;
    int port = -1;

    explicit Impl(ServiceConfig c);

    void routes();
    std::optional<Group> session_group(const httplib::Request& req);
    Group require(const httplib::Request& req);
    std::string teacher_name(const Group& g);
    std::set<GroupId> visible_groups(const Group& g);
    CatalogObject comment_target(const std::string& target);

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;
    httplib::Server::Handler wrap(Handler h);

    void register_group(const httplib::Request& req, httplib::Response& res);
    void login(const httplib::Request& req, httplib::Response& res);
    void logout(const httplib::Request& req, httplib::Response& res);
    void whoami(const httplib::Request& req, httplib::Response& res);
    void upload(const httplib::Request& req, httplib::Response& res);
    void search(const httplib::Request& req, httplib::Response& res);
    void submit_analysis(const httplib::Request& req, httplib::Response& res);
    void get_analysis(const httplib::Request& req, httplib::Response& res);
    void get_plot(const httplib::Request& req, httplib::Response& res);
    void get_dag(const httplib::Request& req, httplib::Response& res);
    void save_plot(const httplib::Request& req, httplib::Response& res);
    void create_poster(const httplib::Request& req, httplib::Response& res);
    void get_poster(const httplib::Request& req, httplib::Response& res);
    void add_comment(const httplib::Request& req, httplib::Response& res);
    void list_comments(const httplib::Request& req, httplib::Response& res);
    void put_content(const httplib::Request& req, httplib::Response& res);
    void list_content(const httplib::Request& req, httplib::Response& res);
    void get_content(const httplib::Request& req, httplib::Response& res);
    void write_logbook(const httplib::Request& req, httplib::Response& res);
    void read_logbook(const httplib::Request& req, httplib::Response& res);
    void milestones(const httplib::Request& req, httplib::Response& res);
};

namespace {

std::filesystem::path prepare_root(const std::filesystem::path& root)
{
    std::filesystem::create_directories(root);
    return root;
}

} // namespace

Service::Impl::Impl(ServiceConfig c)
    : config(std::move(c))
    , db(prepare_root(config.storage_root) / "elab.db")
    , blobs(config.storage_root / "blobs")
    , catalog(db)
    , provenance(db)
    , registry(cosmic::make_registry())
    , vds(catalog, provenance, blobs, registry, { config.storage_root / "work", config.job_width })
    , users(db, config.password_iterations)
    , sessions(std::chrono::nanoseconds(static_cast<std::int64_t>(config.session_idle_hours * 3600e9)), config.clock)
    , logbook(db)
    , analyses(vds, config.worker_pool_size)
{
    cosmic::install_library(vds);
    if (config.admin && !users.find(config.admin->school, config.admin->name)) {
        users.register_group({ config.admin->name, config.admin->school, "", "", Role::admin, std::nullopt,
            config.admin->password });
    }
    if (config.tls()) {
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
        server = std::make_unique<httplib::SSLServer>(config.tls_cert->c_str(), config.tls_key->c_str());
        if (!server->is_valid()) {
            throw ConfigError("cannot load TLS certificate or key");
        }
#else
        throw ConfigError("built without TLS support");
#endif
    } else {
        server = std::make_unique<httplib::Server>();
    }
    server->set_payload_max_length(max_upload_bytes);
    routes();
    if (config.static_root && !server->set_mount_point("/", config.static_root->string())) {
        throw ConfigError("static_root is not a directory");
    }
}

std::optional<Group> Service::Impl::session_group(const httplib::Request& req)
{
    const auto token = cookie_value(req, session_cookie);
    if (!token) {
        return std::nullopt;
    }
    const auto id = sessions.touch(*token);
    if (!id) {
        return std::nullopt;
    }
    return users.get(*id);
}

Group Service::Impl::require(const httplib::Request& req)
{
    auto g = session_group(req);
    if (!g) {
        throw HttpError(401, "authentication required");
    }
    return *g;
}

std::string Service::Impl::teacher_name(const Group& g)
{
    if (g.teacher_id) {
        if (auto t = users.get(*g.teacher_id)) {
            return t->name;
        }
    }
    return g.name;
}

std::set<GroupId> Service::Impl::visible_groups(const Group& g)
{
    std::set<GroupId> out { g.id };
    if (g.role == Role::teacher) {
        for (auto s : users.students_of(g.id)) {
            out.insert(s);
        }
    }
    return out;
}

httplib::Server::Handler Service::Impl::wrap(Handler h)
{
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            h(req, res);
        } catch (const HttpError& e) {
            json body = e.extra;
            body["error"] = e.what();
            send_json(res, e.status, body);
        } catch (const catalog::UnknownObject& e) {
            send_json(res, 404, { { "error", e.what() } });
        } catch (const catalog::DuplicateName& e) {
            send_json(res, 409, { { "error", e.what() } });
        } catch (const catalog::TypeConflict& e) {
            send_json(res, 409, { { "error", e.what() } });
        } catch (const catalog::InvalidObject& e) {
            send_json(res, 400, { { "error", e.what() } });
        } catch (const catalog::InvalidMetadata& e) {
            send_json(res, 400, { { "error", e.what() } });
        } catch (const json::exception& e) {
            send_json(res, 400, { { "error", std::string("bad request: ") + e.what() } });
        } catch (const std::exception& e) {
            send_json(res, 500, { { "error", e.what() } });
        }
    };
}

void Service::Impl::routes()
{
    auto& s = *server;
    auto bind = [this](void (Impl::*fn)(const httplib::Request&, httplib::Response&)) {
        return wrap([this, fn](const httplib::Request& req, httplib::Response& res) { (this->*fn)(req, res); });
    };
    s.Post("/api/groups", bind(&Impl::register_group));
    s.Post("/api/session", bind(&Impl::login));
    s.Delete("/api/session", bind(&Impl::logout));
    s.Get("/api/session", bind(&Impl::whoami));
    s.Post("/api/data", bind(&Impl::upload));
    s.Get("/api/data", bind(&Impl::search));
    s.Post("/api/analyses", bind(&Impl::submit_analysis));
    s.Get(R"(/api/analyses/([^/]+))", bind(&Impl::get_analysis));
    s.Get(R"(/api/plots/([^/]+))", bind(&Impl::get_plot));
    s.Post(R"(/api/plots/([^/]+)/metadata)", bind(&Impl::save_plot));
    s.Get(R"(/api/dag/([^/]+))", bind(&Impl::get_dag));
    s.Post("/api/posters", bind(&Impl::create_poster));
    s.Get(R"(/api/posters/([^/]+))", bind(&Impl::get_poster));
    s.Post("/api/comments", bind(&Impl::add_comment));
    s.Get("/api/comments", bind(&Impl::list_comments));
    s.Put(R"(/api/content/([^/]+)/([^/]+))", bind(&Impl::put_content));
    s.Get(R"(/api/content/([^/]+)/([^/]+))", bind(&Impl::get_content));
    s.Get(R"(/api/content/([^/]+))", bind(&Impl::list_content));
    s.Post("/api/logbook", bind(&Impl::write_logbook));
    s.Get("/api/logbook", bind(&Impl::read_logbook));
    s.Get("/api/milestones", bind(&Impl::milestones));
}

void Service::Impl::register_group(const httplib::Request& req, httplib::Response& res)
{
    const auto body = parse_body(req);
    Registration r;
    r.name = string_field(body, "name");
    r.school = string_field(body, "school");
    r.city = string_field(body, "city", false);
    r.state = string_field(body, "state", false);
    r.password = string_field(body, "password");
    if (body.contains("role")) {
        auto role = parse_role(string_field(body, "role"));
        if (!role) {
            throw HttpError(400, "role must be student, teacher or admin", { { "field", "role" } });
        }
        r.role = *role;
    }
    if (body.contains("teacher_id")) {
        if (!body.at("teacher_id").is_number_integer()) {
            throw HttpError(400, "teacher_id must be an integer", { { "field", "teacher_id" } });
        }
        r.teacher_id = body.at("teacher_id").get<GroupId>();
    }
    if (r.role == Role::admin) {
        auto caller = session_group(req);
        if (!caller || caller->role != Role::admin) {
            throw HttpError(403, "only an admin may create admin accounts");
        }
    }
    try {
        send_json(res, 201, group_json(users.register_group(r)));
    } catch (const DuplicateGroup& e) {
        throw HttpError(409, e.what());
    } catch (const InvalidRegistration& e) {
        throw HttpError(400, e.what());
    }
}

void Service::Impl::login(const httplib::Request& req, httplib::Response& res)
{
    const auto body = parse_body(req);
    const auto g = users.authenticate(string_field(body, "school"), string_field(body, "name"), string_field(body, "password"));
    if (!g) {
        throw HttpError(401, "bad credentials");
    }
    const auto token = sessions.open(g->id);
    res.set_header("Set-Cookie", std::string(session_cookie) + "=" + token + "; Path=/; HttpOnly; SameSite=Strict"
            + (config.tls() ? "; Secure" : ""));
    send_json(res, 200, { { "group", group_json(*g) } });
}

void Service::Impl::logout(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    sessions.close(*cookie_value(req, session_cookie));
    res.set_header("Set-Cookie", std::string(session_cookie) + "=; Path=/; Max-Age=0; HttpOnly; SameSite=Strict");
    res.status = 204;
}

void Service::Impl::whoami(const httplib::Request& req, httplib::Response& res)
{
    send_json(res, 200, { { "group", group_json(require(req)) } });
}

void Service::Impl::upload(const httplib::Request& req, httplib::Response& res)
{
    const auto g = require(req);
    std::string raw;
    json declared = json::object();
    if (req.is_multipart_form_data()) {
        if (!req.has_file("file")) {
            throw HttpError(400, "multipart upload needs a 'file' part");
        }
        raw = req.get_file_value("file").content;
        if (req.has_file("metadata")) {
            try {
                declared = json::parse(req.get_file_value("metadata").content);
            } catch (const json::parse_error& e) {
                throw HttpError(400, std::string("metadata part is not JSON: ") + e.what());
            }
        }
    } else if (req.get_header_value("Content-Type").starts_with("application/json")) {
        const auto body = parse_body(req);
        raw = string_field(body, "content");
        if (body.contains("metadata")) {
            declared = body.at("metadata");
        }
    } else {
        raw = req.body;
    }
    auto metadata = metadata_from_request(declared);

    cosmic::UploadResult parsed;
    try {
        parsed = cosmic::validate_upload(raw);
    } catch (const cosmic::DatasetError& e) {
        json err { { "message", e.what() } };
        if (e.line() > 0) {
            err["line"] = e.line();
        }
        throw HttpError(400, "invalid data file", { { "errors", json::array({ err }) } });
    }
    // Extracted tuples win over declared ones of the same name.
    for (auto& t : parsed.metadata) {
        metadata.push_back(std::move(t));
    }
    metadata.push_back(MetadataTuple::string("group", { g.name }));
    metadata.push_back(MetadataTuple::string("teacher", { teacher_name(g) }));
    metadata.push_back(MetadataTuple::integer("uploader_id", { g.id }));

    const auto digest = sha256_hex(raw);
    // A short digest names the file; the full one only on a prefix collision.
    auto lfn = dataset_lfn(parsed.dataset, std::string_view(digest).substr(0, 16));
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto existing = catalog.find_file(lfn);
        if (!existing) {
            break;
        }
        if (existing->payload == digest) {
            send_json(res, 200, { { "lfn", lfn }, { "created", false }, { "object", object_json(*existing) } });
            return;
        }
        lfn = dataset_lfn(parsed.dataset, digest);
    }
    const auto id = vds.import_file(lfn, raw, metadata);
    send_json(res, 201, { { "lfn", lfn }, { "created", true }, { "object", object_json(catalog.get(id)) } });
}

void Service::Impl::search(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    const auto q = req.get_param_value("q");
    std::int64_t page = 1;
    if (req.has_param("page")) {
        auto p = id_param(req.get_param_value("page"));
        if (!p || *p < 1) {
            throw HttpError(400, "page must be a positive integer", { { "field", "page" } });
        }
        page = *p;
    }
    auto uploaded = catalog::QueryNode::make_clause({ "type", catalog::Comparator::eq, std::string("Dataset") });
    catalog::QueryNode query = uploaded;
    if (!blank(q)) {
        try {
            query = catalog::QueryNode::make_and({ catalog::parse_query(q), uploaded });
        } catch (const catalog::QuerySyntaxError& e) {
            throw HttpError(400, e.what(), { { "position", e.position } });
        } catch (const catalog::QueryTypeError& e) {
            throw HttpError(400, e.what(), { { "position", e.position } });
        }
    }
    const auto hits = catalog.search(query, ObjectKind::dataset_file);
    const auto size = config.page_size;
    const auto first = std::min(hits.size(), static_cast<std::size_t>(page - 1) * size);
    const auto last = std::min(hits.size(), first + size);
    json results = json::array();
    for (auto i = first; i < last; ++i) {
        results.push_back(object_json(hits[i]));
    }
    send_json(res, 200, { { "query", q }, { "page", page }, { "page_size", size }, { "total", hits.size() },
        { "pages", (hits.size() + size - 1) / size }, { "results", results } });
}

void Service::Impl::submit_analysis(const httplib::Request& req, httplib::Response& res)
{
    const auto g = require(req);
    const auto body = parse_body(req);
    AnalysisRequest ar;
    const auto study = parse_study(string_field(body, "study"));
    if (!study) {
        throw HttpError(400, "study must be lifetime, flux or shower", { { "field", "study" } });
    }
    ar.study = *study;
    if (!body.contains("inputs") || !body.at("inputs").is_array()) {
        throw HttpError(400, "inputs must be a list of dataset lfns", { { "field", "inputs" } });
    }
    for (const auto& v : body.at("inputs")) {
        if (!v.is_string()) {
            throw HttpError(400, "inputs must be a list of dataset lfns", { { "field", "inputs" } });
        }
        ar.inputs.push_back(v.get<std::string>());
    }
    if (body.contains("params")) {
        ar.params = body.at("params");
    }
    try {
        send_json(res, 202, to_json(analyses.submit(ar, g.id)));
    } catch (const InvalidAnalysis& e) {
        json fields = json::array();
        for (const auto& f : e.fields()) {
            fields.push_back({ { "field", f.field }, { "message", f.message }, { "help", f.help } });
        }
        throw HttpError(400, "invalid parameters", { { "fields", fields } });
    } catch (const UnknownInput& e) {
        throw HttpError(404, e.what(), { { "lfn", e.lfn() } });
    }
}

void Service::Impl::get_analysis(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    const auto a = analyses.get(req.matches[1]);
    if (!a) {
        throw HttpError(404, "unknown analysis");
    }
    send_json(res, 200, to_json(*a));
}

void Service::Impl::get_plot(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    const std::string lfn = req.matches[1];
    if (!catalog.find(ObjectKind::plot, lfn)) {
        throw HttpError(404, "unknown plot '" + lfn + "'");
    }
    res.status = 200;
    res.set_content(vds.read_file(lfn), "image/svg+xml");
}

void Service::Impl::get_dag(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    const std::string lfn = req.matches[1];
    if (!vdl::is_valid_lfn(lfn) || !vds.has_file(lfn)) {
        throw HttpError(404, "unknown file '" + lfn + "'");
    }
    res.status = 200;
    res.set_content(provenance::export_dot(vds.build_dag(lfn)), "text/vnd.graphviz");
}

void Service::Impl::save_plot(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    const std::string lfn = req.matches[1];
    const auto plot = catalog.find(ObjectKind::plot, lfn);
    if (!plot) {
        throw HttpError(404, "unknown plot '" + lfn + "'");
    }
    const auto body = parse_body(req);
    if (!body.contains("metadata")) {
        throw HttpError(400, "missing field 'metadata'", { { "field", "metadata" } });
    }
    send_json(res, 200, object_json(catalog.annotate(plot->id, metadata_from_request(body.at("metadata")))));
}

void Service::Impl::create_poster(const httplib::Request& req, httplib::Response& res)
{
    const auto g = require(req);
    const auto body = parse_body(req);
    const auto title = string_field(body, "title");
    if (blank(title)) {
        throw HttpError(400, "title must not be empty", { { "field", "title" } });
    }
    std::vector<std::string> authors;
    if (body.contains("authors")) {
        for (const auto& a : body.at("authors")) {
            authors.push_back(a.get<std::string>());
        }
    }
    if (authors.empty()) {
        authors.push_back(g.name);
    }
    catalog::Date date { now_ns() / 1'000'000'000, true };
    if (body.contains("date")) {
        auto d = catalog::parse_date(string_field(body, "date"));
        if (!d) {
            throw HttpError(400, "date must be YYYY-MM-DD", { { "field", "date" } });
        }
        date = *d;
    }
    std::vector<std::string> figures;
    std::vector<std::string> plot_urls;
    if (body.contains("figures")) {
        for (const auto& f : body.at("figures")) {
            const auto lfn = f.get<std::string>();
            const auto obj = vdl::is_valid_lfn(lfn) ? catalog.find_file(lfn) : std::nullopt;
            if (!obj) {
                throw HttpError(404, "unknown figure '" + lfn + "'", { { "lfn", lfn } });
            }
            if (obj->kind == ObjectKind::plot) {
                plot_urls.push_back("/api/plots/" + lfn);
            }
            figures.push_back(lfn);
        }
    }
    const json poster { { "title", title }, { "authors", authors }, { "date", catalog::format_date(date) },
        { "abstract", string_field(body, "abstract", false) }, { "procedures", string_field(body, "procedures", false) },
        { "results", string_field(body, "results", false) },
        { "discussion", string_field(body, "discussion", false) }, { "figures", figures } };

    CatalogObject obj;
    obj.kind = ObjectKind::poster;
    obj.payload = poster.dump();
    obj.add(MetadataTuple::string("author", authors));
    if (!g.city.empty()) {
        obj.add(MetadataTuple::string("city", { g.city }));
    }
    obj.add(MetadataTuple::date("date", { date }));
    obj.add(MetadataTuple::string("group", { g.name }));
    if (!plot_urls.empty()) {
        obj.add(MetadataTuple::string("plotURL", plot_urls));
    }
    obj.add(MetadataTuple::string("project", { "Cosmic" }));
    obj.add(MetadataTuple::string("school", { g.school }));
    if (!g.state.empty()) {
        obj.add(MetadataTuple::string("state", { g.state }));
    }
    obj.add(MetadataTuple::string("teacher", { teacher_name(g) }));
    obj.add(MetadataTuple::string("title", { title }));
    obj.add(MetadataTuple::string("type", { "Poster" }));
    obj.add(MetadataTuple::string("year", { academic_year(date) }));

    const auto base = "poster_" + slug(title);
    for (int n = 1;; ++n) {
        obj.name = base + (n == 1 ? std::string() : "_" + std::to_string(n)) + ".data";
        if (catalog.find(ObjectKind::poster, obj.name)) {
            continue;
        }
        try {
            const auto id = catalog.register_object(obj);
            json out = object_json(catalog.get(id));
            out["poster"] = poster;
            send_json(res, 201, out);
            return;
        } catch (const catalog::DuplicateName&) {
            // Lost a race for this name; try the next one.
        }
    }
}

void Service::Impl::get_poster(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    std::optional<CatalogObject> obj;
    if (auto id = id_param(req.matches[1].str())) {
        try {
            obj = catalog.get(*id);
        } catch (const catalog::UnknownObject&) {
        }
    } else {
        obj = catalog.find(ObjectKind::poster, req.matches[1].str());
    }
    if (!obj || obj->kind != ObjectKind::poster) {
        throw HttpError(404, "unknown poster");
    }
    json out = object_json(*obj);
    out["poster"] = json::parse(obj->payload);
    send_json(res, 200, out);
}

CatalogObject Service::Impl::comment_target(const std::string& target)
{
    std::optional<CatalogObject> obj;
    if (auto id = id_param(target)) {
        try {
            obj = catalog.get(*id);
        } catch (const catalog::UnknownObject&) {
        }
    } else if (vdl::is_valid_lfn(target)) {
        obj = catalog.find_file(target);
        if (!obj) {
            obj = catalog.find(ObjectKind::poster, target);
        }
    }
    if (!obj
        || (obj->kind != ObjectKind::dataset_file && obj->kind != ObjectKind::plot && obj->kind != ObjectKind::poster)) {
        throw HttpError(404, "unknown comment target '" + target + "'");
    }
    return *obj;
}

void Service::Impl::add_comment(const httplib::Request& req, httplib::Response& res)
{
    const auto g = require(req);
    const auto body = parse_body(req);
    if (!body.contains("target") || !(body.at("target").is_string() || body.at("target").is_number_integer())) {
        throw HttpError(400, "target must be an object id or a name", { { "field", "target" } });
    }
    const auto target = body.at("target").is_string() ? body.at("target").get<std::string>()
                                                       : std::to_string(body.at("target").get<std::int64_t>());
    const auto text = string_field(body, "body");
    const auto obj = comment_target(target);
    if (blank(text)) {
        throw HttpError(400, "comment body must not be empty", { { "field", "body" } });
    }
    if (text.size() > max_comment_length) {
        throw HttpError(400, "comment body is too long", { { "field", "body" } });
    }
    const auto created = format_timestamp(now_ns());
    std::string seq;
    catalog.annotate_with(obj.id, [&](const CatalogObject& current) {
        std::size_t n = 0;
        for (const auto& [name, t] : current.metadata) {
            n += name.starts_with("comment.");
        }
        char buf[16];
        std::snprintf(buf, sizeof buf, "%06zu", n + 1);
        seq = buf;
        return std::vector<MetadataTuple> { MetadataTuple::string(
            "comment." + seq, { std::to_string(g.id), g.name, created, text }) };
    });
    send_json(res, 201,
        { { "target", obj.id }, { "comment", comment_json({ seq, g.id, g.name, created, text }) } });
}

void Service::Impl::list_comments(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    if (!req.has_param("target")) {
        throw HttpError(400, "missing query parameter 'target'", { { "field", "target" } });
    }
    const auto obj = comment_target(req.get_param_value("target"));
    json list = json::array();
    for (const auto& c : comments_of(obj)) {
        list.push_back(comment_json(c));
    }
    send_json(res, 200, { { "target", obj.id }, { "name", obj.name }, { "comments", list } });
}

void Service::Impl::put_content(const httplib::Request& req, httplib::Response& res)
{
    const auto g = require(req);
    const auto kind = content_kind(req.matches[1].str());
    if (!kind) {
        throw HttpError(404, "unknown content kind");
    }
    if (g.role == Role::student) {
        throw HttpError(403, "only teachers and admins edit content");
    }
    const auto body = parse_body(req);
    const auto name = content_name(*kind, req.matches[2].str());
    const auto html = sanitize_html(string_field(body, "body"));
    const auto description = string_field(body, "description", false);
    const std::vector<MetadataTuple> md { MetadataTuple::string("body", { html }),
        MetadataTuple::string("description", { description }) };

    int status = 200;
    if (auto existing = catalog.find(*kind, name)) {
        catalog.annotate(existing->id, md);
    } else {
        CatalogObject obj;
        obj.kind = *kind;
        obj.name = name;
        for (const auto& t : md) {
            obj.add(t);
        }
        catalog.register_object(obj);
        status = 201;
    }
    send_json(res, status, { { "name", name }, { "description", description }, { "body", html } });
}

void Service::Impl::list_content(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    const auto kind = content_kind(req.matches[1].str());
    if (!kind) {
        throw HttpError(404, "unknown content kind");
    }
    json items = json::array();
    for (const auto& obj : catalog.list_by_kind(*kind)) {
        items.push_back({ { "name", obj.name }, { "description", text_attribute(obj, "description") } });
    }
    send_json(res, 200, { { "items", items } });
}

void Service::Impl::get_content(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    const auto kind = content_kind(req.matches[1].str());
    if (!kind) {
        throw HttpError(404, "unknown content kind");
    }
    const auto obj = catalog.find(*kind, content_name(*kind, req.matches[2].str()));
    if (!obj) {
        throw HttpError(404, "unknown item");
    }
    send_json(res, 200, { { "name", obj->name }, { "description", text_attribute(*obj, "description") },
                            { "body", text_attribute(*obj, "body") } });
}

void Service::Impl::write_logbook(const httplib::Request& req, httplib::Response& res)
{
    const auto g = require(req);
    const auto body = parse_body(req);
    if (body.contains("entry_id")) {
        if (g.role == Role::student) {
            throw HttpError(403, "only teachers comment on logbook entries");
        }
        if (!body.at("entry_id").is_number_integer()) {
            throw HttpError(400, "entry_id must be an integer", { { "field", "entry_id" } });
        }
        const auto entry = logbook.get(body.at("entry_id").get<std::int64_t>());
        if (!entry) {
            throw HttpError(404, "unknown logbook entry");
        }
        if (g.role == Role::teacher && !visible_groups(g).contains(entry->group_id)) {
            throw HttpError(403, "not one of your groups");
        }
        const auto text = string_field(body, "comment");
        if (blank(text)) {
            throw HttpError(400, "comment must not be empty", { { "field", "comment" } });
        }
        send_json(res, 200, entry_json(logbook.comment(entry->id, text)));
        return;
    }
    if (g.role != Role::student) {
        throw HttpError(403, "only student groups keep logbooks");
    }
    const auto milestone = string_field(body, "milestone");
    if (std::none_of(config.milestones.begin(), config.milestones.end(), [&](const Milestone& m) { return m.id == milestone; })) {
        throw HttpError(400, "unknown milestone '" + milestone + "'", { { "field", "milestone" } });
    }
    const auto text = string_field(body, "body");
    if (blank(text)) {
        throw HttpError(400, "entry body must not be empty", { { "field", "body" } });
    }
    send_json(res, 201, entry_json(logbook.write(g.id, milestone, text, g.role)));
}

void Service::Impl::read_logbook(const httplib::Request& req, httplib::Response& res)
{
    const auto g = require(req);
    json entries = json::array();
    if (req.has_param("milestone")) {
        const auto milestone = req.get_param_value("milestone");
        if (std::none_of(config.milestones.begin(), config.milestones.end(), [&](const Milestone& m) { return m.id == milestone; })) {
            throw HttpError(400, "unknown milestone '" + milestone + "'", { { "field", "milestone" } });
        }
        if (g.role == Role::student) {
            throw HttpError(403, "the milestone overview is for teachers");
        }
        const auto list = g.role == Role::admin ? logbook.by_milestone(milestone)
                                                : logbook.by_milestone(milestone, visible_groups(g));
        for (const auto& e : list) {
            entries.push_back(entry_json(e));
        }
        send_json(res, 200, { { "milestone", milestone }, { "entries", entries } });
        return;
    }
    GroupId group = g.id;
    if (req.has_param("group")) {
        auto id = id_param(req.get_param_value("group"));
        if (!id) {
            throw HttpError(400, "group must be a group id", { { "field", "group" } });
        }
        group = *id;
    }
    if (g.role != Role::admin && !visible_groups(g).contains(group)) {
        throw HttpError(403, "not your group");
    }
    if (g.role == Role::admin && !users.get(group)) {
        throw HttpError(404, "unknown group");
    }
    for (const auto& e : logbook.by_group(group)) {
        entries.push_back(entry_json(e));
    }
    send_json(res, 200, { { "group_id", group }, { "entries", entries } });
}

void Service::Impl::milestones(const httplib::Request& req, httplib::Response& res)
{
    require(req);
    json list = json::array();
    for (const auto& m : config.milestones) {
        list.push_back({ { "id", m.id }, { "title", m.title } });
    }
    send_json(res, 200, { { "milestones", list } });
}

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config)))
{
}

Service::~Service()
{
    stop();
}

int Service::bind()
{
    if (impl_->port >= 0) {
        return impl_->port;
    }
    const auto& c = impl_->config;
    if (c.port == 0) {
        impl_->port = impl_->server->bind_to_any_port(c.bind_address);
    } else if (impl_->server->bind_to_port(c.bind_address, c.port)) {
        impl_->port = c.port;
    }
    if (impl_->port < 0) {
        throw Error("cannot bind " + c.bind_address + ":" + std::to_string(c.port));
    }
    return impl_->port;
}

void Service::run()
{
    bind();
    impl_->server->listen_after_bind();
}

int Service::start()
{
    const int p = bind();
    impl_->thread = std::thread([this] { impl_->server->listen_after_bind(); });
    impl_->server->wait_until_ready();
    return p;
}

void Service::stop()
{
    if (!impl_) {
        return;
    }
    impl_->server->stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

int Service::port() const
{
    return impl_->port;
}

const ServiceConfig& Service::config() const
{
    return impl_->config;
}

catalog::Catalog& Service::catalog()
{
    return impl_->catalog;
}

provenance::ProvenanceStore& Service::provenance()
{
    return impl_->provenance;
}

vds::VirtualDataSystem& Service::vds()
{
    return impl_->vds;
}

UserStore& Service::users()
{
    return impl_->users;
}

SessionManager& Service::sessions()
{
    return impl_->sessions;
}

LogbookStore& Service::logbook()
{
    return impl_->logbook;
}

AnalysisRunner& Service::analyses()
{
    return impl_->analyses;
}

} // namespace elab::service
