#include "elab/catalog/catalog.hpp"
#include "elab/catalog/query.hpp"
#include "elab/common/database.hpp"
#include "oracles/query_oracle.hpp"
#include "support/poster_record.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <random>

using namespace elab;
using namespace elab::catalog;

namespace {

struct Fixture {
    testing::TempDir dir;
    Database db { dir / "cat.db" };
    Catalog cat { db };
};

std::vector<ObjectId> ids_of(const std::vector<CatalogObject>& objs)
{
    std::vector<ObjectId> out;
    for (const auto& o : objs) out.push_back(o.id);
    return out;
}

} // namespace

TEST_CASE("the poster record keeps all twelve attributes byte for byte")
{
    Fixture f;
    auto poster = testing::reference_poster();
    const auto id = f.cat.register_object(poster);
    poster.id = id;
    const auto back = f.cat.get(id);
    CHECK(back == poster);
    CHECK(to_json_line(back) == to_json_line(poster));
    CHECK(back.metadata.size() == 12);
    CHECK(std::get<std::string>(back.attribute("title")->values[0]) == "Possible Particle Decays");
    CHECK(std::get<std::string>(back.attribute("year")->values[0]) == "AY2004");
    CHECK(back.attribute("date")->type == MetadataType::date);

    const auto hits = f.cat.search(parse_query(R"(type = "Poster")"));
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].name == "poster_decays.data");
    CHECK(f.cat.search(parse_query(R"(city = "Batavia")")).size() == 1);
    CHECK(f.cat.search(parse_query(R"(date >= "2004-11-10" and date < "2004-11-11")")).size() == 1);
}

TEST_CASE("query grammar shapes")
{
    const auto q = parse_query(R"(type = "Poster" and city = "Batavia")");
    REQUIRE(q.kind == QueryNode::Kind::all_of);
    CHECK(q.children.size() == 2);
    CHECK(q.children[0].clause == Clause { "type", Comparator::eq, std::string("Poster") });
    const auto single = parse_query(R"(year = "AY2004")");
    CHECK(single.kind == QueryNode::Kind::clause);
    // not binds tighter than and, and tighter than or.
    const auto p = parse_query("a = 1 or not b = 2 and c = 3");
    REQUIRE(p.kind == QueryNode::Kind::any_of);
    REQUIRE(p.children[1].kind == QueryNode::Kind::all_of);
    CHECK(p.children[1].children[0].kind == QueryNode::Kind::negation);
    CHECK(parse_query("A = 1 AnD b CONTAINS \"x\"") == parse_query("A = 1 and b contains \"x\""));
}

TEST_CASE("query errors report byte positions")
{
    try {
        parse_query("a = 1 and");
        FAIL("expected error");
    } catch (const QuerySyntaxError& e) {
        CHECK(e.position == 9);
    }
    try {
        parse_query("n contains 5");
        FAIL("expected error");
    } catch (const QueryTypeError& e) {
        CHECK(e.position == 11);
    }
    CHECK_THROWS_AS(parse_query("flag < true"), QueryTypeError);
    CHECK_THROWS_AS(parse_query("(a = 1"), QuerySyntaxError);
    CHECK_THROWS_AS(parse_query("a = \"x"), QuerySyntaxError);
    CHECK_THROWS_AS(parse_query("a = 12abc"), QuerySyntaxError);
    CHECK_THROWS_AS(parse_query("= 3"), QuerySyntaxError);
}

TEST_CASE("random query trees print and reparse to the same tree")
{
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i) {
        const auto text = oracle::render(oracle::random_query(rng), rng);
        const auto q = parse_query(text);
        CHECK(parse_query(to_string(q)) == q);
    }
}

TEST_CASE("search agrees with the linear-scan oracle")
{
    Fixture f;
    std::mt19937_64 rng(4242);
    std::vector<std::pair<ObjectId, CatalogObject>> pop;
    for (std::size_t i = 0; i < 400; ++i) {
        auto o = oracle::random_object(rng, i);
        pop.emplace_back(f.cat.register_object(o), o);
    }
    for (int qi = 0; qi < 150; ++qi) {
        const auto oq = oracle::random_query(rng);
        const auto text = oracle::render(oq, rng);
        CAPTURE(text);
        std::vector<std::pair<ObjectKind, ObjectId>> want;
        for (const auto& [id, o] : pop) {
            if (oracle::holds(oq, o.metadata)) want.emplace_back(o.kind, id);
        }
        std::sort(want.begin(), want.end());
        std::vector<ObjectId> want_ids;
        for (const auto& w : want) want_ids.push_back(w.second);
        CHECK(ids_of(f.cat.search(parse_query(text))) == want_ids);
    }
}

TEST_CASE("clause semantics on edge cases")
{
    Metadata md;
    md["n"] = MetadataTuple::integer("n", { 3, 10 });
    md["x"] = MetadataTuple::floating("x", { 2.5 });
    md["s"] = MetadataTuple::string("s", { "Batavia" });
    md["d"] = MetadataTuple::date("d", { *parse_date("2004-11-10") });
    md["b"] = MetadataTuple::boolean("b", true);
    CHECK(matches(parse_query("n = 10"), md));
    CHECK(matches(parse_query("n > 9.5"), md));
    CHECK(matches(parse_query("n != 3"), md)); // 10 differs
    CHECK_FALSE(matches(parse_query("n = \"3\""), md));
    CHECK(matches(parse_query("x = 2.5 and x < 3"), md));
    CHECK(matches(parse_query("s contains \"tav\""), md));
    CHECK_FALSE(matches(parse_query("n contains \"3\""), md));
    CHECK(matches(parse_query("s < \"Chicago\""), md));
    CHECK(matches(parse_query("d = \"2004-11-10T00:00:00\""), md));
    CHECK_FALSE(matches(parse_query("d = \"yesterday\""), md));
    CHECK(matches(parse_query("b = TRUE"), md));
    CHECK_FALSE(matches(parse_query("b = 1"), md));
    CHECK_FALSE(matches(parse_query("missing = 1"), md));
    CHECK(matches(parse_query("not missing = 1"), md));
}

TEST_CASE("registration is idempotent and names are guarded")
{
    Fixture f;
    CatalogObject o { 0, ObjectKind::dataset_file, "a.data", "d1", {} };
    const auto id = f.cat.register_object(o);
    CHECK(f.cat.register_object(o) == id);
    CHECK(f.cat.size() == 1);
    // A file takes new content under the same lfn.
    o.payload = "d2";
    CHECK(f.cat.register_object(o) == id);
    CHECK(f.cat.get(id).payload == "d2");

    CatalogObject tr { 0, ObjectKind::transformation, "T:1", "TR T(...)", {} };
    f.cat.register_object(tr);
    tr.payload = "different";
    CHECK_THROWS_AS(f.cat.register_object(tr), DuplicateName);

    CHECK_THROWS_AS(f.cat.register_object({ 0, ObjectKind::glossary, "muon", "", {} }), InvalidObject);
    CHECK_THROWS_AS(f.cat.register_object({ 0, ObjectKind::reference, "Glossary_muon", "", {} }), InvalidObject);
    CHECK_THROWS_AS(f.cat.register_object({ 0, ObjectKind::dataset_file, "has space", "", {} }), InvalidObject);
    CHECK_NOTHROW(f.cat.register_object({ 0, ObjectKind::glossary, "Glossary_muon", "", {} }));
    CHECK_NOTHROW(f.cat.register_object({ 0, ObjectKind::reference, "Reference_flux", "", {} }));
    CHECK_THROWS_AS(f.cat.get(9999), UnknownObject);
}

TEST_CASE("annotate upserts, rejects type changes, and matches a replay")
{
    Fixture f;
    const auto id = f.cat.register_object({ 0, ObjectKind::plot, "p.svg", "d", {} });
    f.cat.annotate(id, { MetadataTuple::string("city", { "Batavia" }) });
    CHECK(std::get<std::string>(f.cat.get(id).attribute("city")->values[0]) == "Batavia");
    const auto before = f.cat.get(id);
    CHECK(f.cat.annotate(id, {}) == before);
    CHECK_THROWS_AS(f.cat.annotate(id, { MetadataTuple::integer("city", { 1 }) }), TypeConflict);
    CHECK_THROWS_AS(f.cat.annotate(77777, { MetadataTuple::integer("x", { 1 }) }), UnknownObject);
    CHECK_THROWS_AS(f.cat.annotate(id, { MetadataTuple { "e", MetadataType::integer, {} } }), InvalidMetadata);

    std::mt19937_64 rng(5);
    std::map<std::string, MetadataTuple> replay = f.cat.get(id).metadata;
    for (int step = 0; step < 300; ++step) {
        std::vector<MetadataTuple> batch;
        for (int k = std::uniform_int_distribution<int>(0, 3)(rng); k > 0; --k) {
            const int a = std::uniform_int_distribution<int>(0, 5)(rng);
            // Attribute a always has type a % 3 so no conflicts arise.
            const std::string name = "attr" + std::to_string(a);
            if (a % 3 == 0) batch.push_back(MetadataTuple::integer(name, { std::int64_t(step) }));
            else if (a % 3 == 1) batch.push_back(MetadataTuple::floating(name, { step * 0.5 }));
            else batch.push_back(MetadataTuple::string(name, { "v" + std::to_string(step), "w" }));
        }
        f.cat.annotate(id, batch);
        for (const auto& t : batch) replay.insert_or_assign(t.name, t);
    }
    CHECK(f.cat.get(id).metadata == replay);
}

TEST_CASE("stored values reparse under their declared type")
{
    Fixture f;
    std::mt19937_64 rng(8);
    for (std::size_t i = 0; i < 200; ++i) f.cat.register_object(oracle::random_object(rng, i));
    for (auto kind : { ObjectKind::dataset_file, ObjectKind::plot, ObjectKind::poster, ObjectKind::derivation }) {
        for (const auto& o : f.cat.list_by_kind(kind)) {
            for (const auto& [name, t] : o.metadata) {
                for (const auto& v : t.values) {
                    CHECK(value_type(v) == t.type);
                    CHECK(parse_value(t.type, format_value(v)) == v);
                }
            }
        }
    }
}

TEST_CASE("list_by_kind matches the generator's tally, sorted by name")
{
    Fixture f;
    std::mt19937_64 rng(11);
    std::map<ObjectKind, std::vector<std::string>> tally;
    for (std::size_t i = 0; i < 300; ++i) {
        const auto o = oracle::random_object(rng, i);
        f.cat.register_object(o);
        tally[o.kind].push_back(o.name);
    }
    for (auto& [kind, names] : tally) {
        std::sort(names.begin(), names.end());
        std::vector<std::string> got;
        for (const auto& o : f.cat.list_by_kind(kind)) got.push_back(o.name);
        CHECK(got == names);
    }
    CHECK(f.cat.search(parse_query("not nothing = 0")).size() == 300);
}

TEST_CASE("objects survive reopening the database")
{
    testing::TempDir dir;
    std::mt19937_64 rng(12);
    std::vector<CatalogObject> before;
    std::vector<std::vector<ObjectId>> results;
    std::vector<QueryNode> queries;
    for (int i = 0; i < 20; ++i) queries.push_back(parse_query(oracle::render(oracle::random_query(rng), rng)));
    {
        Database db(dir / "c.db");
        Catalog cat(db);
        for (std::size_t i = 0; i < 150; ++i) cat.register_object(oracle::random_object(rng, i));
        cat.annotate(3, { MetadataTuple::string("late", { "yes" }) });
        for (ObjectId id = 1; id <= 150; ++id) before.push_back(cat.get(id));
        for (const auto& q : queries) results.push_back(ids_of(cat.search(q)));
    }
    Database db(dir / "c.db");
    Catalog cat(db);
    for (const auto& o : before) CHECK(cat.get(o.id) == o);
    for (std::size_t i = 0; i < queries.size(); ++i) CHECK(ids_of(cat.search(queries[i])) == results[i]);
}

TEST_CASE("export and import reproduce the catalog")
{
    Fixture a;
    std::mt19937_64 rng(13);
    for (std::size_t i = 0; i < 50; ++i) a.cat.register_object(oracle::random_object(rng, i));
    a.cat.register_object(testing::reference_poster());
    const auto dump = a.cat.export_records();
    Fixture b;
    CHECK(b.cat.import_records(dump) == 51);
    CHECK(b.cat.export_records() == dump);
    const auto line = to_json_line(a.cat.get(51));
    CHECK(to_json_line(from_json_line(line)) == line);
}

TEST_CASE("dates parse in the accepted forms")
{
    CHECK(parse_date("2004-11-10")->epoch_seconds == 1100044800);
    CHECK_FALSE(parse_date("2004-11-10")->has_time);
    CHECK(parse_date("2004-11-10 00:00:00.0")->has_time);
    CHECK(parse_date("2004-11-10T01:02:03")->epoch_seconds == 1100044800 + 3723);
    CHECK_FALSE(parse_date("2004-02-30"));
    CHECK_FALSE(parse_date("2004-11-10 25:00:00"));
    CHECK_FALSE(parse_date("2004-11-10x"));
    CHECK_FALSE(parse_date("2004-11-1000:00:00.0"));
    for (const char* s : { "2004-11-10", "1999-01-31T23:59:59" }) {
        CHECK(parse_date(format_date(*parse_date(s))) == parse_date(s));
    }
}
