#include "elab/common/database.hpp"
#include "elab/cosmic/generator.hpp"
#include "elab/cosmic/lifetime.hpp"
#include "elab/cosmic/plot.hpp"
#include "elab/cosmic/transformations.hpp"
#include "elab/vdl/parser.hpp"
#include "elab/vds/vds.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

using namespace elab;
using namespace elab::vds;

namespace {

struct Env {
    testing::TempDir dir;
    Database db { dir / "v.db" };
    catalog::Catalog cat { db };
    provenance::ProvenanceStore prov { db };
    BlobStore blobs { dir / "blobs" };
    planner::Registry reg = cosmic::make_registry();
    VirtualDataSystem vds { cat, prov, blobs, reg, { dir / "work", 1 } };

    Env() { cosmic::install_library(vds); }
};

cosmic::Dataset sample(std::uint64_t seed = 5)
{
    cosmic::GeneratorSpec spec;
    spec.duration_s = 60;
    spec.trigger_count = 4000;
    spec.decay_fraction = 0.3;
    spec.seed = seed;
    return cosmic::generate_synthetic(spec).datasets[0];
}

vdl::Derivation lifetime_dv(const std::string& name, const std::string& data)
{
    const auto defs = vdl::parse_vdl("DV " + name + " = Lifetime:1(data = @" + data + ", plotdata = @" + name
        + ".json, fit = @" + name + ".fit.json, plot = @" + name + ".svg)");
    return std::get<vdl::Derivation>(defs[0]);
}

std::map<std::string, std::string> digests(Env& env, const RunResult& r)
{
    std::map<std::string, std::string> out;
    for (const auto& [param, lfn] : r.outputs) out[param] = env.cat.find_file(lfn)->payload;
    return out;
}

} // namespace

TEST_CASE("suffix_lfn puts the suffix before the extension")
{
    CHECK(suffix_lfn("a.svg", "-1a2b3c4d") == "a-1a2b3c4d.svg");
    CHECK(suffix_lfn("lt1.fit.json", "-x") == "lt1.fit-x.json");
    CHECK(suffix_lfn("plain", "-x") == "plain-x");
    CHECK(suffix_lfn("dir.d/plain", "-x") == "dir.d/plain-x");
}

TEST_CASE("a lifetime run matches direct calls byte for byte")
{
    Env env;
    const auto ds = sample();
    env.vds.import_file("det.data", cosmic::format_dataset(ds));
    const auto r = env.vds.run(lifetime_dv("lt1", "det.data"));
    REQUIRE(r.succeeded);
    CHECK_FALSE(r.cached);
    CHECK(r.records.size() == 4);

    const auto c = cosmic::decay_candidates(ds, 2, false, 1e-4);
    const auto h = cosmic::candidate_histogram(c, 60);
    const auto f = cosmic::fit_exponential(h, 0.2, 20.0);
    CHECK(env.vds.read_file(r.outputs.at("plotdata")) == cosmic::to_json(h));
    CHECK(env.vds.read_file(r.outputs.at("fit")) == cosmic::to_json(f));
    CHECK(env.vds.read_file(r.outputs.at("plot"))
        == cosmic::render_histogram_plot(h, f, { "Muon lifetime", "Decay time (µs)", "Candidates per bin" }));
    CHECK(env.vds.read_file("lt1.0.candidates") == cosmic::to_json(c));
}

TEST_CASE("a repeated run is answered from the cache")
{
    Env env;
    env.vds.import_file("det.data", cosmic::format_dataset(sample()));
    const auto dv = lifetime_dv("lt1", "det.data");
    const auto first = env.vds.run(dv);
    const auto n = env.prov.size();
    const auto again = env.vds.run(dv);
    CHECK(again.cached);
    CHECK(again.records.empty());
    CHECK(env.prov.size() == n);
    CHECK(again.outputs == first.outputs);

    // The cache agrees with a fresh execution.
    const auto hit = env.vds.check_cache(dv);
    REQUIRE(hit);
    CHECK(hit->record_ids.size() == 4);
    const auto cached = digests(env, again);
    const auto fresh = env.vds.run(dv, false);
    CHECK(digests(env, fresh) == cached);
    CHECK(env.prov.size() == n + 4);
}

TEST_CASE("changing one input byte misses the cache")
{
    Env env;
    auto text = cosmic::format_dataset(sample());
    env.vds.import_file("det.data", text);
    const auto dv = lifetime_dv("lt1", "det.data");
    env.vds.run(dv);
    // Last digit of the first fall time.
    const auto pos = text.find('\n', text.find("pulse ")) - 1;
    text[pos] = text[pos] == '9' ? '8' : static_cast<char>(text[pos] + 1);
    REQUIRE_NOTHROW(cosmic::parse_dataset(text));
    env.vds.import_file("det.data", text);
    CHECK_FALSE(env.vds.check_cache(dv));
    const auto r = env.vds.run(dv);
    CHECK_FALSE(r.cached);
    CHECK(r.records.size() == 4);
}

TEST_CASE("rederiving without overrides is deterministic")
{
    Env env;
    env.vds.import_file("det.data", cosmic::format_dataset(sample()));
    const auto first = env.vds.run(lifetime_dv("lt1", "det.data"));
    const auto want = digests(env, first);
    for (int i = 0; i < 20; ++i) {
        const auto r = env.vds.rederive("lt1.svg");
        CHECK_FALSE(r.cached);
        CHECK(r.dv_name == "lt1");
        CHECK(digests(env, r) == want);
    }
}

TEST_CASE("rederiving with an override defines a suffixed derivation")
{
    Env env;
    env.vds.import_file("det.data", cosmic::format_dataset(sample()));
    env.vds.run(lifetime_dv("lt1", "det.data"));
    const auto r = env.vds.rederive("lt1.svg", { { "bins", vdl::Literal { std::int64_t { 30 } } } });
    REQUIRE(r.succeeded);
    const auto suffix = "-" + sha256_hex("bins=30;").substr(0, 8);
    CHECK(r.dv_name == "lt1" + suffix);
    CHECK(r.outputs.at("plot") == "lt1" + suffix + ".svg");
    CHECK(r.outputs.at("fit") == "lt1.fit" + suffix + ".json");
    REQUIRE(env.vds.derivation(r.dv_name));
    CHECK(cosmic::histogram_from_json(env.vds.read_file(r.outputs.at("plotdata"))).bins() == 30);
    bool saw = false;
    for (const auto& rec : r.records) {
        if (rec.tr_name == "histogram") {
            CHECK(rec.scalars.at("bins") == "30");
            saw = true;
        }
    }
    CHECK(saw);
    // The original product is untouched.
    CHECK(cosmic::histogram_from_json(env.vds.read_file("lt1.json")).bins() == 60);
    // Provenance of the new plot leads back to the upload.
    CHECK(env.vds.build_dag(r.outputs.at("plot")).sources() == std::vector<std::string> { "det.data" });
}

TEST_CASE("rederive and run report their errors")
{
    Env env;
    env.vds.import_file("det.data", cosmic::format_dataset(sample()));
    CHECK_THROWS_AS(env.vds.rederive("det.data"), NotDerived);
    CHECK_THROWS_AS(env.vds.rederive("nowhere.svg"), provenance::UnknownFile);
    CHECK_THROWS_AS(env.vds.run("nope"), UnknownDerivation);
    auto bad = lifetime_dv("bad", "det.data");
    bad.bindings.emplace_back("bins", vdl::Literal { std::string("many") });
    CHECK_THROWS_AS(env.vds.run(bad), InvalidDerivation);
    env.vds.run(lifetime_dv("lt1", "det.data"));
    CHECK_THROWS_AS(env.vds.rederive("lt1.svg", { { "bins", vdl::Literal { 2.5 } } }), OverrideTypeMismatch);
    CHECK_THROWS_AS(env.vds.rederive("lt1.svg", { { "plot", vdl::Literal { std::int64_t { 1 } } } }), OverrideTypeMismatch);
    CHECK_THROWS_AS(env.vds.rederive("lt1.svg", { { "zzz", vdl::Literal { true } } }), OverrideTypeMismatch);
}

TEST_CASE("every derived file has a succeeded producer with its digest")
{
    Env env;
    env.vds.import_file("a.data", cosmic::format_dataset(sample(1)));
    env.vds.import_file("b.data", cosmic::format_dataset(sample(2)));
    env.vds.run(lifetime_dv("la", "a.data"));
    env.vds.run(lifetime_dv("lb", "b.data"));
    env.vds.rederive("la.svg", { { "fit_min", vdl::Literal { 0.5 } } });
    env.vds.define("DV fl = Flux:1(data = @b.data, bin_width = 5.0, series = @fl.jsonl, plot = @fl.svg)");
    REQUIRE(env.vds.run("fl").succeeded);
    env.vds.define("DV sh = ShowerSearch_2:1(data1 = @a.data, data2 = @b.data, groups = @sh.jsonl, plot = @sh.svg)");
    CHECK(env.vds.run("sh").records.size() == 1);

    std::set<std::string> derived;
    for (const auto& rec : env.prov.records()) {
        for (const auto& out : rec.outputs) derived.insert(out.lfn);
    }
    for (const auto& lfn : derived) {
        const auto p = env.prov.latest_producer(lfn);
        REQUIRE(p);
        const auto it = std::find_if(p->outputs.begin(), p->outputs.end(), [&](const auto& o) { return o.lfn == lfn; });
        if (p->status == provenance::Status::succeeded) {
            CHECK(env.cat.find_file(lfn)->payload == it->digest);
        }
        const auto dag = env.vds.build_dag(lfn);
        CHECK(dag.is_acyclic());
        CHECK(dag.is_bipartite());
        for (const auto& s : dag.sources()) CHECK((s == "a.data" || s == "b.data"));
    }
}
