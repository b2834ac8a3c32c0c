#include "elab/common/database.hpp"
#include "elab/provenance/dag.hpp"
#include "elab/provenance/store.hpp"
#include "oracles/graph_oracle.hpp"
#include "support/tempdir.hpp"

#include <doctest.h>

#include <random>

using namespace elab;
using namespace elab::provenance;

namespace {

ExecutionRecord simple(const std::string& dv, std::vector<FileUse> in, std::vector<FileUse> out)
{
    ExecutionRecord r;
    r.plan_id = "p";
    r.job_id = "j0";
    r.dv_name = dv;
    r.tr_name = "T";
    r.inputs = std::move(in);
    r.outputs = std::move(out);
    r.started_ns = 10;
    r.finished_ns = 20;
    return r;
}

std::set<std::string> all_nodes(const WorkflowDag& d)
{
    std::set<std::string> n;
    for (const auto& f : d.files) n.insert(WorkflowDag::file_node(f));
    for (const auto& [id, label] : d.derivations) n.insert(WorkflowDag::derivation_node(id));
    return n;
}

} // namespace

TEST_CASE("records are checked before they are stored")
{
    auto r = simple("d", {}, { { "o", "x", "" } });
    CHECK_THROWS_AS(check(r), InvalidRecord);
    r.outputs[0].digest = "abc";
    CHECK_NOTHROW(check(r));
    r.finished_ns = 5;
    CHECK_THROWS_AS(check(r), InvalidRecord);
    r.finished_ns = 20;
    r.status = Status::failed;
    r.outputs[0].digest = "";
    CHECK_NOTHROW(check(r));
}

TEST_CASE("record json lines round-trip")
{
    auto r = simple("d", { { "i", "a", "" } }, { { "o", "b", "dd" } });
    r.record_id = 7;
    r.scalars = { { "bins", "60" }, { "gate", "1e-04" } };
    r.failure_detail = "none";
    CHECK(record_from_json_line(to_json_line(r)) == r);
}

TEST_CASE("the audit log keeps every execution in order and survives reopening")
{
    testing::TempDir dir;
    std::mt19937_64 rng(1);
    const auto log = oracle::random_lineage(rng, 60);
    {
        Database db(dir / "p.db");
        ProvenanceStore store(db);
        for (auto rec : log.records) {
            rec.record_id = 0;
            store.record_execution(rec);
        }
        CHECK(store.size() == 60);
    }
    Database db(dir / "p.db");
    ProvenanceStore store(db);
    const auto recs = store.records();
    REQUIRE(recs.size() == log.records.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(recs[i] == log.records[i]);
        if (i > 0) CHECK(recs[i].started_ns >= recs[i - 1].started_ns);
    }
    for (const auto& [lfn, idx] : log.producer) {
        REQUIRE(store.latest_producer(lfn));
        CHECK(store.latest_producer(lfn)->record_id == log.records[idx].record_id);
    }
    CHECK_FALSE(store.latest_producer("src0.data"));
    std::size_t lines = 0;
    for (char c : store.export_audit()) lines += c == '\n';
    CHECK(lines == 60);
}

TEST_CASE("build_dag equals reverse reachability over random chains")
{
    std::mt19937_64 rng(2);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto log = oracle::random_lineage(rng, std::uniform_int_distribution<int>(1, 25)(rng));
        for (const auto& [lfn, idx] : log.producer) {
            const auto got = build_dag(log.records, lfn);
            const auto want = oracle::reverse_reach(log, lfn);
            CHECK(got == want);
            CHECK(got.is_acyclic());
            CHECK(got.is_bipartite());
            CHECK(oracle::topologically_sortable(all_nodes(got), got.edges));
            ++checked;
        }
        for (const auto& s : log.sources) {
            const auto d = build_dag(log.records, s, [](std::string_view) { return true; });
            CHECK(d.files == std::set<std::string> { s });
            CHECK(d.derivations.empty());
        }
    }
    CHECK(checked > 300);
}

TEST_CASE("a consumer links to the producer whose digest it read")
{
    std::vector<ExecutionRecord> log;
    log.push_back(simple("first", {}, { { "o", "x", "d1" } }));
    log.push_back(simple("second", {}, { { "o", "x", "d2" } }));
    log.push_back(simple("reader", { { "i", "x", "d1" } }, { { "o", "y", "d3" } }));
    log.push_back(simple("later", {}, { { "o", "x", "d4" } }));
    for (std::size_t i = 0; i < log.size(); ++i) log[i].record_id = static_cast<std::int64_t>(i + 1);
    const auto dag = build_dag(log, "y");
    CHECK(dag.derivations.size() == 2);
    CHECK(dag.derivations.contains(1));
    CHECK(dag.edges.contains({ "d:1", "f:x" }));
    CHECK_FALSE(dag.derivations.contains(4));
    // With no digest match the latest earlier producer stands in.
    log[2].inputs[0].digest = "zz";
    CHECK(build_dag(log, "y").derivations.contains(2));
    // The product's own producer is the latest one.
    CHECK(build_dag(log, "x").derivations.count(4) == 1);
}

TEST_CASE("unknown files are errors unless they are known sources")
{
    std::vector<ExecutionRecord> log { simple("a", { { "i", "up.data", "" } }, { { "o", "b", "d" } }) };
    log[0].record_id = 1;
    CHECK_THROWS_AS(build_dag(log, "nothing"), UnknownFile);
    CHECK(build_dag(log, "elsewhere", [](std::string_view l) { return l == "elsewhere"; }).files.size() == 1);
    CHECK(build_dag(log, "up.data").sources() == std::vector<std::string> { "up.data" });
    CHECK(build_dag(log, "b").sources() == std::vector<std::string> { "up.data" });
}

TEST_CASE("DOT export is stable and parses back")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        const auto log = oracle::random_lineage(rng, 15);
        for (const auto& [lfn, idx] : log.producer) {
            const auto dag = build_dag(log.records, lfn);
            const auto dot = export_dot(dag);
            CHECK(export_dot(oracle::reverse_reach(log, lfn)) == dot);
            const auto back = parse_dot(dot);
            CHECK(back.edges == dag.edges);
            CHECK(back == dag);
            CHECK(export_dot(back) == dot);
        }
    }
    WorkflowDag odd;
    odd.files = { "we\"ird\\name", "plain" };
    odd.derivations[4] = "T(dv \"q\")";
    odd.edges = { { "f:plain", "d:4" }, { "d:4", "f:we\"ird\\name" } };
    CHECK(parse_dot(export_dot(odd)) == odd);
    CHECK_THROWS_AS(parse_dot("graph {"), DotSyntaxError);
}
