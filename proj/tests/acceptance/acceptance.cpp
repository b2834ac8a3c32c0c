// One line per acceptance criterion; exit status is the number of failures.

#include "elab/catalog/catalog.hpp"
#include "elab/catalog/query.hpp"
#include "elab/common/database.hpp"
#include "elab/common/digest.hpp"
#include "elab/common/text.hpp"
#include "elab/cosmic/generator.hpp"
#include "elab/cosmic/lifetime.hpp"
#include "elab/cosmic/shower.hpp"
#include "elab/cosmic/transformations.hpp"
#include "elab/planner/executor.hpp"
#include "elab/planner/plan.hpp"
#include "elab/provenance/dag.hpp"
#include "elab/provenance/store.hpp"
#include "elab/vdl/parser.hpp"
#include "elab/vdl/validate.hpp"
#include "elab/vds/vds.hpp"
#include "oracles/graph_oracle.hpp"
#include "oracles/query_oracle.hpp"
#include "oracles/science_oracle.hpp"
#include "oracles/vdl_oracle.hpp"
#include "support/authz_matrix.hpp"
#include "support/service_harness.hpp"
#include "support/poster_record.hpp"
#include "support/tempdir.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace elab;

namespace {

// Tolerances.
constexpr double recovery_tau = 2.2;
constexpr double recovery_rel_tol = 0.05;
constexpr double recovery_sigmas = 3.0;
constexpr double recovery_seconds = 10.0;

constexpr double small_tau = 2.38;
constexpr std::uint64_t small_min_candidates = 900;
constexpr std::uint64_t small_max_candidates = 1000;
constexpr double small_sigma_factor = 2.0;
constexpr double small_seconds = 5.0;

constexpr int pull_trials = 500;
constexpr double pull_max_mean = 0.15;
constexpr double pull_min_std = 0.8;
constexpr double pull_max_std = 1.25;
constexpr double pull_seconds = 60.0;

constexpr int shower_instances = 100;
constexpr std::size_t shower_max_pulses = 500;

constexpr std::size_t catalog_objects = 1000;
constexpr int catalog_queries = 200;

constexpr int vdl_definitions = 60;
constexpr int vdl_libraries = 60;

constexpr int planner_dags = 100;
constexpr int rederive_repeats = 5;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

/// Exactly `decays` decays (every trigger decays) plus background pulses
/// numbering 10% of the triggers.
cosmic::SyntheticData decay_run(std::uint64_t seed, std::int64_t decays, double tau)
{
    cosmic::GeneratorSpec spec;
    spec.trigger_count = decays;
    spec.duration_s = static_cast<double>(spec.trigger_count) / 10.0;
    spec.decay_fraction = 1.0;
    spec.tau_us = tau;
    spec.background_rate_hz = 0.1 * static_cast<double>(spec.trigger_count) / spec.duration_s;
    spec.seed = seed;
    return cosmic::generate_synthetic(spec);
}

/// Gate 1e-4 s, level 2, no energy check, 60 bins, fit 0.2 to 20 µs.
cosmic::LifetimeParams standard_params()
{
    cosmic::LifetimeParams p;
    p.coincidence_level = 2;
    p.check_second_pulse_energy = false;
    p.gate_width_s = 1e-4;
    p.bins = 60;
    p.fit_min_us = 0.2;
    p.fit_max_us = 20.0;
    return p;
}

Outcome lifetime_recovery()
{
    const auto t0 = Clock::now();
    const auto data = decay_run(2004, 10'000, recovery_tau);
    const auto r = cosmic::lifetime_study(data.datasets[0], standard_params());
    const double elapsed = seconds_since(t0);
    const double err = std::abs(r.fit.tau_us - recovery_tau);
    const bool ok = data.truth.detectors[0].decays == 10'000 && r.fit.converged
        && err / recovery_tau < recovery_rel_tol && err < recovery_sigmas * r.fit.sigma_tau_us
        && elapsed < recovery_seconds;
    return { ok, fmt("tau = %.4f +/- %.4f us from %llu candidates, %llu background pulses, rel err %.2f%%, %.2f s",
                     r.fit.tau_us, r.fit.sigma_tau_us, static_cast<unsigned long long>(r.fit.n_candidates),
                     static_cast<unsigned long long>(data.truth.detectors[0].background), 100 * err / recovery_tau, elapsed) };
}

Outcome small_sample_lifetime()
{
    const auto t0 = Clock::now();
    const auto data = decay_run(238, 1000, small_tau);
    const auto r = cosmic::lifetime_study(data.datasets[0], standard_params());
    const double elapsed = seconds_since(t0);
    const auto n = r.fit.n_candidates;
    const double expected = small_tau / std::sqrt(static_cast<double>(n));
    const double ratio = r.fit.sigma_tau_us / expected;
    const bool ok = r.fit.converged && n >= small_min_candidates && n <= small_max_candidates
        && ratio <= small_sigma_factor && ratio >= 1 / small_sigma_factor && elapsed < small_seconds;
    return { ok, fmt("%llu candidates, tau = %.4f +/- %.4f us, tau/sqrt(N) = %.4f, ratio %.2f, %.2f s",
                     static_cast<unsigned long long>(n), r.fit.tau_us, r.fit.sigma_tau_us, expected, ratio, elapsed) };
}

Outcome fit_pulls()
{
    const auto t0 = Clock::now();
    std::vector<double> pulls;
    int failed = 0;
    for (int trial = 0; trial < pull_trials; ++trial) {
        const auto data = decay_run(10'000 + static_cast<std::uint64_t>(trial), 2000, recovery_tau);
        try {
            const auto r = cosmic::lifetime_study(data.datasets[0], standard_params());
            if (!r.fit.converged || !(r.fit.sigma_tau_us > 0)) {
                ++failed;
                continue;
            }
            pulls.push_back((r.fit.tau_us - recovery_tau) / r.fit.sigma_tau_us);
        } catch (const Error&) {
            ++failed;
        }
    }
    const double elapsed = seconds_since(t0);
    double mean = 0;
    for (double p : pulls) mean += p;
    mean /= static_cast<double>(pulls.size());
    double var = 0;
    for (double p : pulls) var += (p - mean) * (p - mean);
    const double sd = std::sqrt(var / static_cast<double>(pulls.size() - 1));
    const bool ok = failed == 0 && std::abs(mean) < pull_max_mean && sd >= pull_min_std && sd <= pull_max_std
        && elapsed < pull_seconds;
    return { ok, fmt("%zu trials, pull mean %+.3f, std %.3f, %d failed fits, %.2f s", pulls.size(), mean, sd, failed, elapsed) };
}

Outcome coincidence_oracle()
{
    std::mt19937_64 rng(1999);
    int mismatches = 0;
    std::size_t groups = 0;
    for (int i = 0; i < shower_instances; ++i) {
        const auto ds = oracle::random_detectors(rng, shower_max_pulses);
        const auto window_ns = std::uniform_int_distribution<std::uint64_t>(1, 400)(rng);
        const int min_det = std::uniform_int_distribution<int>(2, static_cast<int>(ds.size()))(rng);
        const auto got = cosmic::shower_search(ds, static_cast<double>(window_ns) * 1e-9, min_det);
        mismatches += got != oracle::brute_force_showers(ds, window_ns, min_det);
        groups += got.size();
    }

    int planted = 0;
    int recovered = 0;
    for (int detectors = 2; detectors <= 5; ++detectors) {
        cosmic::GeneratorSpec spec;
        spec.detectors = detectors;
        spec.duration_s = 300;
        spec.trigger_rate_hz = 2;
        spec.planted_showers = 20;
        spec.seed = 77 + static_cast<std::uint64_t>(detectors);
        const auto data = cosmic::generate_synthetic(spec);
        const auto found = cosmic::shower_search(data.datasets, 1e-6, detectors);
        for (const auto& hits : data.truth.planted) {
            ++planted;
            const bool hit = std::any_of(found.begin(), found.end(), [&](const cosmic::CoincidenceGroup& g) {
                return std::all_of(hits.begin(), hits.end(), [&](const cosmic::PlantedHit& h) {
                    return std::any_of(g.pulses.begin(), g.pulses.end(), [&](const cosmic::GroupPulse& p) {
                        return p.detector_id == h.detector_id && p.channel == h.channel && p.rise_ns == h.rise_ns;
                    });
                });
            });
            recovered += hit;
        }
    }
    const bool ok = mismatches == 0 && planted > 0 && recovered == planted;
    return { ok, fmt("%d instances, %d mismatches, %zu groups compared; planted %d, recovered %d", shower_instances,
                     mismatches, groups, planted, recovered) };
}

Outcome catalog_oracle()
{
    testing::TempDir dir("elab-acc-cat");
    Database db(dir / "cat.db");
    catalog::Catalog cat(db);
    std::mt19937_64 rng(1000);
    std::vector<std::pair<catalog::ObjectId, catalog::CatalogObject>> pop;
    for (std::size_t i = 0; i < catalog_objects; ++i) {
        auto o = oracle::random_object(rng, i);
        pop.emplace_back(cat.register_object(o), o);
    }
    int mismatches = 0;
    std::size_t hits = 0;
    for (int q = 0; q < catalog_queries; ++q) {
        const auto oq = oracle::random_query(rng);
        const auto text = oracle::render(oq, rng);
        std::vector<std::pair<catalog::ObjectKind, catalog::ObjectId>> want;
        for (const auto& [id, o] : pop) {
            if (oracle::holds(oq, o.metadata)) want.emplace_back(o.kind, id);
        }
        std::sort(want.begin(), want.end());
        std::vector<catalog::ObjectId> want_ids;
        for (const auto& w : want) want_ids.push_back(w.second);
        std::vector<catalog::ObjectId> got;
        for (const auto& o : cat.search(catalog::parse_query(text))) got.push_back(o.id);
        mismatches += got != want_ids;
        hits += got.size();
    }

    auto poster = testing::reference_poster();
    poster.id = cat.register_object(poster);
    const auto back = cat.get(poster.id);
    const bool record_ok = back == poster && catalog::to_json_line(back) == catalog::to_json_line(poster)
        && back.metadata.size() == 12;
    return { mismatches == 0 && record_ok, fmt("%zu objects, %d queries, %d mismatches, %zu hits; reference poster record %s",
                                            catalog_objects, catalog_queries, mismatches, hits,
                                            record_ok ? "round-trips" : "differs") };
}

Outcome vdl_round_trip()
{
    using namespace elab::vdl;
    std::mt19937_64 rng(2003);
    std::vector<Definition> defs;
    for (int i = 0; i < vdl_definitions; ++i) defs.push_back(oracle::random_definition(rng));
    int differ = 0;
    for (const auto& d : defs) {
        const auto back = parse_vdl(serialize(d));
        differ += back.size() != 1 || back[0] != d || parse_vdl(serialize(back[0]))[0] != d;
    }

    int expansions = 0;
    int wrong = 0;
    for (int trial = 0; trial < vdl_libraries; ++trial) {
        const auto lib = oracle::random_library(rng);
        const auto resolve = lib.resolver();
        for (const auto& tr : lib.all) {
            if (tr.is_atomic()) continue;
            Derivation dv { "dv" + std::to_string(trial), tr.name, tr.version, {} };
            int f = 0;
            for (const auto& p : tr.params) {
                if (p.direction != Direction::scalar) {
                    dv.bindings.emplace_back(p.name, FileRef { "file" + std::to_string(f++) });
                } else if (!p.default_value || std::bernoulli_distribution(0.5)(rng)) {
                    dv.bindings.emplace_back(p.name, oracle::random_literal(rng, p.type));
                }
            }
            const auto rep = validate_derivation(dv, tr);
            if (!rep.ok()) {
                ++wrong;
                continue;
            }
            const auto got = expand_compound(tr, rep.effective, resolve, dv.name);
            std::map<std::string, Argument> actual;
            for (const auto& [k, v] : dv.bindings) actual[k] = v;
            std::vector<oracle::FlatCall> want;
            oracle::substitute(lib, tr, actual, dv.name, want);
            bool same = got.size() == want.size();
            for (std::size_t i = 0; same && i < got.size(); ++i) {
                same = got[i].transformation.key() == want[i].tr_key
                    && std::map<std::string, Argument>(got[i].bindings.begin(), got[i].bindings.end()) == want[i].args;
            }
            wrong += !same;
            ++expansions;
        }
    }
    const bool ok = differ == 0 && wrong == 0 && expansions >= 50;
    return { ok, fmt("%d definitions, %d differ after round-trip; %d compound expansions, %d disagree with substitution",
                     vdl_definitions, differ, expansions, wrong) };
}

struct VdsEnv {
    testing::TempDir dir { "elab-acc-vds" };
    Database db { dir / "v.db" };
    catalog::Catalog cat { db };
    provenance::ProvenanceStore prov { db };
    BlobStore blobs { dir / "blobs" };
    planner::Registry reg = cosmic::make_registry();
    vds::VirtualDataSystem vds { cat, prov, blobs, reg, { dir / "work", 1 } };

    VdsEnv() { cosmic::install_library(vds); }

    std::map<std::string, std::string> digests(const vds::RunResult& r) const
    {
        std::map<std::string, std::string> out;
        for (const auto& [param, lfn] : r.outputs) out[param] = cat.find_file(lfn)->payload;
        return out;
    }
};

Outcome provenance_determinism()
{
    const auto upload = cosmic::format_dataset(decay_run(7, 2000, 2.2).datasets[0]);
    const std::string dv = "DV lt = Lifetime:1(data = @run.data, plotdata = @lt.json, fit = @lt.fit.json, plot = @lt.svg)";
    auto analyse = [&](VdsEnv& env) {
        env.vds.import_file("run.data", upload);
        env.vds.define(dv);
        return env.vds.run("lt");
    };
    VdsEnv a;
    const auto first = analyse(a);
    const auto dag = a.vds.build_dag("lt.svg");
    const auto dot = provenance::export_dot(dag);
    const bool stable_here = provenance::export_dot(a.vds.build_dag("lt.svg")) == dot;

    const auto want = a.digests(first);
    int differ = 0;
    for (int i = 0; i < rederive_repeats; ++i) differ += a.digests(a.vds.rederive("lt.svg")) != want;
    const auto later = a.vds.build_dag("lt.svg");
    const bool later_shape = later.is_acyclic() && later.is_bipartite() && later.sources() == dag.sources();

    // A second system fed the same bytes writes the same graph.
    VdsEnv b;
    const auto other = analyse(b);
    const bool stable_elsewhere = b.digests(other) == want && provenance::export_dot(b.vds.build_dag("lt.svg")) == dot;

    const bool leaves = dag.sources() == std::vector<std::string> { "run.data" };
    const bool ok = first.succeeded && differ == 0 && dag.is_acyclic() && dag.is_bipartite() && later_shape
        && stable_here && stable_elsewhere && leaves;
    return { ok, fmt("%d rederivations, %d with different digests; DAG %zu nodes, acyclic %s, bipartite %s, "
                     "leaves %s, DOT stable %s",
                     rederive_repeats, differ, dag.node_count(), dag.is_acyclic() && later.is_acyclic() ? "yes" : "no",
                     dag.is_bipartite() && later.is_bipartite() ? "yes" : "no", leaves ? "inputs" : "wrong",
                     stable_here && stable_elsewhere ? "yes" : "no") };
}

planner::Executable node_executable()
{
    return { [](planner::JobContext& ctx) {
                if (ctx.boolean("fail")) throw planner::JobError("asked to fail");
                std::string acc = ctx.scalar("tag");
                for (const auto& [param, path] : ctx.inputs) acc += sha256_hex(read_file(path));
                for (const auto& [param, path] : ctx.outputs) write_file(path, sha256_hex(acc + param));
            },
        {} };
}

Outcome planner_oracle()
{
    std::mt19937_64 rng(1066);
    int order_violations = 0;
    int wrong_status = 0;
    std::size_t jobs = 0;
    std::size_t failed = 0;
    for (int trial = 0; trial < planner_dags; ++trial) {
        const auto dag = oracle::random_call_dag(rng, std::uniform_int_distribution<int>(2, 15)(rng), 0.15);
        testing::TempDir dir("elab-acc-plan");
        Database db(dir / "p.db");
        catalog::Catalog cat(db);
        provenance::ProvenanceStore prov(db);
        BlobStore blobs(dir / "blobs");
        planner::Registry reg;
        reg.add("node", node_executable());
        planner::LocalExecutor exec(cat, prov, blobs, reg, { dir / "work", 2 });
        for (const auto& s : dag.sources) cat.register_object({ 0, catalog::ObjectKind::dataset_file, s, blobs.put(s), {} });

        const auto p = planner::plan(dag.calls, [&](std::string_view l) { return cat.find_file(l).has_value(); },
            "t" + std::to_string(trial));
        std::map<int, std::size_t> where;
        for (std::size_t k = 0; k < p.jobs.size(); ++k) where[dag.number[std::stoul(p.jobs[k].id.substr(1))]] = k;
        for (const auto& [from, to] : dag.edges) order_violations += where.at(from) >= where.at(to);

        std::set<int> failing;
        for (std::size_t i = 0; i < dag.calls.size(); ++i) {
            if (std::get<bool>(std::get<vdl::Literal>(dag.calls[i].bindings.at("fail")))) failing.insert(dag.number[i]);
        }
        const auto want = oracle::failure_closure(dag, failing);
        const auto recs = exec.execute(p, "dv");
        for (std::size_t k = 0; k < recs.size(); ++k) {
            const int num = dag.number[std::stoul(p.jobs[k].id.substr(1))];
            wrong_status += (recs[k].status == provenance::Status::failed) != want.contains(num);
            failed += recs[k].status == provenance::Status::failed;
        }
        wrong_status += recs.size() != p.jobs.size();
        jobs += p.jobs.size();
    }
    const bool ok = order_violations == 0 && wrong_status == 0 && failed > 0;
    return { ok, fmt("%d DAGs, %zu jobs, %d edges out of order, %zu failed, %d statuses differ from the closure",
                     planner_dags, jobs, order_violations, failed, wrong_status) };
}

Outcome service_end_to_end()
{
    std::vector<std::string> broken;
    auto expect = [&](bool cond, const char* what) {
        if (!cond) broken.emplace_back(what);
        return cond;
    };
    {
        testing::ServiceFixture fx;
        auto anon = fx.client();
        const auto teacher = anon.post("/api/groups", { { "name", "Rivera" }, { "school", "Fermilab" }, { "city", "Batavia" },
                                                          { "state", "IL" }, { "password", "teacher-password" }, { "role", "teacher" } });
        expect(teacher.status == 201, "register teacher");
        const auto student = anon.post("/api/groups", { { "name", "fermigroup" }, { "school", "Fermilab" },
                                                          { "password", "student-password" }, { "teacher_id", teacher.body().value("id", 0) } });
        expect(student.status == 201, "register student");
        auto c = fx.client();
        expect(c.login("Fermilab", "fermigroup", "student-password"), "login");

        const auto text = testing::decay_file("det42", "Fermilab", 1182);
        const auto up = c.post_raw("/api/data", text, "text/plain");
        expect(up.status == 201, "upload");
        const std::string lfn = up.body().value("lfn", "");
        const auto found = c.get("/api/data", { { "q", "detector = \"det42\" and school = \"Fermilab\"" } }).body();
        expect(found.value("total", 0) == 1 && found["results"][0].value("name", "") == lfn, "search finds upload");

        const auto sub = c.post("/api/analyses", { { "study", "lifetime" }, { "inputs", { lfn } } });
        expect(sub.status == 202, "submit analysis");
        const auto done = testing::wait_analysis(c, sub.body().value("id", ""));
        if (expect(done.value("status", "") == "succeeded", "analysis succeeds")) {
            const std::string plot = done["plot"];
            const auto svg = c.get("/api/plots/" + plot);
            expect(svg.status == 200 && svg.content_type == "image/svg+xml" && svg.raw.find("<svg") != std::string::npos,
                "plot is SVG");
            const auto dot = c.get("/api/dag/" + plot);
            expect(dot.status == 200 && provenance::parse_dot(dot.raw).sources() == std::vector<std::string> { lfn },
                "DAG leaves are the inputs");
            const auto poster = c.post("/api/posters", { { "title", "Possible Particle Decays" }, { "figures", { plot } } });
            expect(poster.status == 201, "create poster");
            const std::string name = poster.body().value("name", "");
            const auto got = c.get("/api/posters/" + name);
            expect(got.status == 200 && got.body()["poster"]["figures"][0] == plot
                    && got.raw.find("/api/plots/" + plot) != std::string::npos,
                "poster retrievable with its figure");
            expect(c.post("/api/comments", { { "target", name }, { "body", "Nice fit." } }).status == 201, "comment");
            const auto list = c.get("/api/comments", { { "target", name } }).body();
            expect(list["comments"].size() == 1 && list["comments"][0]["body"] == "Nice fit.", "comment listed");
        }
    }
    std::size_t cells = 0;
    std::size_t mismatches = 0;
    {
        testing::ServiceFixture fx;
        const auto report = testing::run_authorization_matrix(fx);
        cells = report.cells.size();
        for (const auto& m : report.mismatches()) {
            ++mismatches;
            broken.push_back(m.route + " as " + testing::name_of(m.who));
        }
    }
    std::string detail = fmt("end-to-end steps failed: %zu; authorization matrix %zu cells, %zu mismatches",
        broken.size() - mismatches, cells, mismatches);
    for (const auto& b : broken) detail += "; " + b;
    return { broken.empty() && cells > 0, detail };
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria {
        { "lifetime recovery", lifetime_recovery },
        { "small-sample lifetime", small_sample_lifetime },
        { "fit pulls", fit_pulls },
        { "coincidence oracle", coincidence_oracle },
        { "catalog oracle", catalog_oracle },
        { "VDL round-trip", vdl_round_trip },
        { "provenance determinism", provenance_determinism },
        { "planner", planner_oracle },
        { "service end-to-end", service_end_to_end },
    };
    int failures = 0;
    int n = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = { false, std::string("threw: ") + e.what() };
        }
        failures += !o.pass;
        std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", ++n, name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria passed\n", n - failures, n);
    return failures;
}
