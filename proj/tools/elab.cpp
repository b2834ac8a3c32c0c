// elab: command-line front end to the e-Lab library and service.

#include "elab/catalog/catalog.hpp"
#include "elab/common/database.hpp"
#include "elab/common/text.hpp"
#include "elab/cosmic/dataset.hpp"
#include "elab/cosmic/fit.hpp"
#include "elab/cosmic/flux.hpp"
#include "elab/cosmic/generator.hpp"
#include "elab/cosmic/histogram.hpp"
#include "elab/cosmic/lifetime.hpp"
#include "elab/cosmic/plot.hpp"
#include "elab/cosmic/shower.hpp"
#include "elab/cosmic/transformations.hpp"
#include "elab/planner/plan.hpp"
#include "elab/provenance/dag.hpp"
#include "elab/provenance/store.hpp"
#include "elab/service/server.hpp"
#include "elab/vdl/parser.hpp"
#include "elab/vdl/validate.hpp"
#include "elab/vds/vds.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>

namespace fs = std::filesystem;
using namespace elab;
using nlohmann::json;

namespace {

/// A storage root opened without the HTTP layer.
struct Store {
    explicit Store(const fs::path& root)
        : db((fs::create_directories(root), root / "elab.db"))
        , blobs(root / "blobs")
        , catalog(db)
        , provenance(db)
        , registry(cosmic::make_registry())
        , vds(catalog, provenance, blobs, registry, { root / "work", 0 })
    {
        cosmic::install_library(vds);
    }

    Database db;
    BlobStore blobs;
    catalog::Catalog catalog;
    provenance::ProvenanceStore provenance;
    planner::Registry registry;
    vds::VirtualDataSystem vds;
};

void write_or_print(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

std::optional<vdl::Literal> parse_literal(const std::string& text)
{
    if (text == "true" || text == "false") {
        return vdl::Literal { text == "true" };
    }
    if (auto i = parse_int(text)) {
        return vdl::Literal { *i };
    }
    if (auto d = parse_double(text)) {
        return vdl::Literal { *d };
    }
    return vdl::Literal { text };
}

json run_json(const vds::RunResult& r)
{
    json j { { "derivation", r.dv_name }, { "cached", r.cached }, { "succeeded", r.succeeded }, { "outputs", r.outputs } };
    json failures = json::array();
    for (const auto& rec : r.records) {
        if (rec.status == provenance::Status::failed) {
            failures.push_back({ { "job", rec.job_id }, { "detail", rec.failure_detail.value_or("") } });
        }
    }
    if (!failures.empty()) {
        j["failures"] = failures;
    }
    return j;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "e-Lab virtual data system, cosmic-ray analyses and collaboration service" };
    app.require_subcommand(1);

    // serve
    std::string config_path;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);

    // generate
    cosmic::GeneratorSpec spec;
    spec.duration_s = 3600;
    spec.trigger_rate_hz = 1;
    spec.decay_fraction = 0.1;
    std::string gen_out;
    std::string truth_out;
    auto* generate = app.add_subcommand("generate", "Write synthetic detector data");
    generate->add_option("-o,--out", gen_out, "Output file (one detector) or directory (several)")->required();
    generate->add_option("--detectors", spec.detectors, "Number of detectors")->capture_default_str();
    generate->add_option("--duration", spec.duration_s, "Run length in seconds")->capture_default_str();
    generate->add_option("--rate", spec.trigger_rate_hz, "Muon trigger rate in Hz")->capture_default_str();
    generate->add_option("--count", spec.trigger_count, "Exact trigger count per detector (overrides --rate)");
    generate->add_option("--decay-fraction", spec.decay_fraction, "Share of triggers followed by a decay")->capture_default_str();
    generate->add_option("--tau", spec.tau_us, "Decay lifetime in microseconds")->capture_default_str();
    generate->add_option("--background", spec.background_rate_hz, "Uncorrelated single-channel pulse rate in Hz")->capture_default_str();
    generate->add_option("--showers", spec.planted_showers, "Coincidences planted across all detectors")->capture_default_str();
    generate->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
    generate->add_option("--truth", truth_out, "Write ground truth as JSON lines");

    // validate
    std::string data_file;
    auto* validate = app.add_subcommand("validate", "Check a detector data file and print its metadata");
    validate->add_option("file", data_file)->required()->check(CLI::ExistingFile);

    // lifetime
    cosmic::LifetimeParams lp;
    std::string plot_out;
    std::string hist_out;
    auto* lifetime = app.add_subcommand("lifetime", "Muon lifetime study on one data file");
    lifetime->add_option("file", data_file)->required()->check(CLI::ExistingFile);
    lifetime->add_option("--coincidence", lp.coincidence_level, "Channels needed for a trigger")->capture_default_str();
    lifetime->add_flag("--check-energy", lp.check_second_pulse_energy, "Reject decay pulses under 40 ns");
    lifetime->add_option("--gate", lp.gate_width_s, "Gate width in seconds")->capture_default_str();
    lifetime->add_option("--bins", lp.bins, "Histogram bins")->capture_default_str();
    lifetime->add_option("--fit-min", lp.fit_min_us, "Fit start in microseconds")->capture_default_str();
    lifetime->add_option("--fit-max", lp.fit_max_us, "Fit end in microseconds")->capture_default_str();
    lifetime->add_option("--plot", plot_out, "Write the SVG plot here");
    lifetime->add_option("--histogram", hist_out, "Write the histogram JSON here");

    // flux
    double bin_width = 60;
    int flux_level = 1;
    auto* flux = app.add_subcommand("flux", "Trigger rate over time");
    flux->add_option("file", data_file)->required()->check(CLI::ExistingFile);
    flux->add_option("--bin-width", bin_width, "Bin width in seconds")->capture_default_str();
    flux->add_option("--coincidence", flux_level, "Channels needed for a trigger")->capture_default_str();
    flux->add_option("--plot", plot_out, "Write the SVG plot here");

    // shower
    std::vector<std::string> shower_files;
    double window = 1e-6;
    int min_detectors = 2;
    auto* shower = app.add_subcommand("shower", "Coincidences across detectors");
    shower->add_option("files", shower_files)->required()->check(CLI::ExistingFile);
    shower->add_option("--window", window, "Window in seconds")->capture_default_str();
    shower->add_option("--min-detectors", min_detectors, "Detectors required per group")->capture_default_str();

    // vdl
    std::string vdl_file;
    auto* vdl_cmd = app.add_subcommand("vdl", "Virtual Data Language tools");
    vdl_cmd->require_subcommand(1);
    auto* vdl_check = vdl_cmd->add_subcommand("check", "Parse and validate definitions against the shipped library");
    vdl_check->add_option("file", vdl_file)->required()->check(CLI::ExistingFile);
    auto* vdl_fmt = vdl_cmd->add_subcommand("fmt", "Print definitions in canonical form");
    vdl_fmt->add_option("file", vdl_file)->required()->check(CLI::ExistingFile);
    auto* vdl_lib = vdl_cmd->add_subcommand("library", "Print the shipped transformation library");

    // store-backed commands
    std::string store_root = "elab-data";
    std::string out_file;
    std::string lfn;
    std::string dv_name;
    std::vector<std::string> sets;
    bool no_cache = false;

    auto* catalog_cmd = app.add_subcommand("catalog", "Catalog export and import");
    catalog_cmd->require_subcommand(1);
    auto* cat_export = catalog_cmd->add_subcommand("export", "Write every object as JSON lines");
    cat_export->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    cat_export->add_option("-o,--out", out_file, "Output file (default stdout)");
    std::string import_file_path;
    auto* cat_import = catalog_cmd->add_subcommand("import", "Restore objects from JSON lines");
    cat_import->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    cat_import->add_option("file", import_file_path)->required()->check(CLI::ExistingFile);

    auto* audit = app.add_subcommand("audit", "Provenance audit trail");
    audit->require_subcommand(1);
    auto* audit_export = audit->add_subcommand("export", "Write every execution record as JSON lines");
    audit_export->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    audit_export->add_option("-o,--out", out_file, "Output file (default stdout)");

    auto* import_cmd = app.add_subcommand("import", "Validate a data file and catalog it");
    import_cmd->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    import_cmd->add_option("file", data_file)->required()->check(CLI::ExistingFile);
    import_cmd->add_option("--lfn", lfn, "Logical file name (default: the file name)");

    auto* define = app.add_subcommand("define", "Register VDL definitions");
    define->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    define->add_option("file", vdl_file)->required()->check(CLI::ExistingFile);

    auto* run = app.add_subcommand("run", "Materialize a derivation");
    run->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    run->add_option("derivation", dv_name)->required();
    run->add_flag("--no-cache", no_cache, "Execute even when outputs are cached");

    auto* rederive = app.add_subcommand("rederive", "Rerun the derivation that produced a file");
    rederive->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    rederive->add_option("lfn", lfn)->required();
    rederive->add_option("--set", sets, "Override a parameter: name=value");

    auto* dag = app.add_subcommand("dag", "Print the provenance DAG of a file as DOT");
    dag->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    dag->add_option("lfn", lfn)->required();

    auto* plan_cmd = app.add_subcommand("plan", "Print the job manifest for a derivation");
    plan_cmd->add_option("-s,--store", store_root, "Storage root")->capture_default_str();
    plan_cmd->add_option("derivation", dv_name)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            auto config = config_path.empty() ? service::ServiceConfig {} : service::load_config(config_path);
            service::Service svc(std::move(config));
            const int port = svc.bind();
            std::cerr << "elab listening on " << svc.config().bind_address << ":" << port
                      << (svc.config().tls() ? " (TLS)" : "") << "\n";
            svc.run();
            return 0;
        }
        if (*generate) {
            const auto data = cosmic::generate_synthetic(spec);
            if (data.datasets.size() == 1) {
                write_file(gen_out, cosmic::format_dataset(data.datasets.front()));
            } else {
                fs::create_directories(gen_out);
                for (const auto& ds : data.datasets) {
                    write_file(fs::path(gen_out) / (ds.detector_id + ".data"), cosmic::format_dataset(ds));
                }
            }
            if (!truth_out.empty()) {
                write_file(truth_out, cosmic::to_jsonl(data.truth));
            }
            return 0;
        }
        if (*validate) {
            try {
                const auto r = cosmic::validate_upload(read_file(data_file));
                catalog::CatalogObject obj;
                obj.name = fs::path(data_file).filename().string();
                for (const auto& t : r.metadata) {
                    obj.add(t);
                }
                std::cout << json::parse(catalog::to_json_line(obj))["metadata"].dump(2) << "\n";
                return 0;
            } catch (const cosmic::DatasetError& e) {
                std::cerr << data_file << ":" << e.line() << ": " << e.what() << "\n";
                return 1;
            }
        }
        if (*lifetime) {
            const auto ds = cosmic::parse_dataset(read_file(data_file));
            const auto r = cosmic::lifetime_study(ds, lp);
            if (!plot_out.empty()) {
                write_file(plot_out, cosmic::render_histogram_plot(r.histogram, r.fit,
                                         { "Muon lifetime", "Decay time (µs)", "Candidates per bin" }));
            }
            if (!hist_out.empty()) {
                write_file(hist_out, cosmic::to_json(r.histogram));
            }
            std::cout << cosmic::to_json(r.fit) << "\n";
            return 0;
        }
        if (*flux) {
            const auto series = cosmic::flux_study(cosmic::parse_dataset(read_file(data_file)), bin_width, flux_level);
            if (!plot_out.empty()) {
                write_file(plot_out, cosmic::render_series_plot(series, { "Cosmic-ray flux", "Time (s)", "Rate (Hz)" }));
            }
            std::cout << cosmic::to_jsonl(series);
            return 0;
        }
        if (*shower) {
            std::vector<cosmic::Dataset> datasets;
            for (const auto& f : shower_files) {
                datasets.push_back(cosmic::parse_dataset(read_file(f)));
            }
            std::cout << cosmic::to_jsonl(cosmic::shower_search(datasets, window, min_detectors));
            return 0;
        }
        if (*vdl_lib) {
            std::cout << cosmic::library_vdl();
            return 0;
        }
        if (*vdl_fmt) {
            std::cout << vdl::serialize(vdl::parse_vdl(read_file(vdl_file)));
            return 0;
        }
        if (*vdl_check) {
            auto defs = vdl::parse_vdl(cosmic::library_vdl());
            const auto n_library = defs.size();
            for (auto& d : vdl::parse_vdl(read_file(vdl_file))) {
                defs.push_back(std::move(d));
            }
            std::map<std::pair<std::string, std::int64_t>, const vdl::Transformation*> trs;
            for (const auto& d : defs) {
                if (const auto* tr = std::get_if<vdl::Transformation>(&d)) {
                    trs[{ tr->name, tr->version }] = tr;
                }
            }
            const vdl::Resolver resolve = [&](std::string_view name, std::optional<std::int64_t> version) -> const vdl::Transformation* {
                const vdl::Transformation* best = nullptr;
                for (const auto& [key, tr] : trs) {
                    if (key.first == name && (!version || key.second == *version)) {
                        best = tr;
                    }
                }
                return best;
            };
            int errors = 0;
            for (std::size_t i = n_library; i < defs.size(); ++i) {
                if (const auto* tr = std::get_if<vdl::Transformation>(&defs[i])) {
                    try {
                        vdl::validate_transformation(*tr, resolve);
                    } catch (const Error& e) {
                        std::cerr << "TR " << tr->key() << ": " << e.what() << "\n";
                        ++errors;
                    }
                } else {
                    const auto& dv = std::get<vdl::Derivation>(defs[i]);
                    const auto* target = resolve(dv.tr_name, dv.tr_version);
                    if (!target) {
                        std::cerr << "DV " << dv.name << ": unknown transformation " << dv.tr_name << ":" << dv.tr_version << "\n";
                        ++errors;
                        continue;
                    }
                    for (const auto& p : vdl::validate_derivation(dv, *target).problems) {
                        std::cerr << "DV " << dv.name << ": " << vdl::describe(p) << "\n";
                        ++errors;
                    }
                }
            }
            std::cout << (defs.size() - n_library) << " definitions, " << errors << " problems\n";
            return errors == 0 ? 0 : 1;
        }

        Store store(store_root);
        if (*cat_export) {
            write_or_print(out_file, store.catalog.export_records());
        } else if (*cat_import) {
            std::cout << store.catalog.import_records(read_file(import_file_path)) << " records imported\n";
        } else if (*audit_export) {
            write_or_print(out_file, store.provenance.export_audit());
        } else if (*import_cmd) {
            const auto bytes = read_file(data_file);
            const auto r = cosmic::validate_upload(bytes);
            const auto name = lfn.empty() ? fs::path(data_file).filename().string() : lfn;
            const auto id = store.vds.import_file(name, bytes, r.metadata);
            std::cout << name << " (object " << id << ")\n";
        } else if (*define) {
            const auto ids = store.vds.define(read_file(vdl_file));
            std::cout << ids.size() << " definitions registered\n";
        } else if (*run) {
            const auto r = store.vds.run(dv_name, !no_cache);
            std::cout << run_json(r).dump(2) << "\n";
            return r.succeeded ? 0 : 1;
        } else if (*rederive) {
            std::map<std::string, vdl::Literal> overrides;
            for (const auto& s : sets) {
                const auto eq = s.find('=');
                if (eq == std::string::npos || eq == 0) {
                    std::cerr << "--set expects name=value, got '" << s << "'\n";
                    return 2;
                }
                overrides[s.substr(0, eq)] = *parse_literal(s.substr(eq + 1));
            }
            const auto r = store.vds.rederive(lfn, overrides);
            std::cout << run_json(r).dump(2) << "\n";
            return r.succeeded ? 0 : 1;
        } else if (*dag) {
            std::cout << provenance::export_dot(store.vds.build_dag(lfn));
        } else if (*plan_cmd) {
            const auto dv = store.vds.derivation(dv_name);
            if (!dv) {
                std::cerr << "unknown derivation '" << dv_name << "'\n";
                return 1;
            }
            std::cout << planner::submit_grid(store.vds.plan(*dv));
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "elab: " << e.what() << "\n";
        return 1;
    }
}
