// Command-line front end: simulate single loads, print bound tables, sweep
// experiment grids to CSV, aggregate CSV into stats JSON, and build or query
// cache digests. Exit codes: 0 ok, 1 usage problem, 2 data problem.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pushsim/bounds.hpp"
#include "pushsim/errors.hpp"
#include "pushsim/experiment.hpp"
#include "pushsim/pushpolicy.hpp"

namespace {

using nlohmann::ordered_json;
using namespace pushsim;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void log_note(const std::string& msg) {
    const char* v = std::getenv("PUSHSIM_LOG");
    if (v != nullptr && *v != '\0')
        std::fprintf(stderr, "pushsim: %s\n", msg.c_str());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << body;
    if (!out) throw Error("cannot write '" + path + "'");
}

// ─── Shared link and slow-start flags ───

struct LinkFlags {
    double rtt_ms = 100.0;
    double bandwidth_mbps = 100.0;
    CongestionState congestion;

    LinkParams link() const { return {rtt_ms / 1000.0, bandwidth_mbps * 1e6}; }
};

void add_link_flags(CLI::App* cmd, LinkFlags& flags) {
    cmd->add_option("--rtt-ms", flags.rtt_ms, "Round-trip time in milliseconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--bandwidth-mbps", flags.bandwidth_mbps,
                    "Link rate in megabits per second")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_slow_start_flags(CLI::App* cmd, CongestionState& cs) {
    cmd->add_flag("--slow-start", cs.enabled,
                  "Model TCP slow start instead of full link rate from byte one");
    cmd->add_option("--mss-bytes", cs.mss_bytes, "Segment size for the window model")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--init-cwnd-segments", cs.init_cwnd_segments,
                    "Initial window in segments")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-cwnd-bytes", cs.max_cwnd_bytes, "Window growth cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

// ─── simulate ───

struct SimulateArgs {
    std::string page;
    std::string mode = "pull";
    LinkFlags link;
    std::vector<std::string> push_order;
    std::string cached_urls_path;
    int repetitions = 1;
};

int run_simulate(const SimulateArgs& args) {
    SimMode mode;
    if (!mode_from_string(args.mode, mode)) {
        std::fprintf(stderr, "pushsim: unknown mode '%s'\n", args.mode.c_str());
        return kExitUsage;
    }
    if (mode != SimMode::push &&
        (!args.push_order.empty() || !args.cached_urls_path.empty())) {
        std::fprintf(stderr,
                     "pushsim: --push and --cached-urls need --mode push\n");
        return kExitUsage;
    }

    DependencyTree tree = load_page_source(args.page);

    SimConfig cfg;
    cfg.mode = mode;
    cfg.link = args.link.link();
    cfg.congestion = args.link.congestion;
    cfg.congestion.cwnd_bytes = cfg.congestion.initial_window();

    if (mode == SimMode::push) {
        PushManifest manifest = args.push_order.empty()
                                    ? build_manifest(tree)
                                    : PushManifest{args.push_order};
        if (!args.cached_urls_path.empty()) {
            std::istringstream in(read_file(args.cached_urls_path));
            std::vector<std::string> urls;
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (!line.empty()) urls.push_back(line);
            }
            CacheDigest digest = CacheDigest::with_recommended_size(
                std::max<int64_t>(1, static_cast<int64_t>(urls.size())), 0.01);
            for (const std::string& url : urls) digest.insert(url);
            std::size_t before = manifest.ids.size();
            manifest = filter_manifest(manifest, tree, digest);
            log_note("digest filtered " +
                     std::to_string(before - manifest.ids.size()) + " of " +
                     std::to_string(before) + " manifest entries");
        }
        cfg.push_order = manifest;
    }

    SimResult result = simulate(tree, cfg);
    std::string timeline = write_timeline_jsonl(result);
    for (int rep = 1; rep < args.repetitions; ++rep) {
        SimResult again = simulate(tree, cfg);
        if (again.plt_s != result.plt_s ||
            write_timeline_jsonl(again) != timeline) {
            std::fprintf(stderr,
                         "pushsim: repetition %d diverged from the first run\n",
                         rep + 1);
            return kExitData;
        }
    }
    if (args.repetitions > 1)
        log_note(std::to_string(args.repetitions) + " repetitions, all identical");

    std::cout << timeline;
    ordered_json summary;
    summary["page"] = tree.name();
    summary["mode"] = to_string(mode);
    summary["rtt_ms"] = args.link.rtt_ms;
    summary["bandwidth_mbps"] = args.link.bandwidth_mbps;
    summary["plt_s"] = result.plt_s;
    summary["bubble_total_s"] = result.bubble_total_s;
    summary["bytes_transferred"] = result.bytes_transferred;
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

// ─── bounds ───

struct BoundsArgs {
    std::string page;
    LinkFlags link;
    bool as_json = false;
};

int run_bounds(const BoundsArgs& args) {
    DependencyTree tree = load_page_source(args.page);
    LinkParams link = args.link.link();

    SimConfig pull_cfg;
    pull_cfg.mode = SimMode::pull;
    pull_cfg.link = link;
    pull_cfg.congestion = args.link.congestion;
    pull_cfg.congestion.cwnd_bytes = pull_cfg.congestion.initial_window();
    SimResult pull = simulate(tree, pull_cfg);

    double floor_s = plt_lower_bound(tree, link);
    double loose_s = spr_upper_bound_loose(tree, link);
    TightBoundBreakdown tight =
        spr_upper_bound_tight(tree, link, trace_discovery_schedule(pull, tree));

    if (args.as_json) {
        ordered_json doc;
        doc["page"] = tree.name();
        doc["rtt_ms"] = args.link.rtt_ms;
        doc["bandwidth_mbps"] = args.link.bandwidth_mbps;
        doc["plt_floor_s"] = floor_s;
        doc["spr_upper_loose_s"] = loose_s;
        doc["per_depth"] = ordered_json::array();
        for (const TightBoundTerm& t : tight.per_depth_terms) {
            doc["per_depth"].push_back({{"depth", t.depth},
                                        {"rsize_bytes", t.rsize_bytes},
                                        {"term_s", t.term_s}});
        }
        doc["spr_upper_tight_s"] = tight.total_s;
        std::cout << doc.dump(2) << "\n";
        return kExitOk;
    }

    std::printf("page             %s\n", tree.name().c_str());
    std::printf("plt_floor_s      %.9f\n", floor_s);
    std::printf("spr_loose_s      %.9f\n", loose_s);
    std::printf("spr_tight_s      %.9f\n", tight.total_s);
    if (!tight.per_depth_terms.empty()) {
        std::printf("depth  rsize_bytes  term_s\n");
        for (const TightBoundTerm& t : tight.per_depth_terms)
            std::printf("%5d  %11lld  %.9f\n", t.depth,
                        static_cast<long long>(t.rsize_bytes), t.term_s);
    }
    return kExitOk;
}

// ─── sweep ───

struct SweepArgs {
    std::string config_path;
    std::vector<std::string> pages;
    std::vector<double> rtts_ms;
    std::vector<double> bandwidths_mbps;
    std::vector<std::string> modes;
    CongestionState congestion;
    bool slow_start_given = false;
    std::string out_path;
};

int run_sweep(const SweepArgs& args) {
    ExperimentGrid grid;
    try {
        if (!args.config_path.empty())
            grid = parse_grid_config(read_file(args.config_path));
        if (!args.pages.empty()) grid.pages = args.pages;
        if (!args.rtts_ms.empty()) grid.rtts_ms = args.rtts_ms;
        if (!args.bandwidths_mbps.empty()) grid.bandwidths_mbps = args.bandwidths_mbps;
        if (!args.modes.empty()) {
            grid.modes.clear();
            for (const std::string& name : args.modes) {
                SimMode mode;
                if (!mode_from_string(name, mode))
                    throw ValidationError("unknown mode '" + name + "'");
                grid.modes.push_back(mode);
            }
        }
        if (args.slow_start_given) grid.slow_start = args.congestion;

        std::vector<ExperimentRow> rows = run_experiment(grid);
        std::string csv = to_csv(rows);
        if (args.out_path.empty())
            std::cout << csv;
        else
            write_file(args.out_path, csv);
        log_note(std::to_string(rows.size()) + " rows");
        return kExitOk;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "pushsim: %s\n", e.what());
        return kExitUsage;
    }
}

// ─── summarize ───

struct SummarizeArgs {
    std::string csv_path = "-";
    std::string out_path;
    std::string gnuplot_dir;
};

int run_summarize(const SummarizeArgs& args) {
    std::string csv;
    if (args.csv_path == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        csv = buf.str();
    } else {
        csv = read_file(args.csv_path);
    }

    StatsSummary summary = summarize(parse_csv(csv));
    std::string doc = to_json(summary);
    if (args.out_path.empty())
        std::cout << doc;
    else
        write_file(args.out_path, doc);

    if (!args.gnuplot_dir.empty())
        for (const std::string& path : write_gnuplot_files(summary, args.gnuplot_dir))
            log_note("wrote " + path);
    return kExitOk;
}

// ─── digest ───

struct DigestBuildArgs {
    std::string urls_path;
    std::string out_path;
    double fpr = 0.01;
    int64_t bits = 0;   // 0 means size from --fpr
    int hashes = 0;
};

int run_digest_build(const DigestBuildArgs& args) {
    std::istringstream in(read_file(args.urls_path));
    std::vector<std::string> urls;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) urls.push_back(line);
    }

    CacheDigest digest =
        args.bits > 0
            ? CacheDigest(args.bits, args.hashes)
            : CacheDigest::with_recommended_size(
                  std::max<int64_t>(1, static_cast<int64_t>(urls.size())), args.fpr);
    for (const std::string& url : urls) digest.insert(url);

    std::vector<uint8_t> blob = digest.serialize();
    std::ofstream out(args.out_path, std::ios::binary);
    if (!out) throw Error("cannot write '" + args.out_path + "'");
    out.write(reinterpret_cast<const char*>(blob.data()),
              static_cast<std::streamsize>(blob.size()));
    if (!out) throw Error("cannot write '" + args.out_path + "'");

    ordered_json summary;
    summary["bit_count"] = digest.bit_count();
    summary["hash_count"] = digest.hash_count();
    summary["inserted"] = digest.inserted_count();
    summary["blob_bytes"] = blob.size();
    std::cout << summary.dump() << "\n";
    return kExitOk;
}

struct DigestQueryArgs {
    std::string digest_path;
    std::vector<std::string> urls;
};

int run_digest_query(const DigestQueryArgs& args) {
    std::string raw = read_file(args.digest_path);
    std::vector<uint8_t> blob(raw.begin(), raw.end());
    CacheDigest digest = CacheDigest::deserialize(blob);
    for (const std::string& url : args.urls)
        std::printf("%s\t%s\n", digest.may_contain(url) ? "maybe" : "absent",
                    url.c_str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Deterministic model of HTTP/2 server push: page-load simulation,\n"
        "analytic bounds, grid sweeps, and cache digests."};
    app.require_subcommand(1);
    app.get_formatter()->column_width(34);

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand(
        "simulate", "Run one page load and print its timeline as JSONL");
    sim->add_option("--page", sim_args.page,
                    "Page source: fixture:NAME, a page .json, or a .har capture")
        ->required();
    sim->add_option("--mode", sim_args.mode, "pull, push, or optimal")
        ->capture_default_str();
    add_link_flags(sim, sim_args.link);
    add_slow_start_flags(sim, sim_args.link.congestion);
    sim->add_option("--push", sim_args.push_order,
                    "Resource id to push, in order (default: the CSS-first policy)");
    sim->add_option("--cached-urls", sim_args.cached_urls_path,
                    "File of cached urls, one per line; filters the push manifest");
    sim->add_option("--repetitions", sim_args.repetitions,
                    "Re-run this many times and fail unless all runs agree")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    BoundsArgs bounds_args;
    CLI::App* bnd = app.add_subcommand(
        "bounds", "Print load-time floor and push-saving ceilings for a page");
    bnd->add_option("--page", bounds_args.page, "Page source")->required();
    add_link_flags(bnd, bounds_args.link);
    add_slow_start_flags(bnd, bounds_args.link.congestion);
    bnd->add_flag("--json", bounds_args.as_json, "Emit JSON instead of the table");

    SweepArgs sweep_args;
    CLI::App* swp = app.add_subcommand(
        "sweep", "Run the page x RTT x bandwidth x mode grid and emit CSV");
    swp->add_option("--config", sweep_args.config_path,
                    "Grid config JSON (flags below override it)")
        ->check(CLI::ExistingFile);
    swp->add_option("--pages", sweep_args.pages, "Page sources");
    swp->add_option("--rtts-ms", sweep_args.rtts_ms, "RTT values in ms")
        ->check(CLI::PositiveNumber);
    swp->add_option("--bandwidths-mbps", sweep_args.bandwidths_mbps,
                    "Bandwidth values in Mbit/s")
        ->check(CLI::PositiveNumber);
    swp->add_option("--modes", sweep_args.modes, "Modes to include");
    add_slow_start_flags(swp, sweep_args.congestion);
    swp->add_option("--out", sweep_args.out_path, "CSV path (default stdout)");

    SummarizeArgs sum_args;
    CLI::App* sum = app.add_subcommand(
        "summarize", "Aggregate a sweep CSV into stats JSON");
    sum->add_option("--csv", sum_args.csv_path,
                    "Sweep CSV path, or - for stdin")
        ->capture_default_str();
    sum->add_option("--out", sum_args.out_path, "JSON path (default stdout)");
    sum->add_option("--gnuplot-dir", sum_args.gnuplot_dir,
                    "Also write plot-ready .dat files into this directory");

    DigestBuildArgs dig_build_args;
    DigestQueryArgs dig_query_args;
    CLI::App* dig = app.add_subcommand("digest", "Build or query cache digests");
    dig->require_subcommand(1);
    CLI::App* dig_build =
        dig->add_subcommand("build", "Build a digest from a url list");
    dig_build->add_option("--urls", dig_build_args.urls_path,
                          "File of urls to insert, one per line")
        ->required();
    dig_build->add_option("--out", dig_build_args.out_path, "Digest blob path")
        ->required();
    dig_build->add_option("--fpr", dig_build_args.fpr,
                          "Target false-positive rate when sizing automatically")
        ->capture_default_str();
    dig_build->add_option("--bits", dig_build_args.bits,
                          "Exact bit count (overrides --fpr; needs --hashes)");
    dig_build->add_option("--hashes", dig_build_args.hashes,
                          "Exact hash count, used with --bits");
    CLI::App* dig_query =
        dig->add_subcommand("query", "Check urls against a digest blob");
    dig_query->add_option("--digest", dig_query_args.digest_path,
                          "Digest blob path")
        ->required()
        ->check(CLI::ExistingFile);
    dig_query->add_option("urls", dig_query_args.urls, "Urls to probe")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) {
            sim_args.link.congestion.cwnd_bytes =
                sim_args.link.congestion.initial_window();
            return run_simulate(sim_args);
        }
        if (bnd->parsed()) {
            bounds_args.link.congestion.cwnd_bytes =
                bounds_args.link.congestion.initial_window();
            return run_bounds(bounds_args);
        }
        if (swp->parsed()) {
            sweep_args.slow_start_given =
                swp->count("--slow-start") > 0 || swp->count("--mss-bytes") > 0 ||
                swp->count("--init-cwnd-segments") > 0 ||
                swp->count("--max-cwnd-bytes") > 0;
            sweep_args.congestion.cwnd_bytes =
                sweep_args.congestion.initial_window();
            return run_sweep(sweep_args);
        }
        if (sum->parsed()) return run_summarize(sum_args);
        if (dig->parsed()) {
            if (dig_build->parsed()) {
                if ((dig_build_args.bits > 0) != (dig_build_args.hashes > 0)) {
                    std::fprintf(stderr,
                                 "pushsim: --bits and --hashes go together\n");
                    return kExitUsage;
                }
                return run_digest_build(dig_build_args);
            }
            return run_digest_query(dig_query_args);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "pushsim: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;  // unreachable with require_subcommand(1)
}
