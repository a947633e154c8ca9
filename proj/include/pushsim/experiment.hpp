#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pushsim/netmodel.hpp"
#include "pushsim/pagemodel.hpp"
#include "pushsim/simulator.hpp"
#include "pushsim/stats.hpp"

namespace pushsim {

// ─── Grid ───

struct ExperimentGrid {
    std::vector<std::string> pages{"fixture:p0", "fixture:p1", "fixture:p2"};
    std::vector<double> rtts_ms{25, 50, 100, 200};
    std::vector<double> bandwidths_mbps{20, 100, 500};
    std::vector<SimMode> modes{SimMode::pull, SimMode::push, SimMode::optimal};
    CongestionState slow_start;  // disabled unless configured otherwise
};

// Declarative config document, schema version 1:
// {"version":1, "pages":[...], "rtts_ms":[...], "bandwidths_mbps":[...],
//  "modes":[...], "slow_start":{"enabled":..., "mss_bytes":...,
//  "init_cwnd_segments":..., "max_cwnd_bytes":...}}
// Absent keys keep the defaults above. Throws ValidationError or ParseError.
ExperimentGrid parse_grid_config(const std::string& json_text);

// "fixture:NAME", a .json page file, or a .har capture.
DependencyTree load_page_source(const std::string& source);

// ─── Result rows ───

struct ExperimentRow {
    std::string page;  // source string as configured
    std::string name;  // page name from the ingested tree
    double rtt_ms = 0.0;
    double bandwidth_mbps = 0.0;
    std::string mode;
    double plt_s = 0.0;
    double spr_s = 0.0;           // per (page, rtt, bw), repeated on each row
    double bound_loose_s = 0.0;   // idem
    double bound_tight_s = 0.0;   // idem
    int height = 0;
    int64_t psize_bytes = 0;
    std::string error;  // non-empty marks a row that carries only page + error
};

// One row per (page, rtt, bw, mode), sorted by page source, then rtt,
// bandwidth, and mode name; a page that fails to load contributes a single
// error row (sorted before the page's data rows) and the run continues.
// SPR and both bounds are computed from internal pull/push runs for every
// cell, whatever modes were requested.
std::vector<ExperimentRow> run_experiment(const ExperimentGrid& grid);

// Frozen column set:
// page,name,rtt_ms,bandwidth_mbps,mode,plt_s,spr_s,bound_loose_s,
// bound_tight_s,height,psize_bytes,error
// Times use nine decimals so equal runs are byte-identical.
std::string to_csv(const std::vector<ExperimentRow>& rows);
std::vector<ExperimentRow> parse_csv(const std::string& csv);

// ─── Aggregation ───

struct StatsSummary {
    struct RttGroup {
        double rtt_ms = 0.0;
        int cells = 0;  // unique (page, rtt, bw) cells behind the quantiles
        Quantiles spr_s;
    };
    struct HeightGroup {
        int height = 0;
        int cells = 0;
        double mean_spr_s = 0.0;
    };
    struct ModeCurve {
        double rtt_ms = 0.0;
        std::string mode;
        std::vector<double> plt_s;  // ascending, ready for ECDF plotting
    };

    std::vector<RttGroup> per_rtt;
    std::optional<RegressionFit> spr_vs_rtt;  // seconds on seconds; absent
                                              // when only one RTT is present
    std::vector<HeightGroup> per_height;
    std::vector<ModeCurve> ecdf_curves;
};

// Ignores error rows; SPR enters each aggregate once per (page, rtt, bw)
// cell. Throws StatsError when no usable rows remain.
StatsSummary summarize(const std::vector<ExperimentRow>& rows);

std::string to_json(const StatsSummary& summary);  // schema version 1

// Writes plot-ready whitespace-separated .dat files (ECDF per rtt and mode,
// SPR quantiles per rtt, mean SPR per height) into dir, creating it if
// needed. Returns the file paths written, sorted.
std::vector<std::string> write_gnuplot_files(const StatsSummary& summary,
                                             const std::string& dir);

} // namespace pushsim
