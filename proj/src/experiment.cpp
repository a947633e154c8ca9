#include "pushsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "json.hpp"

#include "pushsim/bounds.hpp"
#include "pushsim/errors.hpp"
#include "pushsim/pushpolicy.hpp"

namespace pushsim {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// ─── Logging ───
// PUSHSIM_LOG=info (or debug) turns on progress notes on stderr.

bool log_enabled() {
    static const bool enabled = [] {
        const char* v = std::getenv("PUSHSIM_LOG");
        return v != nullptr && *v != '\0';
    }();
    return enabled;
}

void log_note(const std::string& msg) {
    if (log_enabled()) std::fprintf(stderr, "pushsim: %s\n", msg.c_str());
}

// ─── Small formatting helpers ───

std::string fmt_time(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", v);
    return buf;
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

// ─── Config ───

ExperimentGrid parse_grid_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config must be a JSON object");
    if (!doc.contains("version") || !doc["version"].is_number_integer() ||
        doc["version"].get<int>() != 1)
        throw ValidationError("config needs \"version\": 1");

    static const std::set<std::string> known{
        "version", "pages", "rtts_ms", "bandwidths_mbps", "modes", "slow_start"};
    for (const auto& [key, value] : doc.items())
        if (known.find(key) == known.end())
            throw ValidationError("config has unknown key '" + key + "'");

    ExperimentGrid grid;

    auto string_list = [&](const char* key, std::vector<std::string>& out) {
        if (!doc.contains(key)) return;
        if (!doc[key].is_array())
            throw ValidationError(std::string("config ") + key + " must be a list");
        out.clear();
        for (const auto& v : doc[key]) {
            if (!v.is_string())
                throw ValidationError(std::string("config ") + key +
                                      " must hold strings");
            out.push_back(v.get<std::string>());
        }
    };
    auto number_list = [&](const char* key, std::vector<double>& out) {
        if (!doc.contains(key)) return;
        if (!doc[key].is_array())
            throw ValidationError(std::string("config ") + key + " must be a list");
        out.clear();
        for (const auto& v : doc[key]) {
            if (!v.is_number())
                throw ValidationError(std::string("config ") + key +
                                      " must hold numbers");
            out.push_back(v.get<double>());
        }
    };

    string_list("pages", grid.pages);
    number_list("rtts_ms", grid.rtts_ms);
    number_list("bandwidths_mbps", grid.bandwidths_mbps);

    if (doc.contains("modes")) {
        if (!doc["modes"].is_array())
            throw ValidationError("config modes must be a list");
        grid.modes.clear();
        for (const auto& v : doc["modes"]) {
            SimMode mode;
            if (!v.is_string() || !mode_from_string(v.get<std::string>(), mode))
                throw ValidationError("config has unknown mode " + v.dump());
            grid.modes.push_back(mode);
        }
    }

    if (doc.contains("slow_start")) {
        const json& ss = doc["slow_start"];
        if (!ss.is_object())
            throw ValidationError("config slow_start must be an object");
        CongestionState cs;
        if (ss.contains("enabled")) {
            if (!ss["enabled"].is_boolean())
                throw ValidationError("config slow_start.enabled must be a bool");
            cs.enabled = ss["enabled"].get<bool>();
        }
        auto int_field = [&](const char* key, int64_t& out) {
            if (!ss.contains(key)) return;
            if (!ss[key].is_number_integer() || ss[key].get<int64_t>() <= 0)
                throw ValidationError(std::string("config slow_start.") + key +
                                      " must be a positive integer");
            out = ss[key].get<int64_t>();
        };
        int_field("mss_bytes", cs.mss_bytes);
        int_field("init_cwnd_segments", cs.init_cwnd_segments);
        int_field("max_cwnd_bytes", cs.max_cwnd_bytes);
        cs.cwnd_bytes = cs.initial_window();
        if (cs.enabled && !cs.valid())
            throw ValidationError("config slow_start parameters are inconsistent");
        grid.slow_start = cs;
    }
    return grid;
}

// ─── Page sources ───

DependencyTree load_page_source(const std::string& source) {
    const std::string fixture_prefix = "fixture:";
    if (source.rfind(fixture_prefix, 0) == 0)
        return fixture_page(source.substr(fixture_prefix.size()));

    if (source.size() > 4 && source.substr(source.size() - 4) == ".har") {
        std::string stem = std::filesystem::path(source).stem().string();
        HarIngest got = ingest_har(read_file(source), stem);
        for (const std::string& w : got.warnings)
            log_note(source + ": " + w);
        return got.tree;
    }
    return ingest_page_json(read_file(source));
}

// ─── Runner ───

std::vector<ExperimentRow> run_experiment(const ExperimentGrid& grid) {
    if (grid.pages.empty()) throw ValidationError("grid lists no pages");
    if (grid.rtts_ms.empty()) throw ValidationError("grid lists no RTTs");
    if (grid.bandwidths_mbps.empty())
        throw ValidationError("grid lists no bandwidths");
    if (grid.modes.empty()) throw ValidationError("grid lists no modes");
    for (double rtt : grid.rtts_ms)
        if (!(rtt > 0)) throw ValidationError("grid RTTs must be positive");
    for (double bw : grid.bandwidths_mbps)
        if (!(bw > 0)) throw ValidationError("grid bandwidths must be positive");

    std::vector<std::string> pages = grid.pages;
    std::sort(pages.begin(), pages.end());
    pages.erase(std::unique(pages.begin(), pages.end()), pages.end());
    std::vector<double> rtts = grid.rtts_ms;
    std::sort(rtts.begin(), rtts.end());
    rtts.erase(std::unique(rtts.begin(), rtts.end()), rtts.end());
    std::vector<double> bws = grid.bandwidths_mbps;
    std::sort(bws.begin(), bws.end());
    bws.erase(std::unique(bws.begin(), bws.end()), bws.end());
    std::vector<std::string> modes;
    for (SimMode m : grid.modes) modes.push_back(to_string(m));
    std::sort(modes.begin(), modes.end());
    modes.erase(std::unique(modes.begin(), modes.end()), modes.end());

    CongestionState congestion = grid.slow_start;
    congestion.cwnd_bytes = congestion.initial_window();
    if (congestion.enabled && !congestion.valid())
        throw ValidationError("grid slow-start parameters are inconsistent");

    std::vector<ExperimentRow> rows;
    for (const std::string& source : pages) {
        std::optional<DependencyTree> loaded;
        try {
            loaded.emplace(load_page_source(source));
        } catch (const Error& e) {
            ExperimentRow bad;
            bad.page = source;
            bad.error = e.what();
            rows.push_back(std::move(bad));
            log_note(source + ": " + rows.back().error);
            continue;
        }
        const DependencyTree& tree = *loaded;
        PushManifest manifest = build_manifest(tree);
        log_note("running " + source + " (" + std::to_string(tree.resources().size()) +
                 " resources)");

        for (double rtt_ms : rtts) {
            for (double bw_mbps : bws) {
                try {
                    LinkParams link{rtt_ms / 1000.0, bw_mbps * 1e6};
                    SimConfig base;
                    base.link = link;
                    base.congestion = congestion;

                    SimConfig pull_cfg = base;
                    pull_cfg.mode = SimMode::pull;
                    SimConfig push_cfg = base;
                    push_cfg.mode = SimMode::push;
                    push_cfg.push_order = manifest;
                    SimConfig opt_cfg = base;
                    opt_cfg.mode = SimMode::optimal;

                    SimResult pull = simulate(tree, pull_cfg);
                    SimResult push = simulate(tree, push_cfg);
                    SimResult opt = simulate(tree, opt_cfg);

                    double spr_s = pull.plt_s - push.plt_s;
                    double loose = spr_upper_bound_loose(tree, link);
                    double tight =
                        spr_upper_bound_tight(tree, link,
                                              trace_discovery_schedule(pull, tree))
                            .total_s;

                    for (const std::string& mode : modes) {
                        ExperimentRow row;
                        row.page = source;
                        row.name = tree.name();
                        row.rtt_ms = rtt_ms;
                        row.bandwidth_mbps = bw_mbps;
                        row.mode = mode;
                        row.plt_s = mode == "pull"   ? pull.plt_s
                                    : mode == "push" ? push.plt_s
                                                     : opt.plt_s;
                        row.spr_s = spr_s;
                        row.bound_loose_s = loose;
                        row.bound_tight_s = tight;
                        row.height = tree.height();
                        row.psize_bytes = tree.total_bytes();
                        rows.push_back(std::move(row));
                    }
                } catch (const Error& e) {
                    ExperimentRow bad;
                    bad.page = source;
                    bad.error = e.what();
                    rows.push_back(std::move(bad));
                }
            }
        }
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const ExperimentRow& a, const ExperimentRow& b) {
                         return std::tie(a.page, a.rtt_ms, a.bandwidth_mbps, a.mode) <
                                std::tie(b.page, b.rtt_ms, b.bandwidth_mbps, b.mode);
                     });
    return rows;
}

// ─── CSV ───

namespace {

const char* kCsvHeader =
    "page,name,rtt_ms,bandwidth_mbps,mode,plt_s,spr_s,bound_loose_s,"
    "bound_tight_s,height,psize_bytes,error";

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        any = true;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            record.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(record));
            record.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) throw ParseError("CSV ends inside a quoted field");
    if (any) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    return records;
}

double field_as_double(const std::string& field, const char* what) {
    if (field.empty()) return 0.0;
    try {
        std::size_t used = 0;
        double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("CSV field ") + what + " is not a number: '" +
                         field + "'");
    }
}

int64_t field_as_int(const std::string& field, const char* what) {
    if (field.empty()) return 0;
    try {
        std::size_t used = 0;
        int64_t v = std::stoll(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ParseError(std::string("CSV field ") + what +
                         " is not an integer: '" + field + "'");
    }
}

} // namespace

std::string to_csv(const std::vector<ExperimentRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const ExperimentRow& r : rows) {
        if (!r.error.empty()) {
            out += csv_quote(r.page) + ",,,,,,,,,,," + csv_quote(r.error) + "\n";
            continue;
        }
        out += csv_quote(r.page) + ',' + csv_quote(r.name) + ',';
        out += fmt_g(r.rtt_ms) + ',' + fmt_g(r.bandwidth_mbps) + ',';
        out += r.mode + ',';
        out += fmt_time(r.plt_s) + ',' + fmt_time(r.spr_s) + ',';
        out += fmt_time(r.bound_loose_s) + ',' + fmt_time(r.bound_tight_s) + ',';
        out += std::to_string(r.height) + ',' + std::to_string(r.psize_bytes) + ',';
        out += '\n';
    }
    return out;
}

std::vector<ExperimentRow> parse_csv(const std::string& csv) {
    std::vector<std::vector<std::string>> records = split_csv(csv);
    if (records.empty()) throw ParseError("CSV is empty");

    std::string header;
    for (std::size_t i = 0; i < records[0].size(); ++i) {
        if (i) header += ',';
        header += records[0][i];
    }
    if (header != kCsvHeader)
        throw ParseError("unexpected CSV header: '" + header + "'");

    std::vector<ExperimentRow> rows;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (rec.size() != 12)
            throw ParseError("CSV record " + std::to_string(i) + " has " +
                             std::to_string(rec.size()) + " fields, wanted 12");
        ExperimentRow row;
        row.page = rec[0];
        row.name = rec[1];
        row.rtt_ms = field_as_double(rec[2], "rtt_ms");
        row.bandwidth_mbps = field_as_double(rec[3], "bandwidth_mbps");
        row.mode = rec[4];
        row.plt_s = field_as_double(rec[5], "plt_s");
        row.spr_s = field_as_double(rec[6], "spr_s");
        row.bound_loose_s = field_as_double(rec[7], "bound_loose_s");
        row.bound_tight_s = field_as_double(rec[8], "bound_tight_s");
        row.height = static_cast<int>(field_as_int(rec[9], "height"));
        row.psize_bytes = field_as_int(rec[10], "psize_bytes");
        row.error = rec[11];
        rows.push_back(std::move(row));
    }
    return rows;
}

// ─── Aggregation ───

StatsSummary summarize(const std::vector<ExperimentRow>& rows) {
    struct Cell {
        double spr_s;
        int height;
    };
    std::map<std::tuple<std::string, double, double>, Cell> cells;
    std::map<double, std::vector<double>> spr_by_rtt;
    std::map<int, std::vector<double>> spr_by_height;
    std::map<std::pair<double, std::string>, std::vector<double>> plt_by_curve;

    for (const ExperimentRow& r : rows) {
        if (!r.error.empty()) continue;
        plt_by_curve[{r.rtt_ms, r.mode}].push_back(r.plt_s);
        auto key = std::make_tuple(r.page, r.rtt_ms, r.bandwidth_mbps);
        if (cells.emplace(key, Cell{r.spr_s, r.height}).second) {
            spr_by_rtt[r.rtt_ms].push_back(r.spr_s);
            spr_by_height[r.height].push_back(r.spr_s);
        }
    }
    if (cells.empty()) throw StatsError("no usable rows to summarize");

    StatsSummary out;
    for (const auto& [rtt_ms, sprs] : spr_by_rtt) {
        StatsSummary::RttGroup g;
        g.rtt_ms = rtt_ms;
        g.cells = static_cast<int>(sprs.size());
        g.spr_s = quantiles(Sample{sprs, "s"});
        out.per_rtt.push_back(g);
    }

    if (spr_by_rtt.size() >= 2) {
        std::vector<std::pair<double, double>> points;
        for (const auto& [key, cell] : cells)
            points.emplace_back(std::get<1>(key) / 1000.0, cell.spr_s);
        out.spr_vs_rtt = ols_fit(points);
    }

    for (const auto& [height, sprs] : spr_by_height) {
        StatsSummary::HeightGroup g;
        g.height = height;
        g.cells = static_cast<int>(sprs.size());
        double sum = 0.0;
        for (double v : sprs) sum += v;
        g.mean_spr_s = sum / static_cast<double>(sprs.size());
        out.per_height.push_back(g);
    }

    for (const auto& [key, plts] : plt_by_curve) {
        StatsSummary::ModeCurve curve;
        curve.rtt_ms = key.first;
        curve.mode = key.second;
        curve.plt_s = plts;
        std::sort(curve.plt_s.begin(), curve.plt_s.end());
        out.ecdf_curves.push_back(std::move(curve));
    }
    return out;
}

std::string to_json(const StatsSummary& summary) {
    ordered_json doc;
    doc["version"] = 1;

    doc["per_rtt"] = ordered_json::array();
    for (const auto& g : summary.per_rtt) {
        ordered_json j;
        j["rtt_ms"] = g.rtt_ms;
        j["cells"] = g.cells;
        j["spr_s"] = {{"q25", g.spr_s.q25},
                      {"median", g.spr_s.median},
                      {"q75", g.spr_s.q75}};
        doc["per_rtt"].push_back(j);
    }

    if (summary.spr_vs_rtt.has_value()) {
        doc["spr_vs_rtt"] = {{"slope", summary.spr_vs_rtt->slope},
                             {"intercept_s", summary.spr_vs_rtt->intercept},
                             {"residual_mad_s", summary.spr_vs_rtt->residual_mad}};
    } else {
        doc["spr_vs_rtt"] = nullptr;
    }

    doc["per_height"] = ordered_json::array();
    for (const auto& g : summary.per_height) {
        ordered_json j;
        j["height"] = g.height;
        j["cells"] = g.cells;
        j["mean_spr_s"] = g.mean_spr_s;
        doc["per_height"].push_back(j);
    }

    doc["ecdf"] = ordered_json::array();
    for (const auto& c : summary.ecdf_curves) {
        ordered_json j;
        j["rtt_ms"] = c.rtt_ms;
        j["mode"] = c.mode;
        j["plt_s"] = c.plt_s;
        doc["ecdf"].push_back(j);
    }
    return doc.dump(2) + "\n";
}

std::vector<std::string> write_gnuplot_files(const StatsSummary& summary,
                                             const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());

    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& body) {
        fs::path path = fs::path(dir) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << body;
        written.push_back(path.string());
    };

    std::string quant = "# rtt_ms q25_s median_s q75_s\n";
    for (const auto& g : summary.per_rtt)
        quant += fmt_g(g.rtt_ms) + " " + fmt_time(g.spr_s.q25) + " " +
                 fmt_time(g.spr_s.median) + " " + fmt_time(g.spr_s.q75) + "\n";
    emit("spr_quantiles.dat", quant);

    std::string heights = "# height cells mean_spr_s\n";
    for (const auto& g : summary.per_height)
        heights += std::to_string(g.height) + " " + std::to_string(g.cells) + " " +
                   fmt_time(g.mean_spr_s) + "\n";
    emit("spr_by_height.dat", heights);

    for (const auto& c : summary.ecdf_curves) {
        std::string body = "# plt_s fraction\n";
        for (const auto& [value, fraction] : ecdf(Sample{c.plt_s, "s"}))
            body += fmt_time(value) + " " + fmt_time(fraction) + "\n";
        emit("ecdf_rtt" + fmt_g(c.rtt_ms) + "_" + c.mode + ".dat", body);
    }

    std::sort(written.begin(), written.end());
    return written;
}

} // namespace pushsim
