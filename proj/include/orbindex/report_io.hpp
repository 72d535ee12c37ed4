#pragma once

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "orbindex/runner.hpp"

namespace orbindex {

using ojson = nlohmann::ordered_json;

inline constexpr int REPORT_SCHEMA = 1;
inline constexpr const char* CODE_VERSION = "0.1.0";

// locale-free shortest-faithful decimal; CSV cells and summary tables use it
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline ojson versions_json() {
    return ojson{{"schema", REPORT_SCHEMA}, {"code", CODE_VERSION}};
}

// --- t-grid and config-file parsing ----------------------------------------------

// "start:end:count" -> count times linearly spanning [start, end]
inline std::vector<double> parse_t_grid(const std::string& s) {
    const auto fail = [&] {
        throw std::runtime_error("--t-grid expects start:end:count with start, end > 0, got '" +
                                 s + "'");
    };
    auto c1 = s.find(':');
    auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) fail();
    double a = 0, b = 0;
    long n = 0;
    try {
        size_t eat = 0;
        a = std::stod(s.substr(0, c1), &eat);
        if (eat != c1) fail();
        b = std::stod(s.substr(c1 + 1, c2 - c1 - 1), &eat);
        if (eat != c2 - c1 - 1) fail();
        n = std::stol(s.substr(c2 + 1), &eat);
        if (eat != s.size() - c2 - 1) fail();
    } catch (const std::logic_error&) {
        fail();
    }
    if (!(a > 0) || !(b >= a) || n < 1) fail();
    std::vector<double> out;
    if (n == 1) {
        out.push_back(a);
        return out;
    }
    for (long k = 0; k < n; ++k) out.push_back(a + (b - a) * double(k) / double(n - 1));
    return out;
}

// optional structured config: one `key = value` per line, '#' comments.
// Values feed the same slots as the long flags; flags win on conflict.
struct ConfigLine {
    int line = 0;
    std::string key;
    std::string value;
};

inline std::vector<ConfigLine> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config file");
    std::vector<ConfigLine> out;
    std::string raw;
    int ln = 0;
    while (std::getline(in, raw)) {
        ++ln;
        std::string s = raw.substr(0, raw.find('#'));
        const auto strip = [](std::string v) {
            size_t a = v.find_first_not_of(" \t\r");
            size_t b = v.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
        };
        s = strip(s);
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(ln) +
                                     ": expected `key = value`, got '" + strip(raw) + "'");
        ConfigLine cl;
        cl.line = ln;
        cl.key = strip(s.substr(0, eq));
        cl.value = strip(s.substr(eq + 1));
        if (cl.key.empty() || cl.value.empty())
            throw std::runtime_error(path + ":" + std::to_string(ln) +
                                     ": expected `key = value`, got '" + strip(raw) + "'");
        out.push_back(std::move(cl));
    }
    return out;
}

// --- artifact builders ------------------------------------------------------------

inline ojson experiment_config_json(const ExperimentConfig& cfg, bool with_seed) {
    ojson j;
    j["space"] = cfg.space;
    j["l1"] = cfg.l1;
    j["l2"] = cfg.l2;
    j["twist"] = cfg.twist;
    j["sector"] = cfg.sector;
    j["t"] = cfg.t;
    j["paths"] = cfg.paths;
    j["h"] = cfg.h;
    j["quad_level"] = cfg.quad_level;
    j["workers"] = cfg.workers;
    if (with_seed) j["seed"] = cfg.seed;
    return j;
}

inline ojson index_report_json(const IndexRun& run) {
    const IndexReport& r = run.report;
    ojson j;
    j["space"] = r.space;
    // worker count changes scheduling, never values; it lives in the manifest only
    j["params"] = ojson{{"twist_chern", r.twist_chern},
                        {"t", r.t},
                        {"h", run.h_used},
                        {"quad_level_nodes", run.nodes},
                        {"paths_per_node", run.per_node}};
    j["analytic"] =
        ojson{{"value", r.analytic.value}, {"stderr", r.analytic.se}, {"N", r.analytic.paths},
              {"t", r.t}};
    j["geometric"] = ojson{{"value", r.geometric}};
    j["nearest"] = r.nearest;
    j["relocated_nodes"] = r.analytic.relocated;
    j["verdict"] = r.verdict;
    j["seed"] = r.seed;
    j["versions"] = versions_json();
    return j;
}

inline std::string density_csv(const IndexEstimate& est) {
    std::string s = "x1,x2,x3,t,I,stderr\n";
    for (const auto& nd : est.density)
        s += fmt17(nd.x(0)) + "," + fmt17(nd.x(1)) + "," + fmt17(nd.x(2)) + "," + fmt17(est.t) +
             "," + fmt17(nd.value) + "," + fmt17(nd.se) + "\n";
    return s;
}

inline std::string index_summary_text(const IndexRun& run) {
    const IndexReport& r = run.report;
    char line[256];
    std::string s;
    s += "space        twist      t        analytic      stderr      geometric  verdict\n";
    std::snprintf(line, sizeof(line), "%-12s %-10.4g %-8.4g %-13.8g %-11.3e %-10.6g %s\n",
                  r.space.c_str(), r.twist_chern, r.t, r.analytic.value, r.analytic.se,
                  r.geometric, r.verdict ? "pass" : "FAIL");
    s += line;
    return s;
}

inline std::string kernel_csv(const HeatTable& table) {
    std::string s = "t,x1,x2,x3,y1,y2,y3,value,oracle,rel_err\n";
    for (const auto& r : table.rows) {
        s += fmt17(r.t);
        for (int c = 0; c < 3; ++c) s += "," + fmt17(r.x(c));
        for (int c = 0; c < 3; ++c) s += "," + fmt17(r.y(c));
        s += "," + fmt17(r.value) + "," + fmt17(r.oracle) + "," + fmt17(r.rel_err) + "\n";
    }
    return s;
}

inline std::string heat_summary_text(const std::string& space, const HeatTable& t) {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "space %s: %zu kernel samples, worst rel err %.3e (gate %.1e), %s\n",
                  space.c_str(), t.rows.size(), t.worst_rel, t.gate,
                  t.pass ? "pass" : "FAIL");
    return line;
}

inline ojson sample_report_json(const SampleReport& rep) {
    ojson rows = ojson::array();
    for (const auto& r : rep.rows)
        rows.push_back(ojson{{"name", r.name},
                             {"value", r.value},
                             {"expected", r.expected},
                             {"stderr", r.se},
                             {"z", r.z},
                             {"pass", r.pass}});
    return ojson{{"checks", rows}, {"all_pass", rep.all_pass}, {"versions", versions_json()}};
}

inline std::string sample_summary_text(const SampleReport& rep) {
    std::string s = "check                      value          expected       z        verdict\n";
    char line[256];
    for (const auto& r : rep.rows) {
        std::snprintf(line, sizeof(line), "%-26s %-14.6g %-14.6g %-8.3g %s\n", r.name.c_str(),
                      r.value, r.expected, r.z, r.pass ? "pass" : "FAIL");
        s += line;
    }
    return s;
}

inline std::string paths_csv(const std::vector<PathDumpRow>& rows) {
    std::string s = "path_id,k,t_k,x1,x2,x3,R,M_dev\n";
    for (const auto& r : rows) {
        s += std::to_string(r.path_id) + "," + std::to_string(r.k) + "," + fmt17(r.t_k);
        for (int c = 0; c < 3; ++c) s += "," + fmt17(r.x(c));
        s += "," + fmt17(r.R) + "," + fmt17(r.m_dev) + "\n";
    }
    return s;
}

inline ojson fourier_report_json(const std::string& space, const FourierReport& rep) {
    ojson rows = ojson::array();
    for (const auto& r : rep.rows)
        rows.push_back(ojson{{"m", r.m},
                             {"divisible", r.divisible},
                             {"I_m", r.I_m},
                             {"sector_chern", r.sector_chern},
                             {"sector_geometric", r.sector_geometric},
                             {"residual", r.residual}});
    return ojson{{"space", space},
                 {"sectors", rows},
                 {"projector", ojson{{"idempotence", rep.idempotence},
                                     {"orthogonality", rep.orthogonality},
                                     {"annihilation", rep.annihilation}}},
                 {"pass", rep.pass},
                 {"versions", versions_json()}};
}

inline std::string fourier_csv(const FourierReport& rep) {
    std::string s = "m,divisible,I_m,sector_chern,sector_geometric,residual\n";
    for (const auto& r : rep.rows)
        s += std::to_string(r.m) + "," + (r.divisible ? "1" : "0") + "," + fmt17(r.I_m) + "," +
             fmt17(r.sector_chern) + "," + fmt17(r.sector_geometric) + "," + fmt17(r.residual) +
             "\n";
    return s;
}

inline std::string fourier_summary_text(const std::string& space, const FourierReport& rep) {
    std::string s = "fourier sectors on " + space + "\n";
    s += "m     I_m            sector-geometric  residual\n";
    char line[256];
    for (const auto& r : rep.rows) {
        std::snprintf(line, sizeof(line), "%-5d %-14.8g %-17.8g %.3e\n", r.m, r.I_m,
                      r.sector_geometric, r.residual);
        s += line;
    }
    std::snprintf(line, sizeof(line),
                  "projector residuals: idempotence %.2e, orthogonality %.2e, annihilation "
                  "%.2e -> %s\n",
                  rep.idempotence, rep.orthogonality, rep.annihilation,
                  rep.pass ? "pass" : "FAIL");
    s += line;
    return s;
}

// --- artifact writing -------------------------------------------------------------

// the manifest is the one artifact allowed to carry a timestamp; all other
// outputs are byte-stable functions of the configuration
inline ojson manifest_json(const std::string& command, const ojson& config,
                           const std::vector<std::string>& artifacts, double wall_seconds) {
    char stamp[32] = "";
    std::time_t now = std::time(nullptr);
    std::tm tmv{};
    gmtime_r(&now, &tmv);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tmv);
    ojson j;
    j["command"] = command;
    j["created_utc"] = stamp;
    j["wall_seconds"] = wall_seconds;
    j["versions"] = versions_json();
    j["config"] = config;
    j["artifacts"] = artifacts;
    return j;
}

inline void write_artifact(const std::string& dir, const std::string& name,
                           const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot write artifact");
    out << content;
    if (!out) throw std::runtime_error(path + ": short write");
}

}  // namespace orbindex
