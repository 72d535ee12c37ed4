#include <clocale>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "orbindex/report_io.hpp"

namespace {

using orbindex::ExperimentConfig;
using orbindex::ojson;

double to_num(const std::string& v) {
    try {
        size_t eat = 0;
        double d = std::stod(v, &eat);
        if (eat == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw std::runtime_error("not a number: '" + v + "'");
}

long to_long(const std::string& v) {
    try {
        size_t eat = 0;
        long n = std::stol(v, &eat);
        if (eat == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw std::runtime_error("not an integer: '" + v + "'");
}

std::uint64_t to_u64(const std::string& v) {
    try {
        size_t eat = 0;
        unsigned long long n = std::stoull(v, &eat);
        if (eat == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw std::runtime_error("not a seed value: '" + v + "'");
}

using Setters = std::map<std::string, std::function<void(const std::string&)>>;

// config-file entries fill whatever the command line left untouched;
// unknown keys and malformed values fail with the file line
void apply_config(CLI::App* sub, const std::string& path, const Setters& setters) {
    for (const auto& cl : orbindex::parse_config_file(path)) {
        const std::string where = path + ":" + std::to_string(cl.line);
        auto it = setters.find(cl.key);
        if (it == setters.end())
            throw std::runtime_error(where + ": unknown key '" + cl.key + "'");
        if (sub->count("--" + cl.key) > 0) continue;  // flags win on conflict
        try {
            it->second(cl.value);
        } catch (const std::exception& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
    }
}

void need(bool ok, const std::string& msg) {
    if (!ok) throw std::runtime_error(msg);
}

struct Cli {
    ExperimentConfig cfg;
    std::string out = "out";
    std::string cfgfile;
    std::string tgrid = "0.05:0.5:10";
    bool seed_set = false;

    CLI::App app{"orbindex: a numerical laboratory for the transversal index on S1 spaces"};
    CLI::App* ix = nullptr;
    CLI::App* ht = nullptr;
    CLI::App* sa = nullptr;
    CLI::App* fo = nullptr;
    Setters set_ix, set_ht, set_sa, set_fo;

    Cli() {
        app.require_subcommand(1);
        // long-only help; the short -h would shadow the step option --h
        app.set_help_flag("--help", "print help and exit");
        const std::string spaces = [] {
            std::string s = "catalog space (";
            bool first = true;
            for (const auto& n : orbindex::catalog_names()) {
                if (!first) s += ", ";
                s += n;
                first = false;
            }
            return s + ")";
        }();

        auto add_common = [&](CLI::App* sub, Setters& set) {
            sub->set_help_flag("--help", "print help and exit");
            sub->add_option("--space", cfg.space, spaces)->capture_default_str();
            sub->add_option("--l1", cfg.l1, "torus period 1")->capture_default_str();
            sub->add_option("--l2", cfg.l2, "torus period 2")->capture_default_str();
            sub->add_option("--out", out, "output directory")
                ->envname("ORBINDEX_OUT")
                ->capture_default_str();
            sub->add_option("--config", cfgfile,
                            "structured config file, `key = value` lines; flags win");
            set["space"] = [&](const std::string& v) { cfg.space = v; };
            set["l1"] = [&](const std::string& v) { cfg.l1 = to_num(v); };
            set["l2"] = [&](const std::string& v) { cfg.l2 = to_num(v); };
            set["out"] = [&](const std::string& v) { out = v; };
        };
        auto add_seed = [&](CLI::App* sub, Setters& set) {
            sub->add_option("--seed", cfg.seed, "random seed; mandatory, no wall-clock fallback");
            set["seed"] = [&](const std::string& v) {
                cfg.seed = to_u64(v);
                seed_set = true;
            };
        };
        auto add_twist = [&](CLI::App* sub, Setters& set) {
            sub->add_option("--twist", cfg.twist,
                            "twist charge: magnetic Chern number (torus) or monopole charge "
                            "(spheres)")
                ->capture_default_str();
            set["twist"] = [&](const std::string& v) { cfg.twist = to_num(v); };
        };

        ix = app.add_subcommand("index",
                                "two-sided run: Monte-Carlo analytic index vs geometric index");
        add_common(ix, set_ix);
        add_seed(ix, set_ix);
        add_twist(ix, set_ix);
        ix->add_option("--sector", cfg.sector, "Fourier sector m (0 = full invariant part)")
            ->capture_default_str();
        ix->add_option("--t", cfg.t, "heat time")->capture_default_str();
        ix->add_option("--paths", cfg.paths, "total bridge paths")->capture_default_str();
        ix->add_option("--h", cfg.h, "bridge step; 0 picks t/400")->capture_default_str();
        ix->add_option("--quad-level", cfg.quad_level, "base quadrature level")
            ->capture_default_str();
        ix->add_option("--workers", cfg.workers, "worker threads (result is worker-count "
                                                 "independent)")
            ->capture_default_str();
        set_ix["sector"] = [&](const std::string& v) { cfg.sector = int(to_long(v)); };
        set_ix["t"] = [&](const std::string& v) { cfg.t = to_num(v); };
        set_ix["paths"] = [&](const std::string& v) { cfg.paths = to_long(v); };
        set_ix["h"] = [&](const std::string& v) { cfg.h = to_num(v); };
        set_ix["quad-level"] = [&](const std::string& v) { cfg.quad_level = int(to_long(v)); };
        set_ix["workers"] = [&](const std::string& v) { cfg.workers = int(to_long(v)); };

        ht = app.add_subcommand("heat", "kernel tables against the exact oracles");
        add_common(ht, set_ht);
        ht->add_option("--t-grid", tgrid, "time grid start:end:count")->capture_default_str();
        ht->add_option("--grid", cfg.grid, "pair grid order (grid x grid samples per time)")
            ->capture_default_str();
        set_ht["t-grid"] = [&](const std::string& v) { tgrid = v; };
        set_ht["grid"] = [&](const std::string& v) { cfg.grid = int(to_long(v)); };

        sa = app.add_subcommand("sample", "path statistics against exact references");
        add_common(sa, set_sa);
        add_seed(sa, set_sa);
        add_twist(sa, set_sa);
        sa->add_option("--t", cfg.t, "walk duration")->capture_default_str();
        sa->add_option("--paths", cfg.paths, "paths per statistic")->capture_default_str();
        sa->add_option("--h", cfg.h, "step; 0 picks t/200")->capture_default_str();
        sa->add_option("--r", cfg.exit_radius, "exit-time ball radius")->capture_default_str();
        sa->add_option("--dump-paths", cfg.dump, "also dump this many bridges to paths.csv")
            ->capture_default_str();
        set_sa["t"] = [&](const std::string& v) { cfg.t = to_num(v); };
        set_sa["paths"] = [&](const std::string& v) { cfg.paths = to_long(v); };
        set_sa["h"] = [&](const std::string& v) { cfg.h = to_num(v); };
        set_sa["r"] = [&](const std::string& v) { cfg.exit_radius = to_num(v); };
        set_sa["dump-paths"] = [&](const std::string& v) { cfg.dump = to_long(v); };

        fo = app.add_subcommand("fourier", "sector tables I_m and projector algebra residuals");
        add_common(fo, set_fo);
        add_twist(fo, set_fo);
        fo->add_option("--m-min", cfg.m_min, "lowest sector")->capture_default_str();
        fo->add_option("--m-max", cfg.m_max, "highest sector")->capture_default_str();
        fo->add_option("--K", cfg.fourier_K, "orbit quadrature points")->capture_default_str();
        fo->add_option("--quad-level", cfg.quad_level, "base quadrature level")
            ->capture_default_str();
        set_fo["m-min"] = [&](const std::string& v) { cfg.m_min = int(to_long(v)); };
        set_fo["m-max"] = [&](const std::string& v) { cfg.m_max = int(to_long(v)); };
        set_fo["K"] = [&](const std::string& v) { cfg.fourier_K = int(to_long(v)); };
        set_fo["quad-level"] = [&](const std::string& v) { cfg.quad_level = int(to_long(v)); };
    }
};

int cmd_index(const ExperimentConfig& cfg, const std::string& out) {
    need(cfg.t > 0, "--t must be positive");
    need(cfg.paths > 0, "--paths must be positive");
    need(cfg.h >= 0, "--h must be nonnegative");
    need(cfg.quad_level >= 1, "--quad-level must be at least 1");
    need(cfg.workers >= 1, "--workers must be at least 1");
    orbindex::IndexRun run = orbindex::run_index_experiment(cfg);
    const std::string summary = orbindex::index_summary_text(run);
    orbindex::write_artifact(out, "report.json", orbindex::index_report_json(run).dump(2) + "\n");
    orbindex::write_artifact(out, "density.csv", orbindex::density_csv(run.report.analytic));
    orbindex::write_artifact(out, "summary.txt", summary);
    ojson cj = orbindex::experiment_config_json(cfg, true);
    cj["h_used"] = run.h_used;
    orbindex::write_artifact(
        out, "manifest.json",
        orbindex::manifest_json("index", cj, {"report.json", "density.csv", "summary.txt"},
                                run.report.wall_seconds)
                .dump(2) +
            "\n");
    std::cout << summary;
    return run.report.verdict ? 0 : 2;
}

int cmd_heat(const ExperimentConfig& cfg, const std::string& tgrid, const std::string& out) {
    need(cfg.grid >= 2, "--grid must be at least 2");
    const std::vector<double> times = orbindex::parse_t_grid(tgrid);
    auto sp = orbindex::make_space(cfg);
    auto ker = orbindex::make_heat_kernel(sp);
    const auto t0 = std::chrono::steady_clock::now();
    orbindex::HeatTable table = orbindex::heat_oracle_table(sp, *ker, times, cfg.grid);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string summary = orbindex::heat_summary_text(sp.name, table);
    orbindex::write_artifact(out, "kernel.csv", orbindex::kernel_csv(table));
    orbindex::write_artifact(out, "summary.txt", summary);
    ojson cj;
    cj["space"] = cfg.space;
    cj["l1"] = cfg.l1;
    cj["l2"] = cfg.l2;
    cj["t_grid"] = tgrid;
    cj["grid"] = cfg.grid;
    orbindex::write_artifact(
        out, "manifest.json",
        orbindex::manifest_json("heat", cj, {"kernel.csv", "summary.txt"}, wall).dump(2) + "\n");
    std::cout << summary;
    return table.pass ? 0 : 2;
}

int cmd_sample(const ExperimentConfig& cfg, const std::string& out) {
    need(cfg.t > 0, "--t must be positive");
    need(cfg.paths > 1, "--paths must be at least 2");
    need(cfg.h >= 0, "--h must be nonnegative");
    need(cfg.exit_radius > 0, "--r must be positive");
    need(cfg.dump >= 0, "--dump-paths must be nonnegative");
    const auto t0 = std::chrono::steady_clock::now();
    orbindex::SampleReport rep = orbindex::run_sample_suite(cfg);
    const std::string summary = orbindex::sample_summary_text(rep);
    std::vector<std::string> artifacts{"sample.json", "summary.txt"};
    orbindex::write_artifact(out, "sample.json",
                             orbindex::sample_report_json(rep).dump(2) + "\n");
    orbindex::write_artifact(out, "summary.txt", summary);
    if (cfg.dump > 0) {
        orbindex::write_artifact(out, "paths.csv",
                                 orbindex::paths_csv(orbindex::dump_paths(cfg, cfg.dump)));
        artifacts.push_back("paths.csv");
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    orbindex::write_artifact(
        out, "manifest.json",
        orbindex::manifest_json("sample", orbindex::experiment_config_json(cfg, true), artifacts,
                                wall)
                .dump(2) +
            "\n");
    std::cout << summary;
    return rep.all_pass ? 0 : 2;
}

int cmd_fourier(const ExperimentConfig& cfg, const std::string& out) {
    need(cfg.m_min <= cfg.m_max, "--m-min must not exceed --m-max");
    need(cfg.fourier_K >= 16, "--K must be at least 16");
    need(cfg.quad_level >= 1, "--quad-level must be at least 1");
    auto sp = orbindex::make_space(cfg);
    auto tw = orbindex::make_twist(sp, cfg.twist);
    const auto t0 = std::chrono::steady_clock::now();
    orbindex::FourierReport rep = orbindex::run_fourier_suite(sp, tw, cfg.m_min, cfg.m_max,
                                                              cfg.fourier_K, cfg.quad_level);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string summary = orbindex::fourier_summary_text(sp.name, rep);
    orbindex::write_artifact(out, "fourier.json",
                             orbindex::fourier_report_json(sp.name, rep).dump(2) + "\n");
    orbindex::write_artifact(out, "fourier.csv", orbindex::fourier_csv(rep));
    orbindex::write_artifact(out, "summary.txt", summary);
    ojson cj;
    cj["space"] = cfg.space;
    cj["twist"] = cfg.twist;
    cj["m_min"] = cfg.m_min;
    cj["m_max"] = cfg.m_max;
    cj["K"] = cfg.fourier_K;
    cj["quad_level"] = cfg.quad_level;
    orbindex::write_artifact(
        out, "manifest.json",
        orbindex::manifest_json("fourier", cj, {"fourier.json", "fourier.csv", "summary.txt"},
                                wall)
                .dump(2) +
            "\n");
    std::cout << summary;
    return rep.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");
    Cli cli;
    try {
        cli.app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    try {
        CLI::App* sub = cli.app.get_subcommands().front();
        const Setters& set = sub == cli.ix   ? cli.set_ix
                             : sub == cli.ht ? cli.set_ht
                             : sub == cli.sa ? cli.set_sa
                                             : cli.set_fo;
        if (!cli.cfgfile.empty()) apply_config(sub, cli.cfgfile, set);
        if (sub == cli.ix || sub == cli.sa) {
            cli.seed_set = cli.seed_set || sub->count("--seed") > 0;
            need(cli.seed_set,
                 "missing --seed: every sampling run must pin its seed (no wall-clock seeding)");
        }
        if (sub == cli.ix) return cmd_index(cli.cfg, cli.out);
        if (sub == cli.ht) return cmd_heat(cli.cfg, cli.tgrid, cli.out);
        if (sub == cli.sa) return cmd_sample(cli.cfg, cli.out);
        return cmd_fourier(cli.cfg, cli.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
