// Command-line front end: SVIE simulation, BSVIE backward solves,
// convergence studies, and report rendering with CSV/JSON/SVG outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "volterra/volterra.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace volterra;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOpts {
    std::string problem = "section5";
    double horizon = 1.0;
    std::size_t paths = 1 << 17;
    std::uint64_t seed = 1;
    bool antithetic = false;
    unsigned workers = 1;
    std::string out_dir = "out";
    bool plot = false;
    bool timings = false;
    bool timestamp = false;
    std::string backend = "lsmc";
    unsigned degree = 3;
    double ridge = 1e-8;
    std::string features = "auto";
    std::string load_ensemble_path;
    std::string save_ensemble_path;
};

bool seed_flag_on_cmdline(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--seed" || a.rfind("--seed=", 0) == 0) return true;
    }
    return false;
}

void apply_env_seed(CommonOpts& o, bool seed_on_cmdline) {
    if (seed_on_cmdline) return;
    if (const char* env = std::getenv("SOLVER_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end != '\0')
            throw InvalidArgument("SOLVER_SEED must be an unsigned integer, got '" +
                                  std::string(env) + "'");
        o.seed = v;
    }
}

const SvieProblem& svie_by_name(const std::string& name) {
    static const SvieProblem section5 = example_section5().svie;
    static const SvieProblem bench = example_svie_benchmark();
    if (name == "section5") return section5;
    if (name == "svie-bench") return bench;
    throw InvalidArgument("unknown problem '" + name + "' (expected: section5 | svie-bench)");
}

std::optional<FeatureMapSpec> resolve_features(const CommonOpts& o) {
    if (o.features == "raw") return std::nullopt; // library default (W, x)
    if (o.features == "trig") return trig_feature_map();
    if (o.features == "auto") {
        // section5's coefficients are trigonometric in the state; the
        // bounded trig features keep the regression bias negligible.
        if (o.problem == "section5") return trig_feature_map();
        return std::nullopt;
    }
    throw InvalidArgument("unknown feature map '" + o.features + "' (expected: auto | raw | trig)");
}

LsmcConfig make_lsmc(const CommonOpts& o) {
    LsmcConfig cfg;
    cfg.degree = o.degree;
    cfg.ridge = o.ridge;
    cfg.workers = o.workers;
    cfg.feature_map = resolve_features(o);
    return cfg;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

void write_json(const std::string& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("short write to " + path);
}

ordered_json backend_json(const CommonOpts& o) {
    ordered_json b;
    b["kind"] = o.backend;
    if (o.backend == "lsmc") {
        b["degree"] = o.degree;
        b["ridge"] = o.ridge;
        b["features"] = o.features;
    }
    return b;
}

ordered_json manifest_base(const std::string& command, const CommonOpts& o) {
    ordered_json m;
    m["tool"] = "volterra";
    m["version"] = kVersion;
    m["command"] = command;
    m["problem"] = o.problem;
    m["horizon"] = o.horizon;
    m["paths"] = o.paths;
    m["seed"] = o.seed;
    m["antithetic"] = o.antithetic;
    m["workers"] = o.workers;
    m["backend"] = backend_json(o);
    return m;
}

PathEnsemble obtain_ensemble(const CommonOpts& o, const Partition& p) {
    if (!o.load_ensemble_path.empty()) {
        PathEnsemble e = load_ensemble(o.load_ensemble_path);
        if (e.partition().steps() != p.steps() || e.partition().horizon() != p.horizon())
            throw InvalidArgument("loaded ensemble grid (T=" +
                                  std::to_string(e.partition().horizon()) + ", N=" +
                                  std::to_string(e.partition().steps()) +
                                  ") does not match the requested configuration");
        if (e.paths() != o.paths)
            throw InvalidArgument("loaded ensemble has M=" + std::to_string(e.paths()) +
                                  " paths, requested " + std::to_string(o.paths));
        return e;
    }
    return sample_paths(p, o.paths, o.seed, o.antithetic, o.workers);
}

// --------------------------------------------------------------------------
// simulate-svie
// --------------------------------------------------------------------------

int run_simulate(const CommonOpts& o, std::size_t n_steps) {
    ensure_dir(o.out_dir);
    const SvieProblem& pr = svie_by_name(o.problem);
    const Partition grid = make_uniform(o.horizon, n_steps);
    const PathEnsemble ens = obtain_ensemble(o, grid);
    if (!o.save_ensemble_path.empty()) dump_ensemble(ens, o.save_ensemble_path);
    const SviePaths x = solve_forward(pr, ens, ForwardRoute::Auto, o.workers);
    write_svie_stats_csv(o.out_dir + "/svie_stats.csv", x);

    ordered_json m = manifest_base("simulate-svie", o);
    m["n"] = n_steps;
    m["outputs"] = {"svie_stats.csv"};
    write_json(o.out_dir + "/manifest.json", m);

    if (o.plot) {
        SvgPlot plot("forward solution, one path", "t", "x(t)");
        std::vector<double> ts, vs;
        for (std::size_t i = 0; i <= n_steps; ++i) {
            ts.push_back(grid.node(i));
            vs.push_back(*x.value(i, 0));
        }
        plot.add_series("path 0", ts, vs, "#1f77b4");
        plot.write(o.out_dir + "/svie_path.svg", o.timestamp);
    }
    std::cout << "simulate-svie: wrote " << o.out_dir << "/svie_stats.csv\n";
    return 0;
}

// --------------------------------------------------------------------------
// solve-bsvie
// --------------------------------------------------------------------------

/// Captures one path's diagonal and selected Z rows for the overlay plots.
class PlotCollector : public SweepObserver {
public:
    PlotCollector(const Partition& p, std::vector<std::size_t> k_rows, std::size_t dim_y)
        : k_rows_(std::move(k_rows)), n_(dim_y), w_diag_(p.steps() + 1, 0.0),
          y_diag_(p.steps() + 1, 0.0) {
        z_rows_.resize(k_rows_.size());
        w_rows_.resize(k_rows_.size());
        for (std::size_t i = 0; i < k_rows_.size(); ++i) {
            z_rows_[i].assign(p.steps(), 0.0);
            w_rows_[i].assign(p.steps(), 0.0);
        }
    }

    void on_z(std::size_t k, std::size_t l, std::span<const double> z,
              std::span<const double> w_row, std::span<const double>) override {
        for (std::size_t i = 0; i < k_rows_.size(); ++i)
            if (k_rows_[i] == k) {
                z_rows_[i][l] = z[0]; // path 0, first component
                w_rows_[i][l] = w_row[0];
            }
    }

    void on_diag(std::size_t k, std::span<const double> y, std::span<const double> w_row) override {
        y_diag_[k] = y[0];
        w_diag_[k] = w_row[0];
    }

    std::vector<std::size_t> k_rows_;
    std::size_t n_;
    std::vector<double> w_diag_, y_diag_;
    std::vector<std::vector<double>> z_rows_, w_rows_;
};

int run_solve_bsvie(const CommonOpts& o, std::size_t n_steps, bool dump_z,
                    const std::string& diagnostics_path) {
    ensure_dir(o.out_dir);
    if (o.problem != "section5")
        throw InvalidArgument("solve-bsvie: only the built-in 'section5' problem has a backward "
                              "component");
    const Section5Example ex = example_section5();
    const Partition grid = make_uniform(o.horizon, n_steps);

    ordered_json m = manifest_base("solve-bsvie", o);
    m["n"] = n_steps;

    if (o.backend == "tree") {
        const BsvieTreeSolution sol = solve_backward_tree(ex.bsvie, ex.svie, grid);
        CsvWriter w(o.out_dir + "/tree_ydiag.csv");
        w.line("k,t,node,walk_value,y");
        BinaryTree tree(grid);
        for (std::size_t k = 0; k <= n_steps; ++k)
            for (std::size_t j = 0; j <= k; ++j)
                w.line(std::to_string(k) + "," + fmt_double(grid.node(k)) + "," +
                       std::to_string(j) + "," + fmt_double(tree.node_value(k, j)) + "," +
                       fmt_double(sol.y[k][k][j]));
        w.close();
        m["outputs"] = {"tree_ydiag.csv"};
        write_json(o.out_dir + "/manifest.json", m);
        std::cout << "solve-bsvie (tree): wrote " << o.out_dir << "/tree_ydiag.csv\n";
        return 0;
    }
    if (o.backend != "lsmc")
        throw InvalidArgument("unknown backend '" + o.backend + "' (expected: lsmc | tree)");

    const PathEnsemble ens = obtain_ensemble(o, grid);
    if (!o.save_ensemble_path.empty()) dump_ensemble(ens, o.save_ensemble_path);
    const SviePaths x = solve_forward(ex.svie, ens, ForwardRoute::Auto, o.workers);

    LsmcConfig cfg = make_lsmc(o);
    if (dump_z) {
        const double bytes = 0.5 * static_cast<double>(n_steps) *
                             static_cast<double>(n_steps + 1) * static_cast<double>(o.paths) * 8.0;
        if (bytes > 2e9)
            throw InvalidArgument("--dump-z would materialize ~" +
                                  std::to_string(static_cast<long long>(bytes / 1e9)) +
                                  " GB of Z values; reduce N or M");
        cfg.force_materialize_z = true;
    }

    BsvieErrorAccumulator acc(ex.oracle, grid, ens.paths(), ex.bsvie.dim_y, ens.seed());
    std::vector<std::size_t> panel_k;
    for (double t : {0.1, 0.2, 0.3})
        if (t < o.horizon) panel_k.push_back(pi_index(grid, t));
    PlotCollector collector(grid, panel_k, ex.bsvie.dim_y);
    FanoutObserver fan;
    fan.add(&acc);
    fan.add(&collector);

    std::vector<CondExpDiagRow> diag_rows;
    DiagnosticsSink sink;
    if (!diagnostics_path.empty())
        sink = [&](const CondExpDiagRow& r) { diag_rows.push_back(r); };

    const BsvieSolution sol = solve_backward(ex.bsvie, x, ens, cfg, &fan, sink);
    write_ydiag_stats_csv(o.out_dir + "/ydiag_stats.csv", sol);
    ordered_json outputs = {"ydiag_stats.csv", "errors.json"};

    const ErrorReport rep = acc.report();
    ordered_json ej;
    ej["y_error"] = rep.y_error;
    ej["y_stderr"] = rep.y_stderr;
    ej["z_error"] = rep.z_error;
    ej["z_stderr"] = rep.z_stderr;
    ej["z_nodes_error"] = rep.z_nodes_error;
    ej["total"] = rep.total();
    ej["picard_avg_iters"] = sol.picard_average();
    write_json(o.out_dir + "/errors.json", ej);

    if (!diagnostics_path.empty()) {
        write_diagnostics_csv(diagnostics_path, diag_rows);
        outputs.push_back("diagnostics");
    }
    if (dump_z && sol.z_materialized()) {
        write_z_triangle_csv(o.out_dir + "/z_triangle.csv", sol);
        outputs.push_back("z_triangle.csv");
    }

    if (o.plot) {
        // Y overlay along one sample path
        SvgPlot overlay("diagonal Y along one path (N=" + std::to_string(n_steps) + ")", "t",
                        "Y(t)");
        std::vector<double> ts, y_true, y_num;
        std::vector<double> yt(1);
        for (std::size_t k = 0; k <= n_steps; ++k) {
            ts.push_back(grid.node(k));
            ex.oracle.y_true(grid.node(k), collector.w_diag_[k], yt);
            y_true.push_back(yt[0]);
            y_num.push_back(collector.y_diag_[k]);
        }
        overlay.add_series("closed form", ts, y_true, "#d62728");
        overlay.add_series("numerical", ts, y_num, "#1f77b4", true);
        overlay.write(o.out_dir + "/y_overlay.svg", o.timestamp);
        outputs.push_back("y_overlay.svg");

        for (std::size_t i = 0; i < panel_k.size(); ++i) {
            const std::size_t k = panel_k[i];
            const double t_k = grid.node(k);
            char name[64];
            std::snprintf(name, sizeof(name), "z_panel_t%.1f.svg", t_k);
            SvgPlot panel("Z(t, s) at t=" + fmt_double(t_k) + ", one path", "s", "Z");
            std::vector<double> ss, z_true, z_num;
            std::vector<double> zt(1);
            for (std::size_t l = k; l < n_steps; ++l) {
                ss.push_back(grid.node(l));
                ex.oracle.z_true(t_k, grid.node(l), collector.w_rows_[i][l], zt);
                z_true.push_back(zt[0]);
                z_num.push_back(collector.z_rows_[i][l]);
            }
            panel.add_series("closed form", ss, z_true, "#d62728");
            panel.add_series("numerical", ss, z_num, "#1f77b4", true);
            panel.write(o.out_dir + "/" + name, o.timestamp);
            outputs.push_back(name);
        }
    }
    m["outputs"] = outputs;
    write_json(o.out_dir + "/manifest.json", m);
    std::cout << "solve-bsvie: y_error=" << fmt_double(rep.y_error)
              << " z_error=" << fmt_double(rep.z_error) << " -> " << o.out_dir << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// converge
// --------------------------------------------------------------------------

ordered_json rate_json(const RateFit& fit) {
    ordered_json j;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["r_squared"] = fit.r_squared;
    j["degenerate"] = fit.degenerate;
    j["excluded_n"] = fit.excluded_n;
    ordered_json pts = ordered_json::array();
    for (const auto& [d, e] : fit.points) pts.push_back({d, e});
    j["points"] = pts;
    return j;
}

void rate_plot(const std::string& path, const RateFit& fit, bool timestamp) {
    if (fit.degenerate || fit.points.empty()) return;
    SvgPlot plot("convergence rate", "log10(delta)", "log10(error)");
    std::vector<double> xs, ys, fy;
    for (const auto& [d, e] : fit.points) {
        xs.push_back(std::log10(d));
        ys.push_back(std::log10(e));
    }
    for (double x : xs)
        fy.push_back(fit.intercept / std::log(10.0) + fit.slope * x);
    plot.add_series("measured", xs, ys, "#1f77b4");
    plot.add_series("fit", xs, fy, "#d62728", true);
    plot.write(path, timestamp);
}

int run_converge(const CommonOpts& o, const std::vector<std::size_t>& n_list, std::size_t n_ref,
                 unsigned compare_degree) {
    ensure_dir(o.out_dir);
    ordered_json m = manifest_base("converge", o);
    m["n_list"] = n_list;

    if (o.problem == "section5") {
        const Section5Example ex = example_section5();
        StudyConfig cfg;
        cfg.horizon = o.horizon;
        cfg.n_list = n_list;
        cfg.paths = o.paths;
        cfg.seed = o.seed;
        cfg.antithetic = o.antithetic;
        cfg.backend = make_lsmc(o);
        if (compare_degree > 0) cfg.compare_degree = compare_degree;
        const StudyResult st = convergence_study(ex.svie, ex.bsvie, ex.oracle, cfg);
        write_study_csv(o.out_dir + "/study.csv", st, o.timings);
        if (st.has_refinement)
            write_study_refinement_csv(o.out_dir + "/study_refinement.csv", st, o.degree,
                                       compare_degree);
        ordered_json rj;
        rj["y_rate"] = rate_json(st.y_fit);
        rj["z_rate"] = rate_json(st.z_fit);
        rj["total_rate"] = rate_json(st.total_fit);
        write_json(o.out_dir + "/rate.json", rj);
        if (o.plot) rate_plot(o.out_dir + "/rate_loglog.svg", st.total_fit, o.timestamp);
        m["outputs"] = {"study.csv", "rate.json"};
        write_json(o.out_dir + "/manifest.json", m);
        std::cout << "converge: total slope " << fmt_double(st.total_fit.slope) << " (r^2 "
                  << fmt_double(st.total_fit.r_squared) << ") -> " << o.out_dir << "\n";
        return 0;
    }
    if (o.problem == "svie-bench") {
        const SvieProblem pr = example_svie_benchmark();
        const SvieStudyResult st =
            svie_self_convergence(pr, o.horizon, n_list, n_ref, o.paths, o.seed, o.workers);
        write_svie_study_csv(o.out_dir + "/study.csv", st, o.timings);
        ordered_json rj;
        rj["n_ref"] = n_ref;
        rj["rate"] = rate_json(st.fit);
        write_json(o.out_dir + "/rate.json", rj);
        if (o.plot) rate_plot(o.out_dir + "/rate_loglog.svg", st.fit, o.timestamp);
        m["n_ref"] = n_ref;
        m["outputs"] = {"study.csv", "rate.json"};
        write_json(o.out_dir + "/manifest.json", m);
        std::cout << "converge: slope " << fmt_double(st.fit.slope) << " (r^2 "
                  << fmt_double(st.fit.r_squared) << ") -> " << o.out_dir << "\n";
        return 0;
    }
    throw InvalidArgument("unknown problem '" + o.problem + "' for converge");
}

// --------------------------------------------------------------------------
// report
// --------------------------------------------------------------------------

int run_report(const std::string& study_dir) {
    const std::string rate_path = study_dir + "/rate.json";
    std::ifstream in(rate_path);
    if (!in) throw IoError("report: cannot open " + rate_path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("report: malformed JSON in " + rate_path + ": " + e.what());
    }
    auto show = [](const std::string& name, const ordered_json& r) {
        if (!r.is_object()) return;
        if (r.value("degenerate", false)) {
            std::cout << name << ": degenerate (all errors zero)\n";
            return;
        }
        std::cout << name << ": slope " << r.value("slope", 0.0) << ", r^2 "
                  << r.value("r_squared", 0.0);
        if (r.contains("excluded_n") && !r["excluded_n"].empty())
            std::cout << ", excluded N " << r["excluded_n"].dump();
        std::cout << "\n";
    };
    if (j.contains("total_rate")) {
        show("y    ", j["y_rate"]);
        show("z    ", j["z_rate"]);
        show("total", j["total_rate"]);
    } else if (j.contains("rate")) {
        show("rate", j["rate"]);
    } else {
        throw IoError("report: no rate entries in " + rate_path);
    }

    std::ifstream csv(study_dir + "/study.csv");
    if (csv) {
        std::cout << "\n";
        std::string line;
        while (std::getline(csv, line)) std::cout << line << "\n";
    }
    return 0;
}

/// Flat key=value config support: `--config FILE` anywhere on the command
/// line loads FILE and injects `--key=value` tokens for every key not
/// already given explicitly, so flags always override the file. A single
/// nesting level `backend.key` maps onto the backend options; boolean keys
/// take true/false. Section headers are ignored.
std::vector<std::string> expand_config(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    std::string config_path;
    for (std::size_t i = 1; i < args.size();) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw InvalidArgument("--config needs a file path");
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<long>(i));
        } else {
            ++i;
        }
    }
    if (config_path.empty()) return args;

    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config file " + config_path);
    static const std::vector<std::string> kFlags = {"plot", "antithetic", "timings", "timestamp",
                                                    "dump-z"};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(line_no) +
                                  " is not key=value: '" + line + "'");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        auto trim = [](std::string& sv) {
            const auto b = sv.find_first_not_of(" \t");
            const auto e = sv.find_last_not_of(" \t");
            sv = b == std::string::npos ? std::string() : sv.substr(b, e - b + 1);
        };
        trim(key);
        trim(value);
        if (key.rfind("backend.", 0) == 0) key = key.substr(8);
        if (key.empty()) throw InvalidArgument("config line " + std::to_string(line_no) +
                                               ": empty key");
        const std::string flag = "--" + key;
        bool given = false;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) given = true;
        if (given) continue;
        const bool is_flag = std::find(kFlags.begin(), kFlags.end(), key) != kFlags.end();
        if (is_flag) {
            if (value == "true" || value == "1" || value == "yes") args.push_back(flag);
            else if (value != "false" && value != "0" && value != "no")
                throw InvalidArgument("config key '" + key + "' expects a boolean");
        } else {
            args.push_back(flag + "=" + value);
        }
    }
    return args;
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            if (!cur.empty()) {
                out.push_back(static_cast<std::size_t>(std::stoull(cur)));
                cur.clear();
            }
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            cur += c;
        } else {
            throw InvalidArgument("bad N list entry near '" + std::string(1, c) + "'");
        }
    }
    if (out.empty()) throw InvalidArgument("empty N list");
    return out;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--problem", o.problem, "built-in problem (section5 | svie-bench)");
    cmd->add_option("--t", o.horizon, "time horizon T");
    cmd->add_option("--m", o.paths, "Monte Carlo path count M");
    cmd->add_option("--seed", o.seed, "RNG seed (SOLVER_SEED overrides the default)");
    cmd->add_flag("--antithetic", o.antithetic, "antithetic path pairing");
    cmd->add_option("--workers", o.workers, "worker threads (0 = hardware)");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_flag("--plot", o.plot, "emit SVG figures");
    cmd->add_flag("--timings", o.timings, "record wall times in CSV output");
    cmd->add_flag("--timestamp", o.timestamp, "embed a timestamp comment in SVG output");
    cmd->add_option("--backend", o.backend, "conditional expectation backend (lsmc | tree)");
    cmd->add_option("--degree", o.degree, "LSMC polynomial total degree");
    cmd->add_option("--ridge", o.ridge, "LSMC ridge regularization");
    cmd->add_option("--features", o.features, "LSMC feature map (auto | raw | trig)");
    cmd->add_option("--load-ensemble", o.load_ensemble_path, "replay a dumped path ensemble");
    cmd->add_option("--save-ensemble", o.save_ensemble_path, "dump the path ensemble for replay");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical solver for stochastic Volterra integral equations and their "
                 "backward counterparts\n--config FILE loads flat key=value defaults; "
                 "explicit flags override it"};
    app.require_subcommand(1);

    CommonOpts sim_o, bs_o, cv_o;
    std::size_t sim_n = 256, bs_n = 100, cv_nref = 4096;
    unsigned cv_compare_degree = 0;
    std::string cv_nlist = "8,16,32,64,128";
    bool bs_dump_z = false;
    std::string bs_diag, report_dir;

    CLI::App* sim = app.add_subcommand("simulate-svie", "forward Euler SVIE simulation");
    add_common(sim, sim_o);
    sim->add_option("--n", sim_n, "time steps N");

    CLI::App* bs = app.add_subcommand("solve-bsvie", "backward Euler BSVIE solve");
    add_common(bs, bs_o);
    bs->add_option("--n", bs_n, "time steps N");
    bs->add_flag("--dump-z", bs_dump_z, "materialize and dump the Z triangle CSV");
    bs->add_option("--diagnostics", bs_diag, "write per-(k,l) regression diagnostics CSV");

    CLI::App* cv = app.add_subcommand("converge", "convergence-rate study");
    add_common(cv, cv_o);
    cv->add_option("--n-list", cv_nlist, "comma-separated ascending N values");
    cv->add_option("--n-ref", cv_nref, "reference grid for svie-bench self-convergence");
    cv->add_option("--compare-degree", cv_compare_degree,
                   "rerun each N at this basis degree and write study_refinement.csv");

    CLI::App* rep = app.add_subcommand("report", "summarize a study directory");
    rep->add_option("--study", report_dir, "study output directory")->required();

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::vector<char*> argp;
    argp.reserve(args.size());
    for (std::string& a : args) argp.push_back(a.data());
    try {
        app.parse(static_cast<int>(argp.size()), argp.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    }

    try {
        const bool seed_cli = seed_flag_on_cmdline(argc, argv);
        if (sim->parsed()) {
            apply_env_seed(sim_o, seed_cli);
            return run_simulate(sim_o, sim_n);
        }
        if (bs->parsed()) {
            apply_env_seed(bs_o, seed_cli);
            return run_solve_bsvie(bs_o, bs_n, bs_dump_z, bs_diag);
        }
        if (cv->parsed()) {
            apply_env_seed(cv_o, seed_cli);
            return run_converge(cv_o, parse_n_list(cv_nlist), cv_nref, cv_compare_degree);
        }
        if (rep->parsed()) return run_report(report_dir);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
