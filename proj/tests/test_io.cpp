#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "volterra/io.hpp"
#include "volterra/svg.hpp"

using namespace volterra;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("svie stats CSV schema and determinism") {
    const SvieProblem p = example_svie_benchmark();
    const PathEnsemble ens = sample_paths(make_uniform(1.0, 8), 300, 3);
    const SviePaths x = solve_forward(p, ens);
    write_svie_stats_csv("io_stats_a.csv", x);
    write_svie_stats_csv("io_stats_b.csv", x);
    const std::string a = slurp("io_stats_a.csv"), b = slurp("io_stats_b.csv");
    CHECK(a == b);
    CHECK(a.rfind("i,t,component,mean,variance,q05,q25,q50,q75,q95\n", 0) == 0);
    // 9 nodes, one component each, plus header
    std::size_t lines = 0;
    for (char c : a)
        if (c == '\n') ++lines;
    CHECK(lines == 10);
    std::remove("io_stats_a.csv");
    std::remove("io_stats_b.csv");
}

TEST_CASE("study CSV suppresses wall time by default") {
    const Section5Example ex = example_section5();
    StudyConfig cfg;
    cfg.n_list = {4, 8, 16};
    cfg.paths = 1024;
    cfg.seed = 7;
    const StudyResult st = convergence_study(ex.svie, ex.bsvie, ex.oracle, cfg);
    write_study_csv("io_study_a.csv", st, false);
    write_study_csv("io_study_b.csv", st, false);
    CHECK(slurp("io_study_a.csv") == slurp("io_study_b.csv"));
    const std::string a = slurp("io_study_a.csv");
    CHECK(a.rfind("N,delta,y_error,y_stderr,z_error,z_stderr,total,picard_avg_iters,wall_time_s\n",
                  0) == 0);
    // every row ends in ",0" when timings are suppressed
    std::istringstream is(a);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) CHECK(line.substr(line.size() - 2) == ",0");

    write_study_csv("io_study_t.csv", st, true);
    CHECK(slurp("io_study_t.csv") != a);
    std::remove("io_study_a.csv");
    std::remove("io_study_b.csv");
    std::remove("io_study_t.csv");
}

TEST_CASE("z triangle and diagnostics CSV writers") {
    const Section5Example ex = example_section5();
    const PathEnsemble ens = sample_paths(make_uniform(1.0, 4), 256, 9);
    const SviePaths x = solve_forward(ex.svie, ens);
    LsmcConfig cfg;
    std::vector<CondExpDiagRow> diags;
    const BsvieSolution sol = solve_backward(ex.bsvie, x, ens, cfg, nullptr,
                                             [&](const CondExpDiagRow& r) { diags.push_back(r); });
    CHECK_FALSE(diags.empty());
    write_diagnostics_csv("io_diag.csv", diags);
    const std::string d = slurp("io_diag.csv");
    CHECK(d.rfind("l,k,target,condition_estimate,residual_rms,picard_iterations\n", 0) == 0);
    std::remove("io_diag.csv");

    write_z_triangle_csv("io_z.csv", sol, 2);
    const std::string z = slurp("io_z.csv");
    CHECK(z.rfind("k,l,path,component,value\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : z)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + 10 * 2); // 10 (k,l) pairs at N=4, 2 paths
    std::remove("io_z.csv");

    write_ydiag_stats_csv("io_y.csv", sol);
    CHECK(slurp("io_y.csv").rfind("k,t,component,", 0) == 0);
    std::remove("io_y.csv");
}

TEST_CASE("svg plots are written deterministically without timestamps") {
    SvgPlot plot("demo", "t", "value");
    plot.add_series("a", {0.0, 0.5, 1.0}, {0.0, 0.25, 1.0}, "#d62728");
    plot.add_series("b", {0.0, 0.5, 1.0}, {0.1, 0.2, 0.3}, "#1f77b4", true);
    plot.write("io_plot_a.svg", false);
    plot.write("io_plot_b.svg", false);
    const std::string a = slurp("io_plot_a.svg");
    CHECK(a == slurp("io_plot_b.svg"));
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("polyline") != std::string::npos);
    CHECK(a.find("generated") == std::string::npos);
    plot.write("io_plot_t.svg", true);
    CHECK(slurp("io_plot_t.svg").find("generated") != std::string::npos);
    std::remove("io_plot_a.svg");
    std::remove("io_plot_b.svg");
    std::remove("io_plot_t.svg");
}
