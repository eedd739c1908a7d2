#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "liquidity/liquidity.hpp"

namespace {

using namespace liquidity;

struct GlobalFlags {
    std::string config_path;
    std::string out;
    std::string format;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

ExperimentConfig effective_config(const GlobalFlags& g) {
    ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
    if (!g.format.empty()) cfg.format = parse_format(g.format);
    if (!g.out.empty()) cfg.output_path = g.out;
    if (g.seed_set) cfg.seed = g.seed;
    return cfg;
}

void emit(const Report& r, const ExperimentConfig& cfg, const std::string& path) {
    const OutputFormat f = cfg.format.value_or(OutputFormat::Csv);
    if (path.empty() || path == "-") {
        write_report(std::cout, r, cfg, f);
        return;
    }
    std::ofstream out(path);
    if (!out) fail(ErrorKind::InvalidParams, "cannot write output file '" + path + "'");
    write_report(out, r, cfg, f);
}

// figures: with --out, a directory receiving fig1.<ext> and fig2.<ext>.
void emit_figures(const FigureData& d, const ExperimentConfig& cfg) {
    const std::string path = cfg.output_path.value_or("");
    if (path.empty() || path == "-") {
        emit(d.fig1, cfg, "");
        std::cout << "\n";
        emit(d.fig2, cfg, "");
        return;
    }
    std::filesystem::create_directories(path);
    const std::string ext = cfg.format.value_or(OutputFormat::Csv) == OutputFormat::Csv ? ".csv" : ".json";
    emit(d.fig1, cfg, (std::filesystem::path(path) / ("fig1" + ext)).string());
    emit(d.fig2, cfg, (std::filesystem::path(path) / ("fig2" + ext)).string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal consumption and investment under liquidity freezes"};
    app.require_subcommand(1);
    GlobalFlags g;
    app.add_option("--config", g.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output file (figures: directory); default stdout");
    app.add_option("--seed", g.seed, "Random seed")->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    app.fallthrough();

    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"solve-log", "Closed-form log-utility solution"},
        {"solve-hara", "Uncoupled power-utility solution (alpha = r)"},
        {"coupled", "Coupled liquid/illiquid fixed point"},
        {"homogenize", "Fast-switching limit; with homogenized.eps also the rescaled coupled solve"},
        {"finite-horizon", "Finite-horizon log loss surface"},
        {"dks", "Terminal-wealth model with a liquidation loss"},
        {"simulate", "Monte Carlo value of the optimal policy"},
        {"table1", "All 18 rows of the efficiency-loss table"},
        {"figures", "Consumption curves and finite-horizon loss surface"},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const ExperimentConfig cfg = effective_config(g);
        const std::string cmd = app.get_subcommands().front()->get_name();
        const std::string out = cfg.output_path.value_or("");
        if (cmd == "solve-log") emit(run_solve_log(cfg), cfg, out);
        else if (cmd == "solve-hara") emit(run_solve_hara(cfg), cfg, out);
        else if (cmd == "coupled") emit(run_coupled(cfg), cfg, out);
        else if (cmd == "homogenize") emit(run_homogenize(cfg), cfg, out);
        else if (cmd == "finite-horizon") emit(run_finite_horizon(cfg), cfg, out);
        else if (cmd == "dks") emit(run_dks(cfg), cfg, out);
        else if (cmd == "simulate") emit(run_simulate(cfg), cfg, out);
        else if (cmd == "table1") emit(run_table1(cfg), cfg, out);
        else if (cmd == "figures") emit_figures(emit_figure_data(cfg), cfg);
        return 0;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
