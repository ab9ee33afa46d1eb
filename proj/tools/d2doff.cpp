// d2doff: analytic sweeps, simulation sweeps, comparison and range
// optimization for D2D offloading on a vehicular street.
//
//   d2doff analytic  [--preset desk] [--config f.ini] [--dmax-grid 20:300:10] --out DIR
//   d2doff simulate  ... [--records]
//   d2doff compare   [--analytic-csv A --sim-csv S] ...
//   d2doff optimize  [--interval 20:300] ...
//   d2doff oracle    ...
//
// Exit codes: 0 ok, 1 validation error, 2 acceptance gate failed, 3 numeric failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "d2doff/config.hpp"
#include "d2doff/experiments.hpp"

namespace fs = std::filesystem;
using namespace d2doff;

namespace {

struct options {
    std::string config_path;
    std::string preset = "paper";
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> grid;
    std::optional<std::size_t> replications;
    std::optional<std::size_t> workers;
    std::string analytic_csv;
    std::string sim_csv;
    std::string interval;
    bool records = false;
};

experiment_config resolve(const options& o)
{
    auto cfg = preset(o.preset);
    if (!o.config_path.empty())
        cfg = load_config(o.config_path, cfg);
    if (o.seed)
        cfg.master_seed = *o.seed;
    if (o.grid)
        cfg.dmax_grid = parse_grid(*o.grid);
    if (o.replications)
        cfg.replications = *o.replications;
    if (o.workers)
        cfg.workers = *o.workers;
    cfg.sim.keep_records = o.records;
    cfg.validate();
    return cfg;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream os(p);
    if (!os)
        throw config_error("cannot write '" + p.string() + "'");
    return os;
}

class session {
public:
    session(std::string command, const experiment_config& cfg, fs::path dir)
        : dir_(std::move(dir))
    {
        fs::create_directories(dir_);
        man_.command = std::move(command);
        man_.config = cfg;
        man_.started = cli::utc_timestamp();
    }

    // the manifest is on disk before any result file is opened
    std::ofstream output(const std::string& name)
    {
        man_.outputs.push_back(name);
        man_.write(dir_);
        return open_out(dir_ / name);
    }

    void finish(const std::string& status)
    {
        man_.status = status;
        man_.finished = cli::utc_timestamp();
        man_.write(dir_);
    }

private:
    fs::path dir_;
    cli::run_manifest man_;
};

int run_analytic(const options& o)
{
    const auto cfg = resolve(o);
    session s("analytic", cfg, o.out_dir);
    const auto rows = cli::cmd_analytic(cfg, cfg.dmax_grid);
    auto os = s.output("analytic.csv");
    cli::write_analytic_csv(os, rows);
    s.finish("ok");
    std::cout << "analytic: " << rows.size() << " rows -> " << (fs::path(o.out_dir) / "analytic.csv").string() << '\n';
    return 0;
}

int run_simulate(const options& o)
{
    const auto cfg = resolve(o);
    session s("simulate", cfg, o.out_dir);
    const auto res = cli::cmd_simulate(cfg, cfg.dmax_grid);
    {
        auto os = s.output("sim_replications.csv");
        cli::write_replications_csv(os, res.replications);
    }
    {
        auto os = s.output("sim_aggregate.csv");
        cli::write_aggregate_csv(os, res.aggregates);
    }
    if (cfg.sim.keep_records) {
        auto os = s.output("sim_records.csv");
        cli::write_records_csv(os, res.records);
    }
    s.finish("ok");
    for (const auto& a : res.aggregates) {
        std::cout << "d_max=" << a.d_max << " eff=" << a.eff_mean;
        if (a.has_ci())
            std::cout << " +/- " << a.eff_half_width;
        else
            std::cout << " (CI n/a)";
        std::cout << " power_mw=" << a.power_mean << '\n';
    }
    return 0;
}

int run_compare(const options& o)
{
    const auto cfg = resolve(o);
    session s("compare", cfg, o.out_dir);
    std::vector<cli::analytic_row> an;
    std::vector<cli::aggregate_row> sm;
    if (!o.analytic_csv.empty() || !o.sim_csv.empty()) {
        if (o.analytic_csv.empty() || o.sim_csv.empty())
            throw config_error("compare needs both --analytic-csv and --sim-csv, or neither");
        std::ifstream a(o.analytic_csv);
        std::ifstream b(o.sim_csv);
        if (!a || !b)
            throw config_error("cannot open compare inputs");
        an = cli::read_analytic_csv(a);
        sm = cli::read_aggregate_csv(b);
    } else {
        an = cli::cmd_analytic(cfg, cfg.dmax_grid);
        sm = cli::cmd_simulate(cfg, cfg.dmax_grid).aggregates;
    }
    const auto rep = cli::cmd_compare(an, sm);
    {
        auto os = s.output("compare.csv");
        cli::write_compare_csv(os, rep);
    }
    s.finish(rep.all_covered ? "ok" : "gate_failed");
    for (const auto& p : rep.points) {
        std::cout << "d_max=" << p.d_max << " eff " << p.eff_sim << " vs " << p.eff_analytic
                  << (p.eff_covered ? " covered" : " OUTSIDE CI") << " | power " << p.power_sim << " vs "
                  << p.power_analytic << (p.power_covered ? " covered" : " OUTSIDE CI") << '\n';
    }
    std::cout << "max relative deviation: efficiency " << rep.max_eff_rel_dev << ", power " << rep.max_power_rel_dev
              << '\n';
    return rep.all_covered ? 0 : 2;
}

int run_optimize(const options& o)
{
    const auto cfg = resolve(o);
    search_interval iv = cfg.opt_interval;
    if (!o.interval.empty()) {
        const auto parts = d2doff::detail::split_colon(o.interval, 0);
        if (parts.size() != 2)
            throw config_error("--interval must be lo:hi");
        iv = {parts[0], parts[1]};
    }
    session s("optimize", cfg, o.out_dir);
    const auto r = cli::cmd_optimize(cfg, iv);
    {
        auto os = s.output("optimize.csv");
        cli::write_optimize_csv(os, r);
    }
    s.finish("ok");
    std::cout << "d_max_opt=" << r.d_opt << " m" << (r.at_boundary ? " (at interval boundary)" : "")
              << " power=" << r.power_opt << " mW efficiency=" << r.eff_opt << '\n'
              << "at d_max=" << r.d_ref << ": efficiency=" << r.eff_ref << " power=" << r.power_ref
              << " mW, efficiency given up=" << r.eff_sacrifice << '\n';
    return 0;
}

int run_oracle(const options& o)
{
    const auto cfg = resolve(o);
    session s("oracle", cfg, o.out_dir);
    const auto rows = cli::cmd_oracle(cfg, cfg.master_seed);
    {
        auto os = s.output("oracle.csv");
        cli::write_oracle_csv(os, rows);
    }
    s.finish("ok");
    for (const auto& r : rows)
        std::cout << r.name << ": " << r.estimate.value << " +/- " << r.estimate.std_error << " (reference "
                  << r.reference << ")" << (r.estimate.flagged ? " FLAGGED" : "") << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"D2D offloading model, simulator and range optimizer"};
    app.require_subcommand(1);
    options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "INI file applied on top of the preset")->check(CLI::ExistingFile);
        sub->add_option("--preset", o.preset, "paper or desk")->check(CLI::IsMember({"paper", "desk"}));
        sub->add_option("--out", o.out_dir, "output directory");
        sub->add_option("--seed", o.seed, "master seed");
        sub->add_option("--dmax-grid", o.grid, "a:b:step, a single value, or empty");
        sub->add_option("--replications", o.replications, "replications per grid point");
        sub->add_option("--workers", o.workers, "worker threads (0: all cores)");
    };

    auto* an = app.add_subcommand("analytic", "offloading probability and mean power over the d_max grid");
    common(an);
    auto* sm = app.add_subcommand("simulate", "replicated simulation over the d_max grid");
    common(sm);
    sm->add_flag("--records", o.records, "also write every delivery");
    auto* cp = app.add_subcommand("compare", "simulation against the model; exit 2 if a point leaves its CI");
    common(cp);
    cp->add_option("--analytic-csv", o.analytic_csv, "analytic.csv from a previous run");
    cp->add_option("--sim-csv", o.sim_csv, "sim_aggregate.csv from a previous run");
    auto* op = app.add_subcommand("optimize", "energy-optimal d_max");
    common(op);
    op->add_option("--interval", o.interval, "lo:hi search interval");
    auto* orc = app.add_subcommand("oracle", "Monte Carlo reference values");
    common(orc);
    orc->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*an) return run_analytic(o);
        if (*sm) return run_simulate(o);
        if (*cp) return run_compare(o);
        if (*op) return run_optimize(o);
        if (*orc) return run_oracle(o);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const domain_error& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
