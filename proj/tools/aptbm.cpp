// Command-line front end for the link-level simulator: single experiments,
// parameter sweeps, PA characterization, and convergence traces.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aptbm/config.hpp"
#include "aptbm/sim.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string method;
    int mo = 0;
    double ibo_db = std::numeric_limits<double>::quiet_NaN();
    double pin_dbm = std::numeric_limits<double>::quiet_NaN();
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    long trials = 0;
    int k_iters = 0;
    long long seed = -1;
    std::string output;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config file (INI)");
    cmd->add_option("--method", o.method, "none|baseline|pc-baseline|proposed");
    cmd->add_option("--mo", o.mo, "modulation order (16, 32, 64)");
    cmd->add_option("--ibo", o.ibo_db, "input back-off in dB");
    cmd->add_option("--pin", o.pin_dbm, "PA input power in dBm (alternative to --ibo)");
    cmd->add_option("--snr", o.snr_db, "symbol SNR in dB");
    cmd->add_option("--trials", o.trials, "Monte Carlo trials (blocks)");
    cmd->add_option("--k", o.k_iters, "fine-stage iteration count");
    cmd->add_option("--seed", o.seed, "RNG seed (overrides config)");
    cmd->add_option("--output", o.output, "output CSV path");
}

aptbm::ExperimentConfig build_config(const CommonOpts& o) {
    aptbm::ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = aptbm::parse_config_file(o.config_path);
    if (!o.method.empty()) cfg.method = aptbm::method_from_name(o.method);
    if (o.mo) {
        cfg.mo = o.mo;
        cfg.m = cfg.l = 0;
    }
    if (std::isfinite(o.ibo_db)) {
        cfg.ibo_db = o.ibo_db;
        cfg.pin_dbm = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(o.pin_dbm)) {
        cfg.pin_dbm = o.pin_dbm;
        cfg.ibo_db = std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isfinite(o.snr_db)) cfg.snr_db = o.snr_db;
    if (o.trials > 0) cfg.trials = o.trials;
    if (o.k_iters > 0) cfg.k_iters = o.k_iters;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.output.empty()) cfg.output = o.output;
    return cfg;
}

/// Parses "lo:hi:step" or a comma-separated list.
std::vector<double> parse_values(const std::string& spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        double lo, hi, step;
        if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0) {
            throw std::invalid_argument("bad range spec '" + spec + "', expected lo:hi:step");
        }
        for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
    } else {
        std::string item;
        std::istringstream ss(spec);
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) out.push_back(std::stod(item));
        }
    }
    if (out.empty()) throw std::invalid_argument("empty value list '" + spec + "'");
    return out;
}

void print_records(const aptbm::ExperimentConfig& cfg,
                   const std::vector<aptbm::SweepRecord>& records) {
    aptbm::write_csv(std::cout, cfg, records);
    if (!cfg.output.empty()) {
        aptbm::write_csv_file(cfg.output, cfg, records);
        std::cerr << "wrote " << cfg.output << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"link-level simulator for block modulation over nonlinear PAs"};
    app.require_subcommand(1);

    CommonOpts sim_opts;
    auto* sim_cmd = app.add_subcommand("simulate", "run a single Monte Carlo experiment");
    add_common(sim_cmd, sim_opts);

    CommonOpts sweep_opts;
    std::string axis = "ibo";
    std::string values_spec;
    auto* sweep_cmd = app.add_subcommand("sweep", "sweep one axis and emit a CSV");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--axis", axis, "ibo|snr|k")->required();
    sweep_cmd->add_option("--values", values_spec, "lo:hi:step or comma list")->required();

    CommonOpts conv_opts;
    auto* conv_cmd = app.add_subcommand("convergence", "MSE trace of the two-stage method");
    add_common(conv_cmd, conv_opts);

    std::string pa_table_in, curves_out, table_out, grid_spec = "-40:10:0.5";
    auto* pa_cmd = app.add_subcommand("pa-characterize", "emit AM-AM/AM-PM curves and tables");
    pa_cmd->add_option("--table", pa_table_in, "measured PA curve file to characterize");
    pa_cmd->add_option("--grid", grid_spec, "input power grid in dBm, lo:hi:step");
    pa_cmd->add_option("--output", curves_out, "curve CSV path");
    pa_cmd->add_option("--table-out", table_out, "AM-PM lookup table output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_cmd->parsed()) {
            const auto cfg = build_config(sim_opts);
            print_records(cfg, {aptbm::run_experiment(cfg)});
        } else if (sweep_cmd->parsed()) {
            const auto cfg = build_config(sweep_opts);
            const auto values = parse_values(values_spec);
            print_records(cfg, aptbm::run_sweep(cfg, axis, values));
        } else if (conv_cmd->parsed()) {
            auto cfg = build_config(conv_opts);
            if (conv_opts.k_iters == 0) cfg.k_iters = 5;
            cfg.method = aptbm::Method::Proposed;
            const auto rec = aptbm::run_experiment(cfg);
            std::ostringstream trace;
            trace << "stage,mse\ncoarse," << rec.mse_coarse << "\n";
            for (std::size_t i = 0; i < rec.mse_fine.size(); ++i) {
                trace << "fine-" << (i + 1) << ',' << rec.mse_fine[i] << "\n";
            }
            std::cout << trace.str();
            if (!cfg.output.empty()) {
                std::ofstream f(cfg.output, std::ios::binary);
                if (!f) throw std::runtime_error("cannot open " + cfg.output);
                f << trace.str();
            }
        } else if (pa_cmd->parsed()) {
            aptbm::PaModel model = aptbm::RappParams{};
            if (!pa_table_in.empty()) model = aptbm::load_pa_table_file(pa_table_in);
            const auto grid = parse_values(grid_spec);

            std::ostringstream curves;
            curves << "pin_dbm,pout_dbm,gain_db,phase_deg\n";
            std::ostringstream table;
            table << "# AM-PM lookup table\npin_dbm gain_db phase_deg\n";
            for (const double pin : grid) {
                const double ain = std::sqrt(aptbm::dbm_to_mw(pin));
                const aptbm::cplx out = aptbm::pa_apply(aptbm::cplx(ain, 0.0), model);
                const double pout = aptbm::mw_to_dbm(std::norm(out));
                const double gain_db = 20.0 * std::log10(std::abs(out) / ain);
                const double phase_deg = std::arg(out) * 180.0 / aptbm::pi;
                char row[128];
                std::snprintf(row, sizeof(row), "%.6g,%.6g,%.6g,%.6g\n", pin, pout, gain_db,
                              phase_deg);
                curves << row;
                std::snprintf(row, sizeof(row), "%.6g %.6g %.6g\n", pin, gain_db, phase_deg);
                table << row;
            }
            std::cout << curves.str();
            if (std::holds_alternative<aptbm::RappParams>(model)) {
                std::cerr << "input saturation power: "
                          << aptbm::input_saturation_power_dbm(model) << " dBm\n";
            }
            if (!curves_out.empty()) {
                std::ofstream f(curves_out, std::ios::binary);
                if (!f) throw std::runtime_error("cannot open " + curves_out);
                f << curves.str();
            }
            if (!table_out.empty()) {
                std::ofstream f(table_out, std::ios::binary);
                if (!f) throw std::runtime_error("cannot open " + table_out);
                f << table.str();
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
