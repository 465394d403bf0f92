#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "aptbm/alphabet.hpp"

// Memoryless complex-envelope PA behavioral models and the operating-point
// arithmetic around them (IBO, PAE, saturation, AM-PM lookup). Amplitudes are
// in sqrt-milliwatts: power in mW = |x|^2, dBm = 10*log10(|x|^2).

namespace aptbm {

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// Modified Rapp parameters. Defaults are the standard mmWave fit used by the
/// simulation profile. The AM-PM polynomial is degree-valued.
struct RappParams {
    double g0 = 4.65;      // small-signal gain
    double a_sat = 0.58;   // output saturation amplitude, sqrt-mW
    double alpha0 = 2560.0;
    double beta0 = 0.114;
    double q0 = 0.81;
    double q1 = 2.4;
    double q2 = 2.3;
};

struct SoftLimiterParams {
    double gain = 1.0;
    double a_clip = 1.0;  // output clip amplitude, sqrt-mW
};

struct IdealLinearParams {
    double gain = 1.0;
};

/// Measured AM-AM / AM-PM curves over a strictly increasing input-amplitude grid.
struct PaTable {
    std::vector<double> ain;        // input amplitude, sqrt-mW
    std::vector<double> gain;       // linear amplitude gain at ain
    std::vector<double> phase_rad;  // phase shift at ain
};

using PaModel = std::variant<RappParams, SoftLimiterParams, IdealLinearParams, PaTable>;

inline double rapp_am_am(const RappParams& p, double a) {
    const double num = p.g0 * a;
    if (num <= 0.0) return 0.0;
    const double u = num / p.a_sat;
    return num / std::pow(1.0 + std::pow(u, 2.0 * p.q0), 1.0 / (2.0 * p.q0));
}

/// AM-PM phase shift in radians at input amplitude a.
inline double rapp_am_pm(const RappParams& p, double a) {
    if (a <= 0.0) return 0.0;
    const double deg = p.alpha0 * std::pow(a, p.q1) / (1.0 + std::pow(a / p.beta0, p.q2));
    return deg * pi / 180.0;
}

namespace detail {

inline std::size_t upper_index(const std::vector<double>& grid, double x) {
    return static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), x) - grid.begin());
}

/// Piecewise-linear interpolation with end clamping.
inline double interp_clamped(const std::vector<double>& xs, const std::vector<double>& ys,
                             double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const std::size_t hi = upper_index(xs, x);
    const std::size_t lo = hi - 1;
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

inline cplx pa_apply(cplx x, const PaModel& model) {
    const double a = std::abs(x);
    if (a == 0.0) return {};
    return std::visit(
        detail::overloaded{
            [&](const RappParams& p) {
                return std::polar(rapp_am_am(p, a), std::arg(x) + rapp_am_pm(p, a));
            },
            [&](const SoftLimiterParams& p) {
                return std::polar(std::min(p.gain * a, p.a_clip), std::arg(x));
            },
            [&](const IdealLinearParams& p) { return p.gain * x; },
            [&](const PaTable& t) {
                const double g = detail::interp_clamped(t.ain, t.gain, a);
                const double dphi = detail::interp_clamped(t.ain, t.phase_rad, a);
                return std::polar(g * a, std::arg(x) + dphi);
            },
        },
        model);
}

inline std::vector<cplx> pa_apply(const std::vector<cplx>& in, const PaModel& model) {
    std::vector<cplx> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = pa_apply(in[i], model);
    return out;
}

inline double small_signal_gain(const PaModel& model) {
    return std::visit(detail::overloaded{
                          [](const RappParams& p) { return p.g0; },
                          [](const SoftLimiterParams& p) { return p.gain; },
                          [](const IdealLinearParams& p) { return p.gain; },
                          [](const PaTable& t) { return t.gain.front(); },
                      },
                      model);
}

/// Maximum output power in mW, when the model has a saturation level.
inline std::optional<double> max_output_power_mw(const PaModel& model) {
    if (const auto* p = std::get_if<RappParams>(&model)) return p->a_sat * p->a_sat;
    if (const auto* p = std::get_if<SoftLimiterParams>(&model)) return p->a_clip * p->a_clip;
    return std::nullopt;
}

/// Input power (dBm) at which the AM-AM output reaches 95% of a_sat, solved by
/// bisection. Only defined for the modified Rapp model; with the default
/// parameters this lands at -5.0 dBm.
inline double input_saturation_power_dbm(const PaModel& model) {
    const auto* p = std::get_if<RappParams>(&model);
    if (!p) {
        throw std::invalid_argument(
            "input_saturation_power_dbm: only defined for the modified Rapp model");
    }
    const double target = 0.95 * p->a_sat;
    double lo = 0.0, hi = 1.0;
    while (rapp_am_am(*p, hi) < target) hi *= 2.0;
    while (hi - lo > 1e-9) {
        const double mid = 0.5 * (lo + hi);
        (rapp_am_am(*p, mid) < target ? lo : hi) = mid;
    }
    const double a = 0.5 * (lo + hi);
    return mw_to_dbm(a * a);
}

inline double ibo_db(double p_in_mw, double p_sat_in_mw) {
    if (!(p_in_mw > 0.0) || !(p_sat_in_mw > 0.0)) {
        throw std::invalid_argument("ibo_db: powers must be positive");
    }
    return 10.0 * std::log10(p_sat_in_mw / p_in_mw);
}

/// Class-A efficiency model: eta_max * P_out / P_max.
inline double pae(double p_out_mw, double p_max_mw, double eta_max = 0.5) {
    if (!(p_out_mw > 0.0) || p_out_mw > p_max_mw) {
        throw std::invalid_argument("pae: need 0 < p_out <= p_max");
    }
    if (!(eta_max > 0.0) || eta_max > 1.0) throw std::invalid_argument("pae: bad eta_max");
    return eta_max * p_out_mw / p_max_mw;
}

/// Phase-shift lookup table over input power in dBm, as measured offline.
struct AmPmTable {
    std::vector<double> p_dbm;
    std::vector<double> phase_rad;
};

inline AmPmTable build_ampm_table(const PaModel& model, const std::vector<double>& grid_dbm) {
    if (grid_dbm.empty()) throw std::invalid_argument("build_ampm_table: empty grid");
    for (std::size_t i = 1; i < grid_dbm.size(); ++i) {
        if (!(grid_dbm[i] > grid_dbm[i - 1])) {
            throw std::invalid_argument("build_ampm_table: grid must be strictly increasing");
        }
    }
    AmPmTable t;
    t.p_dbm = grid_dbm;
    t.phase_rad.resize(grid_dbm.size());
    for (std::size_t i = 0; i < grid_dbm.size(); ++i) {
        const double a = std::sqrt(dbm_to_mw(grid_dbm[i]));
        // Phase shift measured the way a bench would: drive a real-valued tone
        // and read the output angle.
        t.phase_rad[i] = std::arg(pa_apply(cplx(a, 0.0), model));
    }
    return t;
}

inline AmPmTable default_ampm_table(const PaModel& model) {
    std::vector<double> grid;
    for (double p = -80.0; p <= 10.0 + 1e-9; p += 0.5) grid.push_back(p);
    return build_ampm_table(model, grid);
}

inline double ampm_lookup(const AmPmTable& t, double p_dbm) {
    if (t.p_dbm.empty()) throw std::invalid_argument("ampm_lookup: empty table");
    return detail::interp_clamped(t.p_dbm, t.phase_rad, p_dbm);
}

/// Result of scaling a block sequence to a target operating point.
struct ScaledBlocks {
    std::vector<Block> blocks;
    double block_power = 0.0;  // P = 2 * p_in
};

/// Scales all symbols by one real factor so the average per-symbol power
/// equals p_in = p_sat_in * 10^(-ibo/10); returns the implied block power.
inline ScaledBlocks scale_to_ibo(const std::vector<Block>& blocks, double target_ibo_db,
                                 double p_sat_in_mw) {
    if (blocks.empty()) throw std::invalid_argument("scale_to_ibo: empty sequence");
    if (!std::isfinite(target_ibo_db)) throw std::invalid_argument("scale_to_ibo: bad IBO");
    const double p_in = p_sat_in_mw * std::pow(10.0, -target_ibo_db / 10.0);
    double mean_power = 0.0;
    for (const auto& b : blocks) mean_power += std::norm(b.a) + std::norm(b.b);
    mean_power /= 2.0 * static_cast<double>(blocks.size());
    const double factor = std::sqrt(p_in / mean_power);
    ScaledBlocks out;
    out.blocks.reserve(blocks.size());
    for (const auto& b : blocks) out.blocks.push_back({factor * b.a, factor * b.b});
    out.block_power = 2.0 * p_in;
    return out;
}

/// Loads a measured PA curve file. The first non-comment line is a header
/// naming the columns; supported names: "ain" or "pin_dbm" for the input,
/// "aout" or "gain_db" for the output, optional "phase_deg". Lines starting
/// with '#' are comments.
inline PaTable load_pa_table(std::istream& in) {
    std::string line;
    std::vector<std::string> columns;
    PaTable t;
    while (std::getline(in, line)) {
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos || line[start] == '#') continue;
        std::istringstream row(line);
        if (columns.empty()) {
            std::string name;
            while (row >> name) columns.push_back(name);
            if (columns.size() < 2 || columns.size() > 3) {
                throw std::invalid_argument("pa table: header must name 2 or 3 columns");
            }
            continue;
        }
        std::vector<double> vals(columns.size());
        for (double& v : vals) {
            if (!(row >> v)) throw std::invalid_argument("pa table: short row");
        }
        double ain = 0.0, gain = 0.0, phase = 0.0;
        double aout = -1.0;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const std::string& c = columns[i];
            const double v = vals[i];
            if (c == "ain") {
                ain = v;
            } else if (c == "pin_dbm") {
                ain = std::sqrt(dbm_to_mw(v));
            } else if (c == "aout") {
                aout = v;
            } else if (c == "gain_db") {
                gain = std::pow(10.0, v / 20.0);
            } else if (c == "phase_deg") {
                phase = v * pi / 180.0;
            } else {
                throw std::invalid_argument("pa table: unknown column '" + c + "'");
            }
        }
        if (!(ain > 0.0)) throw std::invalid_argument("pa table: input amplitude must be positive");
        if (aout >= 0.0) gain = aout / ain;
        t.ain.push_back(ain);
        t.gain.push_back(gain);
        t.phase_rad.push_back(phase);
    }
    if (t.ain.size() < 2) throw std::invalid_argument("pa table: need at least 2 rows");
    for (std::size_t i = 1; i < t.ain.size(); ++i) {
        if (!(t.ain[i] > t.ain[i - 1])) {
            throw std::invalid_argument("pa table: input grid must be strictly increasing");
        }
    }
    return t;
}

inline PaTable load_pa_table_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("pa table: cannot open " + path);
    return load_pa_table(f);
}

}  // namespace aptbm
