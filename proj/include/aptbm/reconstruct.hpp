#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aptbm/alphabet.hpp"
#include "aptbm/pa.hpp"

// Signal reconstruction for distorted blocks. Three algorithms share this
// module:
//
//  * baseline_reconstruct     - heuristic amplitude recombination plus a
//                               batch-average phase-shift correction;
//  * pc_baseline_reconstruct  - the same, preceded by table-based phase
//                               compensation;
//  * two_stage_reconstruct    - coarse stage (phase compensation + amplitude
//                               recombination) followed by a per-block
//                               constrained least-squares refinement solved as
//                               a trust-region subproblem in closed form.

namespace aptbm {

enum class PhaseSign { Plus, Minus };

/// Coarse-stage settings: the AM-PM lookup table, the operating point it is
/// queried at, and the sign applied to the corrected phase when recombining.
struct CoarseConfig {
    AmPmTable ampm;
    double avg_input_power_dbm = 0.0;
    PhaseSign phase_sign = PhaseSign::Plus;
};

/// Fine-stage settings. tol and amp_floor of 0 select the defaults
/// 1e-8*sqrt(P) and 1e-6*sqrt(P).
struct FineConfig {
    int k_iters = 2;
    double tol = 0.0;
    double amp_floor = 0.0;
    bool record_iterates = false;
};

struct ReconResult {
    std::vector<Block> blocks;
    std::vector<InitialPhase> phase_estimates;  // empty for the baseline paths
    std::vector<double> trace;  // MSE after coarse, then after each fine iteration
    double phase_shift_estimate = 0.0;
    int clamped_blocks = 0;
    int degenerate_phase_estimates = 0;
    int degenerate_trs = 0;
};

namespace detail {

/// Amplitude recombination shared by the baseline and the coarse stage:
/// xi weights the received amplitude against the amplitude implied by the
/// constant block power, favoring the lower-amplitude (less compressed)
/// symbol. sqrt arguments pushed negative by distortion are clamped at zero.
struct AmpRecon {
    double amp_a = 0.0, amp_b = 0.0, xi = 0.5;
    bool clamped = false;
};

inline AmpRecon recombine_amplitudes(double abs_a, double abs_b, double p, double mu,
                                     double floor) {
    const double fa = std::max(abs_a, floor);
    const double fb = std::max(abs_b, floor);
    const double pa = fa * fa, pb = fb * fb;
    const double pd = (pa - pb) / (pa + pb);
    const double xi = 1.0 / (1.0 + std::exp(mu * std::tan(0.5 * pi * pd)));
    AmpRecon r;
    r.xi = xi;
    const double ca = p - abs_b * abs_b;
    const double cb = p - abs_a * abs_a;
    r.clamped = ca < 0.0 || cb < 0.0;
    const double root_a = std::sqrt(std::max(ca, 0.0));
    const double root_b = std::sqrt(std::max(cb, 0.0));
    r.amp_a = xi * abs_a + (1.0 - xi) * root_a;
    r.amp_b = xi * root_b + (1.0 - xi) * abs_b;
    return r;
}

}  // namespace detail

/// Heuristic reconstruction: xi-weighted amplitude recombination and a phase
/// correction from the batch-average phase-sum shift, estimated against the
/// M-PSK phase grid. Shifts beyond +-pi/m alias, which is this algorithm's
/// known weakness under strong distortion or large m.
inline ReconResult baseline_reconstruct(const std::vector<Block>& in, double p, double mu = 1.0,
                                        int m = 4) {
    if (in.empty()) throw std::invalid_argument("baseline_reconstruct: empty input");
    if (!(mu > 0.0)) throw std::invalid_argument("baseline_reconstruct: mu must be positive");
    if (m < 1) throw std::invalid_argument("baseline_reconstruct: bad m");
    const double floor = 1e-6 * std::sqrt(p);
    // Each block's wrapped phase sum is referenced to the M-PSK phase step:
    // valid sums and the +-2*pi wraps of a principal-valued arg both vanish
    // modulo 2*pi/m, so clean blocks contribute exactly zero and the batch
    // mean implicitly carries the alphabet reference 2*pi*(m-1)/m. Shifts
    // beyond +-pi/m alias, which is this estimator's known ambiguity: it
    // bites under strong distortion or large m.
    const double period = two_pi / m;
    double shift_acc = 0.0;
    for (const auto& blk : in) {
        const double s = std::arg(blk.a) + std::arg(blk.b);
        shift_acc += fold_centered(s, period);
    }
    const double phi_s = shift_acc / static_cast<double>(in.size());

    ReconResult out;
    out.phase_shift_estimate = phi_s;
    out.blocks.reserve(in.size());
    for (const auto& blk : in) {
        const auto amp = detail::recombine_amplitudes(std::abs(blk.a), std::abs(blk.b), p, mu, floor);
        out.clamped_blocks += amp.clamped;
        const double wa = 0.75 - 0.5 * amp.xi;
        const double wb = 0.25 + 0.5 * amp.xi;
        out.blocks.push_back({std::polar(amp.amp_a, std::arg(blk.a) - wa * phi_s),
                              std::polar(amp.amp_b, std::arg(blk.b) - wb * phi_s)});
    }
    return out;
}

namespace detail {

struct CoarseOut {
    Block block;
    bool clamped = false;
};

inline CoarseOut coarse_block(const Block& blk, double p, double comp_angle, PhaseSign sign,
                              double floor) {
    const auto amp = recombine_amplitudes(std::abs(blk.a), std::abs(blk.b), p, 1.0, floor);
    const double psi_a = std::arg(blk.a) - comp_angle;
    const double psi_b = std::arg(blk.b) - comp_angle;
    const double s = sign == PhaseSign::Plus ? 1.0 : -1.0;
    return {{std::polar(amp.amp_a, s * psi_a), std::polar(amp.amp_b, s * psi_b)}, amp.clamped};
}

}  // namespace detail

/// Coarse stage: per-component phase compensation from the AM-PM table at the
/// average input power, then the xi-weighted amplitude recombination.
inline std::vector<Block> coarse_reconstruct(const std::vector<Block>& in, double p,
                                             const CoarseConfig& cfg, int* clamped = nullptr) {
    if (in.empty()) throw std::invalid_argument("coarse_reconstruct: empty input");
    const double comp = ampm_lookup(cfg.ampm, cfg.avg_input_power_dbm);
    const double floor = 1e-6 * std::sqrt(p);
    std::vector<Block> out;
    out.reserve(in.size());
    int nclamped = 0;
    for (const auto& blk : in) {
        const auto c = detail::coarse_block(blk, p, comp, cfg.phase_sign, floor);
        nclamped += c.clamped;
        out.push_back(c.block);
    }
    if (clamped) *clamped = nclamped;
    return out;
}

/// Phase compensation followed by the full baseline algorithm.
inline ReconResult pc_baseline_reconstruct(const std::vector<Block>& in, double p,
                                           const CoarseConfig& cfg, double mu = 1.0, int m = 4) {
    if (in.empty()) throw std::invalid_argument("pc_baseline_reconstruct: empty input");
    const double comp = ampm_lookup(cfg.ampm, cfg.avg_input_power_dbm);
    const double s = cfg.phase_sign == PhaseSign::Plus ? 1.0 : -1.0;
    std::vector<Block> compensated;
    compensated.reserve(in.size());
    for (const auto& blk : in) {
        compensated.push_back({std::polar(std::abs(blk.a), s * (std::arg(blk.a) - comp)),
                               std::polar(std::abs(blk.b), s * (std::arg(blk.b) - comp))});
    }
    return baseline_reconstruct(compensated, p, mu, m);
}

/// Nearest alphabet phase by circular distance; ties break toward the lower index.
inline InitialPhase quantize_phase(double angle, const std::vector<InitialPhase>& phases) {
    if (phases.empty()) throw std::invalid_argument("quantize_phase: empty alphabet");
    InitialPhase best = phases.front();
    double best_d = std::abs(fold_centered(angle - best.value, two_pi));
    for (std::size_t i = 1; i < phases.size(); ++i) {
        const double d = std::abs(fold_centered(angle - phases[i].value, two_pi));
        if (d < best_d) {
            best_d = d;
            best = phases[i];
        }
    }
    return best;
}

/// Direction of the unit-normalized symbol sum; the raw initial-phase
/// estimate. Immune to phase wrap-around, unlike arithmetic averaging of the
/// two angles. Returns nullopt when the symbols are antipodal (or an
/// amplitude is at the floor).
inline std::optional<double> raw_phase_estimate(const Block& blk, double amp_floor = 0.0) {
    const double aa = std::abs(blk.a);
    const double ab = std::abs(blk.b);
    if (aa <= amp_floor || ab <= amp_floor) return std::nullopt;
    const cplx sum = blk.a / aa + blk.b / ab;
    if (std::abs(sum) < 1e-9) return std::nullopt;
    return std::arg(sum);
}

/// Raw estimate quantized to the alphabet. On a degenerate raw estimate the
/// caller applies fallback_phase_angle.
inline std::optional<InitialPhase> estimate_initial_phase(
    const Block& blk, const std::vector<InitialPhase>& phases, double amp_floor = 0.0) {
    const auto raw = raw_phase_estimate(blk, amp_floor);
    if (!raw) return std::nullopt;
    return quantize_phase(*raw, phases);
}

/// Documented fallback for antipodal symbols: the circular average of the
/// first angle with the second angle rotated by pi.
inline double fallback_phase_angle(const Block& blk) {
    return std::arg(std::polar(1.0, std::arg(blk.a)) + std::polar(1.0, std::arg(blk.b) + pi));
}

struct TrsSolution {
    std::array<double, 4> z{};
    double lambda = 0.0;
    bool degenerate = false;
};

/// Closed-form solution of
///     minimize ||w - z||^2  s.t.  z'z = p,  z'u = 0,
/// via an orthonormal null-space basis of u built from a Householder
/// reflector: z = (1-lambda)^{-1} Uperp Uperp' w with
/// lambda = 1 - sqrt(w' Uperp Uperp' w / p). Equivalently z is the projection
/// of w onto the hyperplane orthogonal to u, rescaled to norm sqrt(p).
/// Degenerate when w is (numerically) parallel to u.
inline TrsSolution trs_solve(const std::array<double, 4>& w, const std::array<double, 4>& u,
                             double p) {
    if (!(p > 0.0)) throw std::invalid_argument("trs_solve: p must be positive");
    double nu2 = 0.0, nw2 = 0.0;
    for (int i = 0; i < 4; ++i) {
        nu2 += u[i] * u[i];
        nw2 += w[i] * w[i];
    }
    if (!(nu2 > 0.0)) throw std::invalid_argument("trs_solve: u must be nonzero");
    const double inv_nu = 1.0 / std::sqrt(nu2);

    // Householder vector q mapping u/|u| onto -sign(v0)*e1; columns 2..4 of
    // I - 2qq' then form an orthonormal basis Uperp of the null space of u.
    std::array<double, 4> q{};
    for (int i = 0; i < 4; ++i) q[i] = u[i] * inv_nu;
    const double sgn = q[0] >= 0.0 ? 1.0 : -1.0;
    q[0] += sgn;
    double nq = 0.0;
    for (int i = 0; i < 4; ++i) nq += q[i] * q[i];
    nq = std::sqrt(nq);
    for (int i = 0; i < 4; ++i) q[i] /= nq;

    double qw = 0.0;
    for (int i = 0; i < 4; ++i) qw += q[i] * w[i];

    // e = Uperp' w, with Uperp columns (I - 2qq') e_k for k = 1..3.
    std::array<double, 3> e{};
    double ee = 0.0;
    for (int k = 0; k < 3; ++k) {
        e[k] = w[k + 1] - 2.0 * q[k + 1] * qw;
        ee += e[k] * e[k];
    }
    if (!(ee > 1e-24 * nw2) || ee == 0.0) return {.z = {}, .lambda = 0.0, .degenerate = true};

    TrsSolution sol;
    sol.lambda = 1.0 - std::sqrt(ee / p);
    const double scale = 1.0 / (1.0 - sol.lambda);
    double qe = 0.0;
    for (int k = 0; k < 3; ++k) qe += q[k + 1] * e[k];
    sol.z[0] = scale * (-2.0 * q[0] * qe);
    for (int k = 0; k < 3; ++k) sol.z[k + 1] = scale * (e[k] - 2.0 * q[k + 1] * qe);
    return sol;
}

struct FineResult {
    Block block;
    int iterations = 0;
    bool degenerate = false;
    std::vector<Block> iterates;  // filled when FineConfig::record_iterates
};

/// Fine stage for one block: iterate fixing the constraint direction from the
/// current amplitudes and the estimated phase, solve the trust-region
/// subproblem in closed form, and reassemble. Stops early when the update
/// norm drops below tol. The output satisfies the power constraint exactly
/// and is orthogonal to the final constraint direction.
inline FineResult fine_reconstruct(const Block& coarse, const InitialPhase& phase_est, double p,
                                   const FineConfig& cfg) {
    if (cfg.k_iters < 1) throw std::invalid_argument("fine_reconstruct: k_iters must be >= 1");
    const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-8 * std::sqrt(p);
    const double floor = cfg.amp_floor > 0.0 ? cfg.amp_floor : 1e-6 * std::sqrt(p);
    const cplx rot = cplx(0.0, -1.0) * std::polar(1.0, phase_est.value);  // -j e^{j phi}

    FineResult res;
    Block c = coarse;
    for (int k = 0; k < cfg.k_iters; ++k) {
        const double ia = std::max(std::abs(c.a), floor);
        const double ib = std::max(std::abs(c.b), floor);
        const cplx da = rot / ia;
        const cplx db = rot / ib;
        const std::array<double, 4> w{c.a.real(), c.b.real(), c.a.imag(), c.b.imag()};
        const std::array<double, 4> u{da.real(), db.real(), da.imag(), db.imag()};
        const TrsSolution sol = trs_solve(w, u, p);
        if (sol.degenerate) {
            res.degenerate = true;
            break;
        }
        const Block next{{sol.z[0], sol.z[2]}, {sol.z[1], sol.z[3]}};
        const double step = std::sqrt(std::norm(next.a - c.a) + std::norm(next.b - c.b));
        c = next;
        ++res.iterations;
        if (cfg.record_iterates) res.iterates.push_back(c);
        if (step < tol) break;
    }
    res.block = c;
    return res;
}

/// Full two-stage algorithm: coarse reconstruction, initial-phase estimation,
/// then the iterative fine stage, per block. Records the per-block phase
/// estimates for the O(L) demapper. When ground_truth is supplied, the trace
/// holds the MSE after the coarse stage and after each fine iteration.
inline ReconResult two_stage_reconstruct(const std::vector<Block>& in, double p,
                                         const CoarseConfig& coarse_cfg,
                                         const FineConfig& fine_cfg, const Alphabet& alphabet,
                                         const std::vector<Block>* ground_truth = nullptr) {
    if (in.empty()) throw std::invalid_argument("two_stage_reconstruct: empty input");
    if (ground_truth && ground_truth->size() != in.size()) {
        throw std::invalid_argument("two_stage_reconstruct: ground truth size mismatch");
    }
    const double comp = ampm_lookup(coarse_cfg.ampm, coarse_cfg.avg_input_power_dbm);
    const double floor = fine_cfg.amp_floor > 0.0 ? fine_cfg.amp_floor : 1e-6 * std::sqrt(p);

    ReconResult out;
    out.blocks.reserve(in.size());
    out.phase_estimates.reserve(in.size());
    std::vector<double> mse_sums;
    if (ground_truth) mse_sums.assign(static_cast<std::size_t>(fine_cfg.k_iters) + 1, 0.0);

    FineConfig fc = fine_cfg;
    fc.record_iterates = fine_cfg.record_iterates || ground_truth != nullptr;

    for (std::size_t n = 0; n < in.size(); ++n) {
        const auto coarse = detail::coarse_block(in[n], p, comp, coarse_cfg.phase_sign, floor);
        out.clamped_blocks += coarse.clamped;

        auto est = estimate_initial_phase(coarse.block, alphabet.phases, floor);
        if (!est) {
            ++out.degenerate_phase_estimates;
            est = quantize_phase(fallback_phase_angle(coarse.block), alphabet.phases);
        }

        const FineResult fine = fine_reconstruct(coarse.block, *est, p, fc);
        out.degenerate_trs += fine.degenerate;

        if (ground_truth) {
            const Block& truth = (*ground_truth)[n];
            auto mse = [&truth](const Block& b) {
                return std::norm(b.a - truth.a) + std::norm(b.b - truth.b);
            };
            mse_sums[0] += mse(coarse.block);
            Block last = coarse.block;
            for (int k = 0; k < fine_cfg.k_iters; ++k) {
                if (k < static_cast<int>(fine.iterates.size())) last = fine.iterates[static_cast<std::size_t>(k)];
                mse_sums[static_cast<std::size_t>(k) + 1] += mse(last);
            }
        }

        out.blocks.push_back(fine.block);
        out.phase_estimates.push_back(*est);
    }

    if (ground_truth) {
        out.trace.resize(mse_sums.size());
        for (std::size_t i = 0; i < mse_sums.size(); ++i) {
            out.trace[i] = mse_sums[i] / static_cast<double>(in.size());
        }
    }
    return out;
}

}  // namespace aptbm
