#pragma once

/**
 * @file estimators.hpp
 * @brief Channel interpolators: least-squares pilot estimates, linear
 *        interpolation, the MMSE family (plain, timing-averaged,
 *        distortion-aware), application of shared S x M weights, and a
 *        complex extreme learning machine baseline.
 */

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofdmce/channel.hpp"
#include "ofdmce/numerics.hpp"
#include "ofdmce/ofdm.hpp"

namespace ofdmce {

/**
 * @brief Per-group interpolation weights, shared by every group of the band.
 *
 * w maps the M pilot-position estimates of a group to its S data-position
 * estimates.
 */
struct LinearEstimator {
    cmat w;  ///< S x M
    bool rank_deficient = false;

    /// Plain-text export: header line `# rows cols`, then one row per line of
    /// `re im` pairs.
    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("LinearEstimator: cannot write " + path);
        out << "# " << w.rows() << " " << w.cols() << "\n";
        out.precision(17);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                if (c) out << " ";
                out << w(r, c).real() << " " << w(r, c).imag();
            }
            out << "\n";
        }
    }

    static LinearEstimator load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("LinearEstimator: cannot open " + path);
        std::string header;
        std::getline(in, header);
        std::istringstream hs(header);
        std::string hash;
        Eigen::Index rows = 0, cols = 0;
        if (!(hs >> hash >> rows >> cols) || hash != "#" || rows <= 0 || cols <= 0)
            throw std::runtime_error("LinearEstimator: malformed header in " + path);
        LinearEstimator est;
        est.w.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                double re, im;
                if (!(in >> re >> im))
                    throw std::runtime_error("LinearEstimator: truncated matrix in " + path);
                est.w(r, c) = cplx(re, im);
            }
        }
        return est;
    }
};

/// Second-order statistics feeding the MMSE family. rel_pilot/rel_data keep
/// the group-relative subcarrier offsets each entry was evaluated at.
struct MmseContext {
    cmat r_dp;         ///< S x M cross correlation
    cmat r_pp;         ///< M x M pilot autocorrelation (unit diagonal)
    double noise_var = 0.0;
    std::vector<int> rel_pilot;
    std::vector<int> rel_data;
    int n_dft = 0;
};

inline MmseContext make_mmse_context(const PowerDelayProfile& profile, const OfdmConfig& cfg,
                                     double noise_var) {
    if (noise_var < 0.0) throw std::invalid_argument("make_mmse_context: negative noise variance");
    const GroupLayout layout = make_group_layout(cfg);
    MmseContext ctx;
    ctx.noise_var = noise_var;
    ctx.rel_pilot = layout.rel_pilot;
    ctx.rel_data = layout.rel_data;
    ctx.n_dft = cfg.n_dft;
    const int s = static_cast<int>(layout.rel_data.size());
    const int m = static_cast<int>(layout.rel_pilot.size());
    ctx.r_dp.resize(s, m);
    ctx.r_pp.resize(m, m);
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < m; ++j)
            ctx.r_dp(i, j) = freq_correlation(profile, layout.rel_data[i] - layout.rel_pilot[j], cfg);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            ctx.r_pp(i, j) = freq_correlation(profile, layout.rel_pilot[i] - layout.rel_pilot[j], cfg);
    return ctx;
}

/// Least-squares estimates at known-symbol positions: element-wise y / x.
inline cvec ls_pilot_estimate(const cvec& y_p, const cvec& x_p) {
    if (y_p.size() != x_p.size()) throw std::invalid_argument("ls_pilot_estimate: length mismatch");
    cvec h(y_p.size());
    for (std::size_t i = 0; i < y_p.size(); ++i) {
        if (std::abs(x_p[i]) == 0.0)
            throw std::invalid_argument("ls_pilot_estimate: zero pilot value");
        h[i] = y_p[i] / x_p[i];
    }
    return h;
}

/// Linear interpolation between the bracketing pilots of every data
/// position. Returns data-position estimates aligned with layout.data.
inline cvec interpolate_linear(const cvec& pilot_est, const GroupLayout& layout) {
    if (pilot_est.size() < 2) throw std::invalid_argument("interpolate_linear: need >= 2 pilots");
    if (static_cast<int>(pilot_est.size()) != static_cast<int>(layout.pilots.size()))
        throw std::invalid_argument("interpolate_linear: pilot count mismatch");
    cvec out(layout.data.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < layout.data.size(); ++i) {
        const int k = layout.data[i];
        while (j + 1 < layout.pilots.size() && layout.pilots[j + 1] < k) ++j;
        const int k0 = layout.pilots[j];
        const int k1 = layout.pilots[j + 1];
        const double t = static_cast<double>(k - k0) / static_cast<double>(k1 - k0);
        out[i] = pilot_est[j] * (1.0 - t) + pilot_est[j + 1] * t;
    }
    return out;
}

/// W = R_dp (R_pp + sigma_n^2 I)^{-1}
inline LinearEstimator mmse_weights(const MmseContext& ctx) {
    const cmat a = ctx.r_pp + ctx.noise_var * cmat::Identity(ctx.r_pp.rows(), ctx.r_pp.cols());
    LinearEstimator est;
    est.w = herm_solve(a, ctx.r_dp.adjoint()).adjoint();
    return est;
}

/**
 * @brief Averaging factor a timing offset uniform over {theta_min, ..., 0}
 *        applies to the correlation at subcarrier separation delta:
 *        E_theta[exp(j 2 pi delta theta / N)], evaluated in closed form as a
 *        geometric sum.
 */
inline cplx sto_average_factor(int delta, int theta_min, int n_dft) {
    if (theta_min > 0) throw std::invalid_argument("sto_average_factor: theta_min must be <= 0");
    const int q = -theta_min + 1;
    if (q == 1) return cplx(1.0, 0.0);
    const double a = 2.0 * kPi * static_cast<double>(delta) / n_dft;
    // sum_{u=0}^{q-1} exp(-j a u) / q
    const cplx den = cplx(1.0, 0.0) - std::polar(1.0, -a);
    if (std::abs(den) < 1e-15) return cplx(1.0, 0.0);  // delta multiple of N
    const cplx num = cplx(1.0, 0.0) - std::polar(1.0, -a * q);
    return num / (den * static_cast<double>(q));
}

/// MMSE weights on timing-averaged correlations: every correlation entry is
/// scaled by the averaging factor of its subcarrier separation.
inline LinearEstimator ammse_weights(const MmseContext& ctx, const ScenarioImpairmentStats& stats) {
    MmseContext avg = ctx;
    const int s = static_cast<int>(ctx.rel_data.size());
    const int m = static_cast<int>(ctx.rel_pilot.size());
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < m; ++j)
            avg.r_dp(i, j) *=
                sto_average_factor(ctx.rel_data[i] - ctx.rel_pilot[j], stats.theta_min, ctx.n_dft);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            avg.r_pp(i, j) *=
                sto_average_factor(ctx.rel_pilot[i] - ctx.rel_pilot[j], stats.theta_min, ctx.n_dft);
    return mmse_weights(avg);
}

/**
 * @brief Monte Carlo calibration of the clipping distortion power: mean
 *        per-bin power of (clipped - unclipped) transmitted frequency-domain
 *        signal over fresh random frames.
 */
inline double clip_distortion_power(const OfdmConfig& cfg, double clip_ratio, int calibration_runs,
                                    Rng& rng) {
    if (calibration_runs <= 0)
        throw std::invalid_argument("clip_distortion_power: calibration_runs must be positive");
    double acc = 0.0;
    std::size_t bins = 0;
    for (int run = 0; run < calibration_runs; ++run) {
        const FrameGrid frame = build_frame(cfg, rng);
        const cvec tx = modulate(frame, cfg);
        const cvec clipped = clip(tx, clip_ratio);
        const auto ref = demodulate(tx, cfg);
        const auto dist = demodulate(clipped, cfg);
        for (std::size_t s = 0; s < ref.size(); ++s) {
            for (int k = 0; k < cfg.k_used; ++k) {
                acc += std::norm(dist[s][k] - ref[s][k]);
                ++bins;
            }
        }
    }
    return acc / static_cast<double>(bins);
}

/// Distortion-aware weights: MMSE with the noise variance inflated by the
/// measured clipping distortion power. (The distortion-unaware variant is
/// mmse_weights itself.)
inline LinearEstimator da_lmmse_weights(const MmseContext& ctx, double sigma_clip_sq) {
    MmseContext aware = ctx;
    aware.noise_var += sigma_clip_sq;
    return mmse_weights(aware);
}

inline LinearEstimator da_lmmse_weights(const MmseContext& ctx, const OfdmConfig& cfg,
                                        double clip_ratio, int calibration_runs, Rng& rng) {
    return da_lmmse_weights(ctx, clip_distortion_power(cfg, clip_ratio, calibration_runs, rng));
}

/// Apply the same per-group weights to every group: given the P
/// pilot-position estimates of one symbol, returns the G*S data-position
/// estimates aligned with layout.data.
inline cvec apply_linear(const LinearEstimator& est, const cvec& pilot_est,
                         const GroupLayout& layout) {
    if (static_cast<int>(pilot_est.size()) != static_cast<int>(layout.pilots.size()))
        throw std::invalid_argument("apply_linear: pilot count mismatch");
    if (est.w.cols() != layout.taps)
        throw std::invalid_argument("apply_linear: weight width does not match the group taps");
    const int s = static_cast<int>(est.w.rows());
    Eigen::VectorXcd x(layout.taps);
    cvec out(static_cast<std::size_t>(layout.groups) * s);
    for (int g = 0; g < layout.groups; ++g) {
        const int base = g * (layout.taps - 1);
        for (int i = 0; i < layout.taps; ++i) x(i) = pilot_est[base + i];
        const Eigen::VectorXcd y = est.w * x;
        for (int i = 0; i < s; ++i) out[static_cast<std::size_t>(g) * s + i] = y(i);
    }
    return out;
}

/// Weights for one group only (column vector of M pilot estimates in, S
/// data estimates out).
inline cvec apply_linear_group(const LinearEstimator& est, const cvec& group_pilot_est) {
    if (est.w.cols() != static_cast<Eigen::Index>(group_pilot_est.size()))
        throw std::invalid_argument("apply_linear_group: dimension mismatch");
    Eigen::VectorXcd x(est.w.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = group_pilot_est[i];
    const Eigen::VectorXcd y = est.w * x;
    return cvec(y.data(), y.data() + y.size());
}

// --- complex extreme learning machine ---

enum class ElmActivation { kAsinhSplit, kIdentity };

/**
 * @brief Frozen random hidden layer plus a least-squares output layer.
 *
 * The hidden weights and biases are drawn once at training time and never
 * updated; only the output weights are fitted.
 */
struct ElmEstimator {
    cmat input_weights;           ///< L x M
    Eigen::VectorXcd biases;      ///< L
    cmat output_weights;          ///< S x L
    ElmActivation activation = ElmActivation::kAsinhSplit;
};

inline cplx elm_activate(cplx z, ElmActivation act) {
    switch (act) {
        case ElmActivation::kIdentity:
            return z;
        case ElmActivation::kAsinhSplit:
        default:
            return cplx(std::asinh(z.real()), std::asinh(z.imag()));
    }
}

inline cmat celm_hidden(const ElmEstimator& est, const cmat& inputs) {
    cmat h = est.input_weights * inputs;
    h.colwise() += est.biases;
    for (Eigen::Index c = 0; c < h.cols(); ++c)
        for (Eigen::Index r = 0; r < h.rows(); ++r) h(r, c) = elm_activate(h(r, c), est.activation);
    return h;
}

/// Train on aligned input/label columns: hidden = act(A x + b) with random
/// frozen A, b; output weights = labels * pinv(hidden).
inline ElmEstimator celm_train_matrices(const cmat& inputs, const cmat& labels, int hidden,
                                        Rng& rng,
                                        ElmActivation act = ElmActivation::kAsinhSplit) {
    if (inputs.cols() != labels.cols())
        throw std::invalid_argument("celm_train: input/label column mismatch");
    if (inputs.cols() <= hidden)
        throw std::invalid_argument("celm_train: need more samples than hidden neurons");
    ElmEstimator est;
    est.activation = act;
    est.input_weights.resize(hidden, inputs.rows());
    for (Eigen::Index r = 0; r < est.input_weights.rows(); ++r)
        for (Eigen::Index c = 0; c < est.input_weights.cols(); ++c)
            est.input_weights(r, c) = rng.cgauss(1.0);
    est.biases.resize(hidden);
    for (Eigen::Index r = 0; r < hidden; ++r) est.biases(r) = rng.cgauss(1.0);
    est.output_weights = labels * pinv(celm_hidden(est, inputs));
    return est;
}

inline cmat celm_apply(const ElmEstimator& est, const cmat& inputs) {
    return est.output_weights * celm_hidden(est, inputs);
}

inline cvec celm_apply(const ElmEstimator& est, const cvec& input) {
    cmat x(input.size(), 1);
    for (std::size_t i = 0; i < input.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = input[i];
    const cmat y = celm_apply(est, x);
    return cvec(y.data(), y.data() + y.rows());
}

}  // namespace ofdmce
