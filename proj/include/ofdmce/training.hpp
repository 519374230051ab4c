#pragma once

/**
 * @file training.hpp
 * @brief Online training-data generation and least-squares weight fitting:
 *        full-band LS estimates, sliding-window sample extraction from them,
 *        and the decision-directed single-symbol loop.
 */

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofdmce/estimators.hpp"
#include "ofdmce/numerics.hpp"
#include "ofdmce/ofdm.hpp"

namespace ofdmce {

/**
 * @brief Aligned input/label columns for fitting an S x M estimator.
 *
 * Inputs are pilot-position LS estimates; labels are either data-position LS
 * estimates (collected online) or true channel responses (simulation only).
 */
struct TrainingSet {
    enum class Labels { kEstimated, kTruth };

    cmat x_i;  ///< M x T inputs
    cmat y_o;  ///< S x T labels
    Labels label_kind = Labels::kEstimated;

    Eigen::Index size() const { return x_i.cols(); }

    /// Plain-text dump: one sample per line, inputs then labels, as `re im`
    /// column pairs.
    void dump(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("TrainingSet: cannot write " + path);
        out << "# inputs=" << x_i.rows() << " labels=" << y_o.rows() << " samples=" << size()
            << " kind=" << (label_kind == Labels::kTruth ? "true" : "estimated") << "\n";
        out.precision(17);
        for (Eigen::Index t = 0; t < size(); ++t) {
            for (Eigen::Index r = 0; r < x_i.rows(); ++r)
                out << x_i(r, t).real() << " " << x_i(r, t).imag() << " ";
            for (Eigen::Index r = 0; r < y_o.rows(); ++r) {
                out << y_o(r, t).real() << " " << y_o(r, t).imag();
                out << (r + 1 < y_o.rows() ? " " : "");
            }
            out << "\n";
        }
    }
};

/// Full-band LS estimate from a symbol whose every subcarrier is known.
inline cvec block_pilot_ls(const cvec& rx_bins, const cvec& known_symbol) {
    return ls_pilot_estimate(rx_bins, known_symbol);
}

/// Number of unit-stride sliding windows a full-band estimate provides:
/// K - (M-1) D^f. Each window spans (M-1) D^f + 1 consecutive subcarriers.
inline int patdg_window_count(const OfdmConfig& cfg) {
    const int span = (cfg.est_taps - 1) * cfg.pilot_interval + 1;
    return cfg.k_used - span + 1;
}

/**
 * @brief Sliding-window training samples from a full-band estimate.
 *
 * Within each window the M entries at relative offsets {0, D^f, ...,
 * (M-1) D^f} become an input column and the S entries in between become the
 * label column, mirroring the group structure the fitted weights are applied
 * to.
 */
inline TrainingSet patdg_extract(const cvec& h_full, const OfdmConfig& cfg) {
    const int span = (cfg.est_taps - 1) * cfg.pilot_interval + 1;
    if (static_cast<int>(h_full.size()) < span)
        throw std::invalid_argument("patdg_extract: estimate shorter than one window");
    // Window geometry mirrors the group structure: inputs at multiples of the
    // pilot interval, labels in between.
    std::vector<int> rel_in, rel_lab;
    for (int r = 0; r < span; ++r) {
        if (r % cfg.pilot_interval == 0)
            rel_in.push_back(r);
        else
            rel_lab.push_back(r);
    }
    const int windows = static_cast<int>(h_full.size()) - span + 1;
    TrainingSet ts;
    ts.label_kind = TrainingSet::Labels::kEstimated;
    ts.x_i.resize(rel_in.size(), windows);
    ts.y_o.resize(rel_lab.size(), windows);
    for (int w = 0; w < windows; ++w) {
        for (std::size_t i = 0; i < rel_in.size(); ++i)
            ts.x_i(static_cast<Eigen::Index>(i), w) = h_full[w + rel_in[i]];
        for (std::size_t i = 0; i < rel_lab.size(); ++i)
            ts.y_o(static_cast<Eigen::Index>(i), w) = h_full[w + rel_lab[i]];
    }
    return ts;
}

/// Exact least-squares fit W = Y_O pinv(X_I). Rank deficiency of the inputs
/// is absorbed by the pseudoinverse and flagged on the result.
inline LinearEstimator fit_weights(const TrainingSet& ts) {
    if (ts.x_i.cols() != ts.y_o.cols())
        throw std::invalid_argument("fit_weights: input/label column mismatch");
    if (ts.x_i.cols() <= ts.x_i.rows())
        throw std::invalid_argument("fit_weights: need more samples than inputs (T > M)");
    int rank = 0;
    LinearEstimator est;
    est.w = ts.y_o * pinv(ts.x_i, &rank);
    est.rank_deficient = rank < ts.x_i.rows();
    return est;
}

/// celm_train on a TrainingSet (hidden weights drawn from @p rng, frozen).
inline ElmEstimator celm_train(const TrainingSet& ts, int hidden, Rng& rng,
                               ElmActivation act = ElmActivation::kAsinhSplit) {
    return celm_train_matrices(ts.x_i, ts.y_o, hidden, rng, act);
}

struct DdtdgResult {
    LinearEstimator est;
    cvec refined;         ///< data-position estimates aligned with layout.data
    cvec initial;         ///< the linear-interpolation estimates it started from
    std::uint64_t flagged = 0;
};

/**
 * @brief Decision-directed training on a single comb-pilot data symbol.
 *
 * LS at the pilots, linear interpolation, zero-forcing detection, then the
 * detected symbols are treated as a full-band pilot symbol: full-band LS,
 * sliding-window extraction, least-squares fit, and a final pass of the
 * fitted weights over the pilot estimates.
 */
inline DdtdgResult ddtdg_generate_and_fit(const cvec& rx_bins, const OfdmConfig& cfg,
                                          const GroupLayout& layout) {
    if (static_cast<int>(rx_bins.size()) != cfg.k_used)
        throw std::invalid_argument("ddtdg: symbol width does not match k_used");
    const cvec tones = pilot_tones(cfg);
    cvec y_p(layout.pilots.size());
    for (std::size_t i = 0; i < layout.pilots.size(); ++i) y_p[i] = rx_bins[layout.pilots[i]];
    const cvec h_p = ls_pilot_estimate(y_p, tones);

    DdtdgResult r;
    r.initial = interpolate_linear(h_p, layout);

    cvec y_d(layout.data.size());
    for (std::size_t i = 0; i < layout.data.size(); ++i) y_d[i] = rx_bins[layout.data[i]];
    const DetectResult det = zf_equalize_detect(y_d, r.initial);
    r.flagged = det.flagged;

    // Recovered symbol: true pilot values at the pilot bins, hard decisions
    // elsewhere.
    cvec recovered(cfg.k_used);
    for (std::size_t i = 0; i < layout.pilots.size(); ++i) recovered[layout.pilots[i]] = tones[i];
    for (std::size_t i = 0; i < layout.data.size(); ++i)
        recovered[layout.data[i]] = qpsk_hard(det.symbols[i]);

    const cvec h_full = block_pilot_ls(rx_bins, recovered);
    const TrainingSet ts = patdg_extract(h_full, cfg);
    r.est = fit_weights(ts);
    r.refined = apply_linear(r.est, h_p, layout);
    return r;
}

}  // namespace ofdmce
