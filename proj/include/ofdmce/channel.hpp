#pragma once

/**
 * @file channel.hpp
 * @brief WSSUS tapped-delay-line fading channel: power delay profiles,
 *        per-frame realizations, analytic frequency correlation, and
 *        impairment injection (AWGN, timing offset, frequency offset,
 *        amplitude clipping).
 */

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ofdmce/numerics.hpp"
#include "ofdmce/ofdm.hpp"

namespace ofdmce {

/**
 * @brief Statistical tap description: (delay, linear power) pairs with unit
 *        total power.
 *
 * Delays must be non-negative and strictly increasing. Powers are normalized
 * to sum to one at construction. quantized() rounds delays to the sample
 * grid of a given rate and merges taps that collide; every consumer of the
 * profile (realization sampling and analytic correlation alike) goes through
 * the same quantization.
 */
class PowerDelayProfile {
public:
    struct Tap {
        double delay_ns;
        double power;  ///< linear
    };
    struct QuantTap {
        int delay_samples;
        double power;
    };

    PowerDelayProfile(std::string name, std::vector<Tap> taps)
        : name_(std::move(name)), taps_(std::move(taps)) {
        if (taps_.empty()) throw std::invalid_argument("profile: no taps");
        double total = 0.0;
        double prev = -1.0;
        for (const Tap& t : taps_) {
            if (t.delay_ns < 0.0) throw std::invalid_argument("profile: negative delay");
            if (t.delay_ns <= prev)
                throw std::invalid_argument("profile: delays must be strictly increasing");
            if (t.power <= 0.0) throw std::invalid_argument("profile: non-positive tap power");
            prev = t.delay_ns;
            total += t.power;
        }
        for (Tap& t : taps_) t.power /= total;
    }

    static PowerDelayProfile from_db(std::string name,
                                     std::vector<std::pair<double, double>> delay_ns_power_db) {
        std::vector<Tap> taps;
        taps.reserve(delay_ns_power_db.size());
        for (const auto& [d, p] : delay_ns_power_db)
            taps.push_back({d, std::pow(10.0, p / 10.0)});
        return PowerDelayProfile(std::move(name), std::move(taps));
    }

    /// Load from a plain-text file: one `delay_ns power_db` pair per line,
    /// `#` starts a comment.
    static PowerDelayProfile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("profile: cannot open " + path);
        std::vector<std::pair<double, double>> rows;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::istringstream ls(line);
            double delay_ns, power_db;
            if (!(ls >> delay_ns)) continue;  // blank or comment-only line
            if (!(ls >> power_db))
                throw std::runtime_error("profile: malformed line " + std::to_string(lineno) +
                                         " in " + path);
            rows.emplace_back(delay_ns, power_db);
        }
        if (rows.empty()) throw std::runtime_error("profile: no taps in " + path);
        std::string name = path;
        const std::size_t slash = name.find_last_of("/\\");
        if (slash != std::string::npos) name.erase(0, slash + 1);
        const std::size_t dot = name.find_last_of('.');
        if (dot != std::string::npos) name.erase(dot);
        return from_db(std::move(name), std::move(rows));
    }

    const std::string& name() const { return name_; }
    const std::vector<Tap>& taps() const { return taps_; }

    /// Sample-grid view: delays rounded to the nearest sample, colliding taps
    /// merged by summing powers. Total power stays 1.
    std::vector<QuantTap> quantized(double sample_rate) const {
        std::vector<QuantTap> q;
        for (const Tap& t : taps_) {
            const int d = static_cast<int>(std::lround(t.delay_ns * 1e-9 * sample_rate));
            if (!q.empty() && q.back().delay_samples == d)
                q.back().power += t.power;
            else
                q.push_back({d, t.power});
        }
        return q;
    }

private:
    std::string name_;
    std::vector<Tap> taps_;
};

/// One sampled channel impulse response (sample-spaced taps).
struct ChannelRealization {
    cvec cir;
};

/// Timing/frequency offset and clipping switches for one frame.
struct ImpairmentConfig {
    int theta = 0;          ///< timing offset in samples, <= 0
    double epsilon = 0.0;   ///< normalized frequency offset, |epsilon| < 0.5
    bool clipping = false;
    double clip_ratio = 1.0;  ///< threshold as a multiple of the signal RMS
};

/// Per-scenario impairment ranges: theta uniform over {theta_min, ..., 0},
/// epsilon uniform over [-epsilon_max, epsilon_max].
struct ScenarioImpairmentStats {
    int theta_min = 0;
    double epsilon_max = 0.0;
};

/**
 * @brief Draw one WSSUS realization: each quantized profile tap is an
 *        independent complex Gaussian with the tap's power (Rayleigh
 *        magnitude).
 */
inline ChannelRealization sample_realization(const PowerDelayProfile& profile,
                                             const OfdmConfig& cfg, Rng& rng) {
    const auto q = profile.quantized(cfg.sample_rate);
    if (q.back().delay_samples >= cfg.cp_len)
        throw std::invalid_argument("sample_realization: profile delay spread exceeds the CP");
    ChannelRealization r;
    r.cir.assign(q.back().delay_samples + 1, cplx(0.0, 0.0));
    for (const auto& tap : q) r.cir[tap.delay_samples] = rng.cgauss(tap.power);
    return r;
}

/**
 * @brief Channel frequency response at the used subcarriers.
 *
 * h_k = sum_l cir[l] * exp(-j 2 pi o_k l / N) with o_k the subcarrier offset
 * from DC; with unit-power profiles E[|h_k|^2] = 1.
 */
inline cvec cfr(const ChannelRealization& real, const OfdmConfig& cfg) {
    cvec h(cfg.k_used, cplx(0.0, 0.0));
    for (std::size_t l = 0; l < real.cir.size(); ++l) {
        const cplx tap = real.cir[l];
        if (tap == cplx(0.0, 0.0)) continue;
        const double base = -2.0 * kPi * static_cast<double>(l) / cfg.n_dft;
        // Phasor recurrence over the ascending subcarrier offsets; the DC gap
        // between the two half-bands is one extra step.
        const cplx step(std::cos(base), std::sin(base));
        int prev = subcarrier_offset(cfg, 0);
        cplx ph = std::polar(1.0, base * prev);
        h[0] += tap * ph;
        for (int k = 1; k < cfg.k_used; ++k) {
            const int o = subcarrier_offset(cfg, k);
            for (; prev < o; ++prev) ph *= step;
            h[k] += tap * ph;
        }
    }
    return h;
}

/**
 * @brief Analytic frequency correlation r(dk) = sum_l p_l
 *        exp(-j 2 pi dk d_l / N) over the quantized taps, so the analytic
 *        estimators match the simulated channel exactly.
 *
 * With this sign convention E[h_i conj(h_j)] = r(i - j) for subcarrier
 * offsets i, j.
 */
inline cplx freq_correlation(const PowerDelayProfile& profile, int dk, const OfdmConfig& cfg) {
    cplx r(0.0, 0.0);
    for (const auto& tap : profile.quantized(cfg.sample_rate)) {
        const double ang = -2.0 * kPi * static_cast<double>(dk) * tap.delay_samples / cfg.n_dft;
        r += tap.power * cplx(std::cos(ang), std::sin(ang));
    }
    return r;
}

/// Linear convolution with the CIR (truncated to the input length) plus
/// complex AWGN of per-sample variance noise_var.
inline cvec propagate(const cvec& tx_time, const ChannelRealization& real, double noise_var,
                      Rng& rng) {
    const std::size_t n = tx_time.size();
    cvec out(n, cplx(0.0, 0.0));
    for (std::size_t l = 0; l < real.cir.size(); ++l) {
        const cplx tap = real.cir[l];
        if (tap == cplx(0.0, 0.0)) continue;
        for (std::size_t i = l; i < n; ++i) out[i] += tap * tx_time[i - l];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] += rng.cgauss(noise_var);
    return out;
}

/**
 * @brief Apply timing and carrier frequency offsets to a received stream.
 *
 * out[n] = in[n + theta] * exp(-j 2 pi n epsilon / N) with n the global
 * sample index across the whole frame (the CFO phase does not reset at
 * symbol boundaries). theta <= 0 slides every DFT window into its own cyclic
 * prefix, which stays free of inter-symbol interference as long as
 * |theta| + delay spread <= CP; the demodulated bins then pick up the phase
 * ramp exp(j 2 pi bin * theta / N).
 */
inline cvec apply_sto_cfo(const cvec& rx_time, const ImpairmentConfig& imp,
                          const OfdmConfig& cfg) {
    if (imp.theta > 0) throw std::invalid_argument("apply_sto_cfo: theta must be <= 0");
    if (-imp.theta >= cfg.cp_len)
        throw std::invalid_argument("apply_sto_cfo: |theta| must stay within the CP");
    if (std::abs(imp.epsilon) >= 0.5)
        throw std::invalid_argument("apply_sto_cfo: |epsilon| must be below 0.5");
    if (imp.theta == 0 && imp.epsilon == 0.0) return rx_time;
    const std::size_t n = rx_time.size();
    cvec out(n);
    const double base = -2.0 * kPi * imp.epsilon / cfg.n_dft;
    const cplx step(std::cos(base), std::sin(base));
    cplx ph(1.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) + imp.theta;
        const cplx v = src >= 0 ? rx_time[static_cast<std::size_t>(src)] : cplx(0.0, 0.0);
        out[i] = imp.epsilon == 0.0 ? v : v * ph;
        ph *= step;
    }
    return out;
}

/// Root-mean-square magnitude of a sample stream.
inline double rms(const cvec& x) {
    if (x.empty()) return 0.0;
    double p = 0.0;
    for (const auto& z : x) p += std::norm(z);
    return std::sqrt(p / static_cast<double>(x.size()));
}

/// Cap sample magnitudes at the threshold A, preserving phases.
inline cvec clip_at(const cvec& tx_time, double threshold) {
    if (threshold <= 0.0) throw std::invalid_argument("clip_at: threshold must be positive");
    cvec out(tx_time.size());
    for (std::size_t i = 0; i < tx_time.size(); ++i) {
        const double m = std::abs(tx_time[i]);
        out[i] = m <= threshold ? tx_time[i] : tx_time[i] * (threshold / m);
    }
    return out;
}

/// Amplitude clipping with threshold A = clip_ratio * RMS(tx_time).
inline cvec clip(const cvec& tx_time, double clip_ratio) {
    if (clip_ratio <= 0.0) throw std::invalid_argument("clip: clip_ratio must be positive");
    return clip_at(tx_time, clip_ratio * rms(tx_time));
}

}  // namespace ofdmce
