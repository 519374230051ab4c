#pragma once

/**
 * @file ofdm.hpp
 * @brief Frame construction and the transmit/receive chain: comb-pilot grid,
 *        QPSK mapping, IFFT/CP modulation, demodulation, per-group
 *        extraction, and zero-forcing detection.
 */

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ofdmce/numerics.hpp"

namespace ofdmce {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

/// Seed for the deterministic pseudo-random pilot values. Fixed so that the
/// transmitter and every receiver agree on the pilot sequence.
inline constexpr std::uint64_t kPilotSeed = 0x0fd3202100ULL;

/**
 * @brief Static frame and grid constants.
 *
 * Defaults follow the 10 MHz / 512-bin configuration with one full-band
 * pilot symbol and nine data symbols per frame. The used band has 409
 * subcarriers so the comb pilots land on both band edges with interval 3;
 * see validate() for the structural constraints.
 */
struct OfdmConfig {
    int n_dft = 512;          ///< DFT size
    int cp_len = 128;         ///< cyclic prefix length in samples
    int k_used = 409;         ///< number of used subcarriers K
    int pilot_interval = 3;   ///< comb pilot spacing D^f
    int est_taps = 2;         ///< pilots per estimation group M
    int n_block_pilot = 1;    ///< full-band pilot symbols per frame N_p
    int n_data = 9;           ///< data symbols per frame N_d
    double sample_rate = 10e6;

    int pilot_count() const { return (k_used - 1) / pilot_interval + 1; }
    int group_count() const { return (pilot_count() - 1) / (est_taps - 1); }
    int group_data_count() const { return (est_taps - 1) * (pilot_interval - 1); }
    int data_bin_count() const { return group_count() * group_data_count(); }
    int symbol_len() const { return n_dft + cp_len; }
    int frame_symbols() const { return n_block_pilot + n_data; }
    int frame_len() const { return frame_symbols() * symbol_len(); }

    void validate() const {
        if (n_dft < 2) throw std::invalid_argument("n_dft: must be at least 2");
        if (cp_len < 0 || cp_len >= n_dft)
            throw std::invalid_argument("cp_len: must satisfy 0 <= cp_len < n_dft");
        if (k_used < 2 || k_used > n_dft - 1)
            throw std::invalid_argument(
                "k_used: must fit the DFT grid with the DC bin excluded (k_used <= n_dft - 1)");
        if (pilot_interval < 2)
            throw std::invalid_argument(
                "pilot_interval: must be at least 2, otherwise groups contain no data subcarriers");
        if ((k_used - 1) % pilot_interval != 0)
            throw std::invalid_argument(
                "k_used/pilot_interval: (k_used - 1) must be divisible by pilot_interval so that "
                "both band edges carry pilots");
        if (est_taps < 2) throw std::invalid_argument("est_taps: must be at least 2");
        if ((pilot_count() - 1) % (est_taps - 1) != 0)
            throw std::invalid_argument(
                "est_taps: (pilot_count - 1) must be divisible by (est_taps - 1) so that groups "
                "tile the band");
        if (n_block_pilot < 0) throw std::invalid_argument("n_block_pilot: must be non-negative");
        if (n_data < 1) throw std::invalid_argument("n_data: must be at least 1");
        if (sample_rate <= 0.0) throw std::invalid_argument("sample_rate: must be positive");
    }
};

/// Frequency offset of used subcarrier k (0-based) from DC, in bins. The used
/// block is centred on the grid and skips the DC bin.
inline int subcarrier_offset(const OfdmConfig& cfg, int k) {
    int o = k - cfg.k_used / 2;
    if (o >= 0) ++o;
    return o;
}

/// DFT bin index of used subcarrier k.
inline int subcarrier_bin(const OfdmConfig& cfg, int k) {
    const int o = subcarrier_offset(cfg, k);
    return o >= 0 ? o : cfg.n_dft + o;
}

/// Comb pilot positions {0, D^f, 2 D^f, ..., K-1} (0-based subcarrier indices).
inline std::vector<int> pilot_indices(const OfdmConfig& cfg) {
    cfg.validate();
    std::vector<int> idx;
    idx.reserve(cfg.pilot_count());
    for (int k = 0; k < cfg.k_used; k += cfg.pilot_interval) idx.push_back(k);
    return idx;
}

/**
 * @brief Partition of the used band into estimation groups.
 *
 * Group g spans subcarriers [g*(M-1)*D^f, (g+1)*(M-1)*D^f]; adjacent groups
 * share their boundary pilot. All groups have the same internal structure,
 * captured by the relative offsets rel_pilot / rel_data.
 */
struct GroupLayout {
    int taps = 0;     ///< M
    int spacing = 0;  ///< D^f
    int groups = 0;   ///< G
    std::vector<int> pilots;     ///< all pilot subcarrier indices, ascending
    std::vector<int> data;       ///< all data subcarrier indices, ascending
    std::vector<int> rel_pilot;  ///< {0, D^f, ..., (M-1)D^f}
    std::vector<int> rel_data;   ///< the S in-between offsets

    int group_span() const { return (taps - 1) * spacing; }
    int group_origin(int g) const { return g * group_span(); }

    std::vector<int> group_pilots(int g) const {
        check_group(g);
        std::vector<int> out(rel_pilot.size());
        for (std::size_t i = 0; i < rel_pilot.size(); ++i) out[i] = group_origin(g) + rel_pilot[i];
        return out;
    }

    std::vector<int> group_data(int g) const {
        check_group(g);
        std::vector<int> out(rel_data.size());
        for (std::size_t i = 0; i < rel_data.size(); ++i) out[i] = group_origin(g) + rel_data[i];
        return out;
    }

    /// Ordinals into the pilot-estimate vector for group g (adjacent groups
    /// share a boundary pilot).
    std::vector<int> group_pilot_ordinals(int g) const {
        check_group(g);
        std::vector<int> out(taps);
        for (int i = 0; i < taps; ++i) out[i] = g * (taps - 1) + i;
        return out;
    }

private:
    void check_group(int g) const {
        if (g < 0 || g >= groups) throw std::out_of_range("group index out of range");
    }
};

inline GroupLayout make_group_layout(const OfdmConfig& cfg) {
    cfg.validate();
    GroupLayout l;
    l.taps = cfg.est_taps;
    l.spacing = cfg.pilot_interval;
    l.groups = cfg.group_count();
    l.pilots = pilot_indices(cfg);
    for (int r = 0; r <= l.group_span(); ++r) {
        if (r % cfg.pilot_interval == 0)
            l.rel_pilot.push_back(r);
        else
            l.rel_data.push_back(r);
    }
    l.data.reserve(cfg.data_bin_count());
    for (int g = 0; g < l.groups; ++g) {
        for (int r : l.rel_data) l.data.push_back(l.group_origin(g) + r);
    }
    return l;
}

// --- QPSK (Gray mapped, unit power) ---

/// (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)
inline cplx qpsk_point(int b0, int b1) {
    return cplx((1 - 2 * b0) * kInvSqrt2, (1 - 2 * b1) * kInvSqrt2);
}

inline cvec qpsk_map(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_map: odd number of bits");
    cvec out(bits.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = qpsk_point(bits[2 * i], bits[2 * i + 1]);
    return out;
}

inline std::vector<std::uint8_t> qpsk_demap(const cvec& symbols) {
    std::vector<std::uint8_t> bits(symbols.size() * 2);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        bits[2 * i] = symbols[i].real() < 0.0 ? 1 : 0;
        bits[2 * i + 1] = symbols[i].imag() < 0.0 ? 1 : 0;
    }
    return bits;
}

/// Nearest constellation point (hard re-modulation of an equalized symbol).
inline cplx qpsk_hard(cplx s) {
    return cplx(std::copysign(kInvSqrt2, s.real()), std::copysign(kInvSqrt2, s.imag()));
}

// --- frame grid ---

/**
 * @brief One frame of frequency-domain symbols.
 *
 * The first n_block symbols are full-band pilot symbols known at the
 * receiver; the rest are data symbols carrying comb pilots at the pilot
 * positions and payload QPSK elsewhere.
 */
struct FrameGrid {
    int k_used = 0;
    int n_block = 0;
    std::vector<cvec> symbols;            ///< frame_symbols() rows of length k_used
    std::vector<std::uint8_t> data_bits;  ///< payload bits, data-symbol major

    int n_symbols() const { return static_cast<int>(symbols.size()); }
    int n_data() const { return n_symbols() - n_block; }
    bool is_block(int s) const { return s < n_block; }
};

/// Known comb-pilot values (one per pilot position, reused in every data
/// symbol). Derived from kPilotSeed.
inline cvec pilot_tones(const OfdmConfig& cfg) {
    Rng rng(splitmix64(kPilotSeed ^ 0x70696c6f74ULL));  // "pilot" stream
    cvec tones(cfg.pilot_count());
    for (auto& t : tones)
        t = qpsk_point(static_cast<int>(rng.uniform_int(0, 1)), static_cast<int>(rng.uniform_int(0, 1)));
    return tones;
}

/// Known full-band pilot symbol values, one row per block pilot symbol.
/// Same QPSK alphabet as the data symbols.
inline std::vector<cvec> block_pilot_values(const OfdmConfig& cfg) {
    Rng rng(splitmix64(kPilotSeed ^ 0x626c6f636bULL));  // "block" stream
    std::vector<cvec> rows(cfg.n_block_pilot, cvec(cfg.k_used));
    for (auto& row : rows) {
        for (auto& v : row)
            v = qpsk_point(static_cast<int>(rng.uniform_int(0, 1)),
                           static_cast<int>(rng.uniform_int(0, 1)));
    }
    return rows;
}

/// Build a frame with fresh random payload bits.
inline FrameGrid build_frame(const OfdmConfig& cfg, Rng& rng) {
    cfg.validate();
    const GroupLayout layout = make_group_layout(cfg);
    FrameGrid f;
    f.k_used = cfg.k_used;
    f.n_block = cfg.n_block_pilot;
    f.symbols = block_pilot_values(cfg);
    const cvec tones = pilot_tones(cfg);
    const int nd_bins = cfg.data_bin_count();
    f.data_bits.resize(static_cast<std::size_t>(cfg.n_data) * nd_bins * 2);
    std::size_t bit = 0;
    for (int s = 0; s < cfg.n_data; ++s) {
        cvec row(cfg.k_used);
        for (std::size_t p = 0; p < layout.pilots.size(); ++p) row[layout.pilots[p]] = tones[p];
        for (int j = 0; j < nd_bins; ++j) {
            const int b0 = static_cast<int>(rng.uniform_int(0, 1));
            const int b1 = static_cast<int>(rng.uniform_int(0, 1));
            f.data_bits[bit++] = static_cast<std::uint8_t>(b0);
            f.data_bits[bit++] = static_cast<std::uint8_t>(b1);
            row[layout.data[j]] = qpsk_point(b0, b1);
        }
        f.symbols.push_back(std::move(row));
    }
    return f;
}

// --- modulation / demodulation ---

/// Map each symbol onto the DFT grid, unitary IDFT, prepend the cyclic
/// prefix, and concatenate.
inline cvec modulate(const FrameGrid& frame, const OfdmConfig& cfg) {
    cvec out;
    out.reserve(static_cast<std::size_t>(frame.n_symbols()) * cfg.symbol_len());
    for (const cvec& sym : frame.symbols) {
        if (static_cast<int>(sym.size()) != cfg.k_used)
            throw std::invalid_argument("modulate: symbol width does not match k_used");
        cvec grid(cfg.n_dft, cplx(0.0, 0.0));
        for (int k = 0; k < cfg.k_used; ++k) grid[subcarrier_bin(cfg, k)] = sym[k];
        const cvec body = idft(grid, cfg.n_dft);
        out.insert(out.end(), body.end() - cfg.cp_len, body.end());
        out.insert(out.end(), body.begin(), body.end());
    }
    return out;
}

/// Drop the cyclic prefix, unitary DFT, and extract the used bins of every
/// symbol in the stream.
inline std::vector<cvec> demodulate(const cvec& rx_time, const OfdmConfig& cfg) {
    const int sym_len = cfg.symbol_len();
    if (rx_time.size() % static_cast<std::size_t>(sym_len) != 0)
        throw std::invalid_argument("demodulate: stream length is not a whole number of symbols");
    const int n_sym = static_cast<int>(rx_time.size()) / sym_len;
    std::vector<cvec> out;
    out.reserve(n_sym);
    for (int s = 0; s < n_sym; ++s) {
        cvec body(rx_time.begin() + s * sym_len + cfg.cp_len, rx_time.begin() + (s + 1) * sym_len);
        const cvec spec = dft(body, cfg.n_dft);
        cvec bins(cfg.k_used);
        for (int k = 0; k < cfg.k_used; ++k) bins[k] = spec[subcarrier_bin(cfg, k)];
        out.push_back(std::move(bins));
    }
    return out;
}

// --- detection ---

struct DetectResult {
    std::vector<std::uint8_t> bits;
    cvec symbols;             ///< equalized symbols before the hard decision
    std::uint64_t flagged = 0;  ///< bins where |h_hat| was below the erasure guard
};

/// Per-bin division by the channel estimate followed by a hard QPSK
/// decision. Near-zero estimates are flagged and decided as bit 0 instead of
/// dividing.
inline DetectResult zf_equalize_detect(const cvec& rx_bins, const cvec& h_hat) {
    if (rx_bins.size() != h_hat.size())
        throw std::invalid_argument("zf_equalize_detect: length mismatch");
    DetectResult r;
    r.symbols.resize(rx_bins.size());
    for (std::size_t i = 0; i < rx_bins.size(); ++i) {
        if (std::abs(h_hat[i]) < 1e-12) {
            r.symbols[i] = cplx(0.0, 0.0);
            ++r.flagged;
        } else {
            r.symbols[i] = rx_bins[i] / h_hat[i];
        }
    }
    r.bits = qpsk_demap(r.symbols);
    return r;
}

/// Pilot- and data-position values of group g from a full-band (length K)
/// vector such as a received symbol or a CFR.
inline std::pair<cvec, cvec> extract_group(const cvec& full, int g, const GroupLayout& layout) {
    if (full.size() < static_cast<std::size_t>(layout.group_origin(layout.groups - 1) + layout.group_span() + 1))
        throw std::invalid_argument("extract_group: vector shorter than the layout span");
    const auto p_idx = layout.group_pilots(g);
    const auto d_idx = layout.group_data(g);
    cvec p(p_idx.size()), d(d_idx.size());
    for (std::size_t i = 0; i < p_idx.size(); ++i) p[i] = full[p_idx[i]];
    for (std::size_t i = 0; i < d_idx.size(); ++i) d[i] = full[d_idx[i]];
    return {std::move(p), std::move(d)};
}

}  // namespace ofdmce
