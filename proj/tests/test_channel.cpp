#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ofdmce/channel.hpp"
#include "ofdmce/ofdm.hpp"

using namespace ofdmce;

namespace {

PowerDelayProfile pb_profile() {
    return PowerDelayProfile::load(std::string(OFDMCE_DEFAULT_DATA_DIR) + "/pedestrian_b.txt");
}

PowerDelayProfile oa_profile() {
    return PowerDelayProfile::load(std::string(OFDMCE_DEFAULT_DATA_DIR) + "/office_a.txt");
}

PowerDelayProfile single_tap() {
    return PowerDelayProfile("flat", {{0.0, 1.0}});
}

// Reference per-symbol transform used as the independent check of the
// demodulation path.
cvec naive_demod_symbol(const cvec& stream, int sym, const OfdmConfig& cfg) {
    cvec bins(cfg.k_used);
    const int start = sym * cfg.symbol_len() + cfg.cp_len;
    for (int k = 0; k < cfg.k_used; ++k) {
        const int b = subcarrier_bin(cfg, k);
        cplx acc(0.0, 0.0);
        for (int t = 0; t < cfg.n_dft; ++t) {
            const double ang = -2.0 * kPi * static_cast<double>(b) * t / cfg.n_dft;
            acc += stream[start + t] * cplx(std::cos(ang), std::sin(ang));
        }
        bins[k] = acc / std::sqrt(static_cast<double>(cfg.n_dft));
    }
    return bins;
}

}  // namespace

TEST_CASE("profile files parse, normalize, and validate") {
    const std::string path = "test_profile_tmp.txt";
    {
        std::ofstream out(path);
        out << "# comment line\n";
        out << "0 0.0   # inline comment\n";
        out << "\n";
        out << "100 -3.0\n";
    }
    const PowerDelayProfile p = PowerDelayProfile::load(path);
    std::remove(path.c_str());
    REQUIRE(p.taps().size() == 2);
    double total = 0.0;
    for (const auto& t : p.taps()) total += t.power;
    REQUIRE(std::abs(total - 1.0) < 1e-12);
    REQUIRE(std::abs(p.taps()[0].power / p.taps()[1].power - std::pow(10.0, 0.3)) < 1e-9);

    REQUIRE_THROWS(PowerDelayProfile("bad", {{100.0, 0.5}, {100.0, 0.5}}));
    REQUIRE_THROWS(PowerDelayProfile("bad", {{-5.0, 1.0}}));
    REQUIRE_THROWS(PowerDelayProfile::load("does_not_exist.txt"));
}

TEST_CASE("tap delays quantize to the 10 MHz sample grid") {
    OfdmConfig cfg;
    const auto q = pb_profile().quantized(cfg.sample_rate);
    std::vector<int> delays;
    for (const auto& t : q) delays.push_back(t.delay_samples);
    REQUIRE(delays == std::vector<int>{0, 2, 8, 12, 23, 37});

    // Office A delays collapse onto few samples; colliding taps merge.
    const auto qo = oa_profile().quantized(cfg.sample_rate);
    std::vector<int> od;
    double total = 0.0;
    for (const auto& t : qo) {
        od.push_back(t.delay_samples);
        total += t.power;
    }
    REQUIRE(od == std::vector<int>{0, 1, 2, 3});
    REQUIRE(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("single-tap realizations are unit-power complex Gaussians") {
    OfdmConfig cfg;
    Rng rng(1);
    const PowerDelayProfile p = single_tap();
    double power = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const ChannelRealization r = sample_realization(p, cfg, rng);
        REQUIRE(r.cir.size() == 1);
        power += std::norm(r.cir[0]);
    }
    power /= n;
    REQUIRE(std::abs(power - 1.0) < 0.02);
}

TEST_CASE("per-tap sample power matches the profile") {
    OfdmConfig cfg;
    Rng rng(2);
    const PowerDelayProfile p = pb_profile();
    const auto q = p.quantized(cfg.sample_rate);
    std::vector<double> power(q.size(), 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const ChannelRealization r = sample_realization(p, cfg, rng);
        for (std::size_t t = 0; t < q.size(); ++t) power[t] += std::norm(r.cir[q[t].delay_samples]);
    }
    for (std::size_t t = 0; t < q.size(); ++t) {
        REQUIRE(std::abs(power[t] / n - q[t].power) < 0.02 * q[t].power);
    }
}

TEST_CASE("profiles with delay spread beyond the CP are rejected") {
    OfdmConfig cfg;
    cfg.cp_len = 8;  // PB reaches 37 samples
    cfg.k_used = 409;
    Rng rng(3);
    REQUIRE_THROWS_AS(sample_realization(pb_profile(), cfg, rng), std::invalid_argument);
}

TEST_CASE("cfr of a flat channel is all ones") {
    OfdmConfig cfg;
    ChannelRealization r;
    r.cir = {cplx(1.0, 0.0)};
    for (const auto& h : cfr(r, cfg)) REQUIRE(std::abs(h - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("two equal taps give the closed-form periodic magnitude") {
    OfdmConfig cfg;
    const int d = 8;
    ChannelRealization r;
    r.cir.assign(d + 1, cplx(0.0, 0.0));
    const double a = std::sqrt(0.5);
    r.cir[0] = cplx(a, 0.0);
    r.cir[d] = cplx(a, 0.0);
    const cvec h = cfr(r, cfg);
    const int period = cfg.n_dft / d;  // 64 bins
    for (int k = 0; k < cfg.k_used; ++k) {
        const double o = subcarrier_offset(cfg, k);
        const double expect = std::sqrt(2.0) * std::abs(std::cos(kPi * o * d / cfg.n_dft));
        REQUIRE(std::abs(std::abs(h[k]) - expect) < 1e-9);
    }
    for (int k = 0; k + period < cfg.k_used; ++k) {
        if (subcarrier_offset(cfg, k) + period == subcarrier_offset(cfg, k + period)) {
            REQUIRE(std::abs(std::abs(h[k]) - std::abs(h[k + period])) < 1e-9);
        }
    }
}

TEST_CASE("cfr bins have unit average power") {
    OfdmConfig cfg;
    Rng rng(4);
    const PowerDelayProfile p = pb_profile();
    const int n = 30000;
    std::vector<double> power(cfg.k_used, 0.0);
    for (int i = 0; i < n; ++i) {
        const cvec h = cfr(sample_realization(p, cfg, rng), cfg);
        for (int k = 0; k < cfg.k_used; ++k) power[k] += std::norm(h[k]);
    }
    for (int k = 0; k < cfg.k_used; ++k) {
        REQUIRE(std::abs(power[k] / n - 1.0) < 0.02);
    }
}

TEST_CASE("frequency correlation: unit at zero lag, flat for one tap, Hermitian") {
    OfdmConfig cfg;
    const PowerDelayProfile pb = pb_profile();
    REQUIRE(std::abs(freq_correlation(pb, 0, cfg) - cplx(1.0, 0.0)) < 1e-12);
    for (int dk : {-7, 1, 3, 100}) {
        REQUIRE(std::abs(freq_correlation(single_tap(), dk, cfg) - cplx(1.0, 0.0)) < 1e-12);
        REQUIRE(std::abs(freq_correlation(pb, dk, cfg) - std::conj(freq_correlation(pb, -dk, cfg))) <
                1e-12);
    }
}

TEST_CASE("frequency correlation matches the Monte Carlo estimate at lag 3") {
    OfdmConfig cfg;
    Rng rng(5);
    const PowerDelayProfile p = pb_profile();
    // E[h_{k+3} conj(h_k)] = r(3) under the library's sign convention.
    const cplx r3 = freq_correlation(p, 3, cfg);
    cplx acc(0.0, 0.0);
    std::uint64_t count = 0;
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        const cvec h = cfr(sample_realization(p, cfg, rng), cfg);
        for (int k = 0; k + 3 < cfg.k_used; k += 20) {
            // Stay inside one half-band so the offset difference is exactly 3.
            if (subcarrier_offset(cfg, k + 3) - subcarrier_offset(cfg, k) != 3) continue;
            acc += h[k + 3] * std::conj(h[k]);
            ++count;
        }
    }
    acc /= static_cast<double>(count);
    REQUIRE(std::abs(acc - r3) < 0.01);
}

TEST_CASE("propagate: identity channel, frequency-domain oracle, noise power") {
    OfdmConfig cfg;
    Rng rng(6);

    SECTION("single unit tap with zero noise is the identity") {
        ChannelRealization r;
        r.cir = {cplx(1.0, 0.0)};
        const FrameGrid f = build_frame(cfg, rng);
        const cvec tx = modulate(f, cfg);
        const cvec rx = propagate(tx, r, 0.0, rng);
        for (std::size_t i = 0; i < tx.size(); ++i) REQUIRE(rx[i] == tx[i]);
    }

    SECTION("noiseless demodulated bins equal X_k h_k") {
        const ChannelRealization real = sample_realization(pb_profile(), cfg, rng);
        const FrameGrid f = build_frame(cfg, rng);
        const auto bins = demodulate(propagate(modulate(f, cfg), real, 0.0, rng), cfg);
        const cvec h = cfr(real, cfg);
        for (int s = 0; s < cfg.frame_symbols(); ++s) {
            for (int k = 0; k < cfg.k_used; ++k) {
                REQUIRE(std::abs(bins[s][k] - f.symbols[s][k] * h[k]) < 1e-9);
            }
        }
    }

    SECTION("zero input leaves noise of the requested power") {
        ChannelRealization r;
        r.cir = {cplx(1.0, 0.0)};
        const double noise_var = 0.37;
        const cvec silence(1000000, cplx(0.0, 0.0));
        const cvec rx = propagate(silence, r, noise_var, rng);
        double p = 0.0;
        for (const auto& z : rx) p += std::norm(z);
        p /= static_cast<double>(rx.size());
        REQUIRE(std::abs(p - noise_var) < 0.02 * noise_var);
    }
}

TEST_CASE("timing/frequency offset: identity when disabled") {
    OfdmConfig cfg;
    Rng rng(7);
    const FrameGrid f = build_frame(cfg, rng);
    const cvec tx = modulate(f, cfg);
    const cvec out = apply_sto_cfo(tx, ImpairmentConfig{}, cfg);
    REQUIRE(out == tx);

    ImpairmentConfig bad;
    bad.theta = 1;
    REQUIRE_THROWS_AS(apply_sto_cfo(tx, bad, cfg), std::invalid_argument);
    bad.theta = -cfg.cp_len;
    REQUIRE_THROWS_AS(apply_sto_cfo(tx, bad, cfg), std::invalid_argument);
}

TEST_CASE("timing offset produces the analytic per-bin phase ramp") {
    // theta <= 0 slides each DFT window into its own cyclic prefix: a
    // circular shift, so bin b gains exp(j 2 pi b theta / N).
    OfdmConfig cfg;
    Rng rng(8);
    const FrameGrid f = build_frame(cfg, rng);
    const cvec tx = modulate(f, cfg);
    ImpairmentConfig imp;
    imp.theta = -4;
    const auto bins = demodulate(apply_sto_cfo(tx, imp, cfg), cfg);
    for (int s = 0; s < cfg.frame_symbols(); ++s) {
        for (int k = 0; k < cfg.k_used; ++k) {
            const double ang = 2.0 * kPi * subcarrier_bin(cfg, k) * imp.theta / cfg.n_dft;
            const cplx expect = f.symbols[s][k] * std::polar(1.0, ang);
            REQUIRE(std::abs(bins[s][k] - expect) < 1e-9);
        }
    }
}

TEST_CASE("frequency offset output matches a direct transform of the ramped stream") {
    OfdmConfig cfg;
    cfg.n_data = 2;
    Rng rng(9);
    const FrameGrid f = build_frame(cfg, rng);
    ImpairmentConfig imp;
    imp.epsilon = 0.05;
    const cvec impaired = apply_sto_cfo(modulate(f, cfg), imp, cfg);
    const auto bins = demodulate(impaired, cfg);
    for (int s = 0; s < cfg.frame_symbols(); ++s) {
        const cvec oracle = naive_demod_symbol(impaired, s, cfg);
        for (int k = 0; k < cfg.k_used; ++k) {
            REQUIRE(std::abs(bins[s][k] - oracle[k]) < 1e-9);
        }
    }
}

TEST_CASE("clipping caps magnitudes and preserves phases") {
    Rng rng(10);

    SECTION("all samples below the threshold pass through") {
        cvec x(64);
        for (auto& z : x) z = rng.cgauss(1.0);
        const cvec y = clip(x, 100.0);
        REQUIRE(y == x);
    }

    SECTION("a sample above the threshold keeps its phase") {
        const cvec y = clip_at({cplx(3.0, 0.0)}, 2.0);
        REQUIRE(y[0] == cplx(2.0, 0.0));
    }

    SECTION("magnitudes never grow and phases survive") {
        cvec x(4096);
        for (auto& z : x) z = rng.cgauss(1.0);
        const cvec y = clip(x, 1.0);
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(std::abs(y[i]) <= std::abs(x[i]) + 1e-15);
            REQUIRE(std::abs(std::arg(y[i]) - std::arg(x[i])) < 1e-12);
        }
    }

    SECTION("clipping does not increase the PAPR of OFDM symbols") {
        OfdmConfig cfg;
        for (int trial = 0; trial < 5; ++trial) {
            const FrameGrid f = build_frame(cfg, rng);
            const cvec tx = modulate(f, cfg);
            const cvec clipped = clip(tx, 1.0);
            const auto papr = [](const cvec& v) {
                double peak = 0.0, mean = 0.0;
                for (const auto& z : v) {
                    peak = std::max(peak, std::norm(z));
                    mean += std::norm(z);
                }
                return peak / (mean / static_cast<double>(v.size()));
            };
            REQUIRE(papr(clipped) <= papr(tx) + 1e-12);
        }
    }
}
