#pragma once

/**
 * @file numerics.hpp
 * @brief Complex linear algebra and transforms shared by the whole library:
 *        unitary DFT/IDFT, SVD pseudoinverse, Hermitian solves, and a
 *        reproducible complex-Gaussian RNG.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace ofdmce {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using cmat = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;

inline bool all_finite(const cvec& v) {
    for (const auto& z : v) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
}

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 Cooley-Tukey, unscaled. `invert` flips the
// twiddle sign (no 1/n applied here).
inline void fft_pow2(cvec& a, bool invert) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (invert ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const cplx wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein chirp-z transform: forward DFT of arbitrary length via a
// power-of-two convolution. Unscaled.
inline cvec dft_bluestein(const cvec& x) {
    const std::size_t n = x.size();
    const std::size_t m = next_pow2(2 * n - 1);
    cvec a(m, cplx(0.0, 0.0));
    cvec b(m, cplx(0.0, 0.0));
    cvec chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the phase argument small and exact.
        const std::uint64_t q = (static_cast<std::uint64_t>(k) * k) % (2 * n);
        const double ang = -kPi * static_cast<double>(q) / static_cast<double>(n);
        chirp[k] = cplx(std::cos(ang), std::sin(ang));
        a[k] = x[k] * chirp[k];
        b[k] = std::conj(chirp[k]);
        if (k != 0) b[m - k] = std::conj(chirp[k]);
    }
    fft_pow2(a, false);
    fft_pow2(b, false);
    for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
    fft_pow2(a, true);
    cvec out(n);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * scale * chirp[k];
    return out;
}

inline cvec dft_unscaled(const cvec& x) {
    if (is_pow2(x.size())) {
        cvec a = x;
        fft_pow2(a, false);
        return a;
    }
    return dft_bluestein(x);
}

}  // namespace detail

/// Forward DFT with unitary scaling (1/sqrt(n) in both directions).
inline cvec dft(const cvec& x, std::size_t n) {
    if (x.size() != n) throw std::invalid_argument("dft: input length does not match n");
    if (n == 0) throw std::invalid_argument("dft: empty input");
    cvec out = detail::dft_unscaled(x);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& z : out) z *= s;
    return out;
}

/// Inverse DFT with unitary scaling; idft(dft(x)) == x.
inline cvec idft(const cvec& x, std::size_t n) {
    if (x.size() != n) throw std::invalid_argument("idft: input length does not match n");
    if (n == 0) throw std::invalid_argument("idft: empty input");
    cvec tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = std::conj(x[i]);
    cvec out = detail::dft_unscaled(tmp);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& z : out) z = std::conj(z) * s;
    return out;
}

/**
 * @brief Moore-Penrose pseudoinverse via SVD.
 *
 * Singular values below 1e-12 * sigma_max are treated as zero. When
 * @p rank_out is non-null it receives the numerical rank.
 */
inline cmat pinv(const cmat& a, int* rank_out = nullptr) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("pinv: empty matrix");
    Eigen::JacobiSVD<cmat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw std::runtime_error("pinv: SVD did not converge");
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-12 * (sv.size() > 0 ? sv(0) : 0.0);
    Eigen::VectorXd inv_sv(sv.size());
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) {
            inv_sv(i) = 1.0 / sv(i);
            ++rank;
        } else {
            inv_sv(i) = 0.0;
        }
    }
    if (rank_out) *rank_out = rank;
    return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().adjoint();
}

/**
 * @brief Solve a * x = b for Hermitian positive (semi-)definite a with
 *        diagonal loading. Throws if the system is singular enough that the
 *        residual exceeds 1e-10 * ||b||.
 */
inline cmat herm_solve(const cmat& a, const cmat& b) {
    if (a.rows() != a.cols()) throw std::invalid_argument("herm_solve: matrix is not square");
    if (a.rows() != b.rows()) throw std::invalid_argument("herm_solve: dimension mismatch");
    Eigen::LDLT<cmat> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("herm_solve: factorization failed");
    cmat x = ldlt.solve(b);
    const double bnorm = b.norm();
    const double resid = (a * x - b).norm();
    if (!(resid <= 1e-10 * std::max(bnorm, 1e-300))) {
        throw std::runtime_error("herm_solve: singular or badly conditioned system");
    }
    return x;
}

/**
 * @brief Reproducible random generator.
 *
 * mt19937_64 with explicit Box-Muller sampling so that streams are identical
 * across platforms and standard-library versions (std::normal_distribution is
 * implementation-defined). Uniform doubles come from the top 53 bits.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Uniform integer in [lo, hi], inclusive. Masked rejection keeps the
    /// draw unbiased and platform-independent.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw std::invalid_argument("uniform_int: empty range");
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1u;
        if (range == 0) return lo + static_cast<std::int64_t>(eng_());  // full 64-bit span
        std::uint64_t mask = range - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        std::uint64_t v;
        do {
            v = eng_() & mask;
        } while (v >= range);
        return lo + static_cast<std::int64_t>(v);
    }

    /// Standard normal pair via Box-Muller.
    std::pair<double, double> gauss_pair() {
        const double u1 = 1.0 - uniform01();  // (0, 1]; keeps log() finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * kPi * u2;
        return {r * std::cos(ang), r * std::sin(ang)};
    }

    /// Circularly symmetric complex Gaussian with total power @p variance
    /// (variance/2 per real dimension). variance == 0 yields exactly 0.
    cplx cgauss(double variance) {
        if (variance < 0.0) throw std::invalid_argument("cgauss: negative variance");
        if (variance == 0.0) return cplx(0.0, 0.0);
        const auto [g0, g1] = gauss_pair();
        const double s = std::sqrt(0.5 * variance);
        return cplx(s * g0, s * g1);
    }

private:
    std::mt19937_64 eng_;
};

inline cplx sample_cgauss(Rng& rng, double variance) { return rng.cgauss(variance); }

// --- seed-derivation helpers (used by the Monte Carlo harness) ---

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ofdmce
