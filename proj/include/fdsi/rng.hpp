// SPDX-License-Identifier: Apache-2.0
//
// fdsi - link-level simulator for far-field self-interference mitigation
// in full-duplex MIMO OFDM
// Copyright (C) 2026 the fdsi contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <armadillo>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace fdsi
{

// Seed whitener / substream derivation (splitmix64). Distinct inputs give
// statistically independent 64-bit outputs, so per-trial generators seeded
// this way form non-overlapping substreams of one master seed.
inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
// the standard); all distributions are generated here from raw bits, never
// via std::*_distribution, so sequences are reproducible across platforms.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : eng(splitmix64(seed)), bit_cache(0), bits_left(0) {}

    // Substream `stream` of `master_seed`; independent across stream values.
    static Rng substream(std::uint64_t master_seed, std::uint64_t stream)
    {
        return Rng(splitmix64(master_seed ^ splitmix64(stream + 0x51ED2701ULL)));
    }

    std::uint64_t raw() { return eng(); }

    // Uniform on [0, 1), 53-bit resolution
    double uniform() { return double(raw() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform index in [0, n)
    arma::uword index(arma::uword n)
    {
        if (n == 0)
            throw std::invalid_argument("Rng::index: n must be positive");
        return arma::uword((static_cast<unsigned __int128>(raw()) * n) >> 64);
    }

    // Circularly-symmetric complex normal with E|z|^2 = variance
    arma::cx_double normal(double variance = 1.0)
    {
        // polar Box-Muller; yields two independent N(0,1) components
        double u, v, s;
        do
        {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-std::log(s) / s * variance); // includes the 1/2-per-part split
        return {u * f, v * f};
    }

    void fill_cn(arma::cx_mat& m, double variance)
    {
        for (arma::uword i = 0; i < m.n_elem; ++i)
            m(i) = normal(variance);
    }

    arma::cx_vec cn_vec(arma::uword n, double variance)
    {
        arma::cx_vec v(n);
        for (arma::uword i = 0; i < n; ++i)
            v(i) = normal(variance);
        return v;
    }

    // Unit-power QPSK symbol, (+-1 +- 1j)/sqrt(2)
    arma::cx_double qpsk()
    {
        if (bits_left < 2)
        {
            bit_cache = raw();
            bits_left = 64;
        }
        const double a = 0.70710678118654752440;
        double re = (bit_cache & 1) ? a : -a;
        double im = (bit_cache & 2) ? a : -a;
        bit_cache >>= 2;
        bits_left -= 2;
        return {re, im};
    }

    void fill_qpsk(arma::cx_mat& m)
    {
        for (arma::uword i = 0; i < m.n_elem; ++i)
            m(i) = qpsk();
    }

    // k distinct values from {0, ..., n-1}, order randomized (partial Fisher-Yates)
    arma::uvec sample_without_replacement(arma::uword n, arma::uword k)
    {
        if (k > n)
            throw std::invalid_argument("Rng::sample_without_replacement: k exceeds n");
        arma::uvec pool = arma::regspace<arma::uvec>(0, n - 1);
        for (arma::uword i = 0; i < k; ++i)
        {
            arma::uword j = i + index(n - i);
            std::swap(pool(i), pool(j));
        }
        return pool.head(k);
    }

  private:
    std::mt19937_64 eng;
    std::uint64_t bit_cache;
    int bits_left;
};

} // namespace fdsi
