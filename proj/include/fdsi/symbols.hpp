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

#include "fdsi/rng.hpp"
#include "fdsi/scenario.hpp"

#include <armadillo>
#include <vector>

namespace fdsi
{

enum class SymbolKind
{
    Training,
    Data
};

// Indices of the uniformly decimated training tones within the full carrier
// grid: tone t sits at subcarrier t * (n_subcarriers / n_training).
inline arma::uvec training_tone_indices(const SystemConstants& c)
{
    const arma::uword step = c.n_subcarriers / c.n_training;
    return arma::regspace<arma::uvec>(0, step, c.n_subcarriers - 1);
}

// DFT row of frequency f evaluated through a column permutation,
// row(t) = exp(-j 2 pi f perm(t) / n). Rows with distinct frequencies over a
// common permutation are unit modulus and exactly orthogonal (the column sum
// is permutation-invariant), and any unit-modulus row is exactly orthogonal
// to its own delay-ramped copies. Unlike plain DFT or chirp families, the
// ratio of two distinct rows is a permuted tone, a pseudorandom unit-modulus
// sequence whose energy spreads over the whole delay spectrum; families
// whose rows are modulates of each other concentrate that ratio in a single
// delay bin, where it can impersonate an echo in the residual delay scan.
inline arma::cx_rowvec permuted_tone_row(const arma::uvec& perm, arma::uword f)
{
    const arma::uword n = perm.n_elem;
    arma::cx_rowvec row(n);
    for (arma::uword t = 0; t < n; ++t)
        row(t) = std::polar(1.0, -2.0 * pi * double(f) * double(perm(t)) / double(n));
    return row;
}

// One side's symbol matrix. Training: k_streams orthogonal unit-modulus rows
// over the training tones with row Gram = n_training * I. Data: i.i.d.
// unit-power QPSK over the full carrier grid.
inline arma::cx_mat generate_symbols(Rng& rng, arma::uword k_streams, const SystemConstants& c,
                                     SymbolKind kind)
{
    if (k_streams == 0)
        throw std::invalid_argument("generate_symbols: need at least one stream");
    if (kind == SymbolKind::Training)
    {
        if (k_streams > c.n_training)
            throw std::invalid_argument("generate_symbols: more streams than training tones");
        arma::uvec perm = rng.sample_without_replacement(c.n_training, c.n_training);
        arma::cx_mat d(k_streams, c.n_training);
        for (arma::uword k = 0; k < k_streams; ++k)
            d.row(k) = permuted_tone_row(perm, k);
        return d;
    }
    arma::cx_mat d(k_streams, c.n_subcarriers);
    rng.fill_qpsk(d);
    return d;
}

// Joint uplink/downlink training set over the training tones.
//
// Downlink rows are permuted-tone rows over a common seeded permutation:
// unit modulus (the delay scan divides by them), exactly orthogonal to each
// other and to their own delay-ramped copies, with cross-row ratios that
// spread over the delay spectrum instead of aliasing into one bin. Uplink
// rows are the orthogonal complement (row energy n_training) of the
// downlink rows ramped by every delay in `dsic_delays` (by delay 0 when the
// set is empty), computed by QR, so they stay exactly clean of the echo
// regressors the joint estimator stacks and of any unstacked echo at those
// delays.
//
// `exact` reports whether the full stacked matrix satisfies
// D D^H = n_training * I: true with at most one stacked delay. With two or
// more delays the cross terms between distinct downlink rows at distinct
// delays are O(sqrt(n)) rather than zero; least squares stays exact on
// noiseless frames regardless, only the estimation error floor picks up a
// small inflation. When the ramped copies leave no room for the complement
// (k_d * max(1, |delays|) + k_u > n_training), uplink rows fall back to
// seeded QPSK and `exact` is false.
struct TrainingDesign
{
    arma::cx_mat ul; // k_u x n_training
    arma::cx_mat dl; // k_d x n_training
    bool exact = true;
};

inline TrainingDesign design_training(arma::uword k_u, arma::uword k_d,
                                      const std::vector<arma::uword>& dsic_delays,
                                      const SystemConstants& c, Rng& rng)
{
    const arma::uword n = c.n_training;
    if (k_u == 0 || k_d == 0)
        throw std::invalid_argument("design_training: need streams on both sides");
    if (k_u + k_d > n)
        throw std::invalid_argument("design_training: more streams than training tones");

    TrainingDesign out;
    out.dl.set_size(k_d, n);
    arma::uvec perm = rng.sample_without_replacement(n, n);
    for (arma::uword k = 0; k < k_d; ++k)
        out.dl.row(k) = permuted_tone_row(perm, k);

    std::vector<arma::uword> delays = dsic_delays;
    if (delays.empty())
        delays.push_back(0);

    const arma::uword ramped = k_d * delays.size();
    if (ramped + k_u > n)
    {
        out.ul.set_size(k_u, n);
        rng.fill_qpsk(out.ul);
        out.exact = false;
        return out;
    }

    // Columns: every ramped downlink row, then a random block whose QR
    // residual supplies k_u orthonormal directions outside their span.
    // Plain (unconjugated) transposes keep row inner products r1 r2^H equal
    // to column inner products throughout.
    arma::cx_mat basis(n, ramped + k_u);
    arma::uword col = 0;
    for (arma::uword l : delays)
    {
        arma::cx_rowvec tone(n);
        for (arma::uword t = 0; t < n; ++t)
            tone(t) = std::polar(1.0, -2.0 * pi * double(t) * double(l % n) / double(n));
        for (arma::uword k = 0; k < k_d; ++k)
            basis.col(col++) = (out.dl.row(k) % tone).st();
    }
    arma::cx_mat blk(n, k_u);
    rng.fill_cn(blk, 1.0);
    basis.cols(ramped, ramped + k_u - 1) = blk;

    arma::cx_mat q, r;
    if (!arma::qr_econ(q, r, basis))
        throw std::runtime_error("design_training: QR factorization failed");
    out.ul.set_size(k_u, n);
    for (arma::uword k = 0; k < k_u; ++k)
        out.ul.row(k) = std::sqrt(double(n)) * q.col(ramped + k).st();
    out.exact = delays.size() <= 1;
    return out;
}

} // namespace fdsi
