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
#include <stdexcept>

namespace fdsi
{

// Azimuth angle in degrees; valid domain is [-90, 90] (front half-space of
// the linear array).
struct AngleDeg
{
    double value = 0.0;
};

inline constexpr double pi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * (pi / 180.0); }

// Unit-norm steering vector of a half-wavelength uniform linear array,
// entry n = (1/sqrt(N)) * exp(j * n * pi * sin(theta)), n = 0..N-1.
inline arma::cx_vec steering(AngleDeg theta, arma::uword n_antennas)
{
    if (n_antennas == 0)
        throw std::invalid_argument("steering: array must have at least one antenna");
    if (!(theta.value >= -90.0 && theta.value <= 90.0))
        throw std::domain_error("steering: angle outside [-90, 90] degrees");

    const double psi = pi * std::sin(deg2rad(theta.value));
    const double scale = 1.0 / std::sqrt(double(n_antennas));
    arma::cx_vec a(n_antennas);
    for (arma::uword n = 0; n < n_antennas; ++n)
        a(n) = std::polar(scale, psi * double(n));
    return a;
}

// Beam-space correlation |a(theta_a)^H a(theta_b)|^2; equals 1 at equal
// angles and follows the squared Dirichlet kernel in sin(theta) difference.
inline double beam_correlation(AngleDeg a, AngleDeg b, arma::uword n_antennas)
{
    const arma::cx_double ip = arma::cdot(steering(a, n_antennas), steering(b, n_antennas));
    return std::norm(ip);
}

} // namespace fdsi
