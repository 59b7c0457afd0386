// SPDX-License-Identifier: Apache-2.0
//
// i.i.d. Rayleigh channels, DFT pilot matrices, and the quantized-pilot
// channel estimate.
//
// Layout convention: a length-M*tau pilot-phase vector is the column-major
// vec of an M x tau matrix, i.e. tau consecutive blocks of M antenna samples.
// The Kronecker-lifted pilot matrices (p_k (x) I_M) are never formed; products
// with them are computed as matrix products on that M x tau view.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "qmimo/random.hpp"

namespace qmimo {

/// tau x K pilot matrix with P^H P = tau I.
struct PilotMatrix
{
    int tau = 0;
    int k_users = 0;
    Eigen::MatrixXcd entries;
};

struct ChannelRealization
{
    Eigen::MatrixXcd entries; ///< M x K, column k is the channel of UE k
};

/// First k_users columns of the tau-point DFT matrix, exp(-j 2 pi t k / tau).
inline PilotMatrix dft_pilots(int tau, int k_users)
{
    if (k_users < 1) throw std::invalid_argument("dft_pilots: need at least one UE");
    if (tau < k_users) throw std::invalid_argument("dft_pilots: pilot length tau must be >= K");
    PilotMatrix p{tau, k_users, Eigen::MatrixXcd(tau, k_users)};
    for (int t = 0; t < tau; ++t)
        for (int k = 0; k < k_users; ++k)
        {
            // Reduce the phase index modulo tau before scaling to keep it exact.
            const auto idx = static_cast<double>((static_cast<std::int64_t>(t) * k) % tau);
            p.entries(t, k) = std::polar(1.0, -2.0 * std::numbers::pi * idx / tau);
        }
    return p;
}

/// Frobenius norm of P^H P - tau I.
inline double orthogonality_error(const PilotMatrix& p)
{
    const Eigen::MatrixXcd gram = p.entries.adjoint() * p.entries;
    return (gram - static_cast<double>(p.tau) * Eigen::MatrixXcd::Identity(p.k_users, p.k_users)).norm();
}

inline ChannelRealization rayleigh_channel(int m, int k_users, Engine& engine)
{
    if (m < 1 || k_users < 1) throw std::invalid_argument("rayleigh_channel: dimensions must be >= 1");
    ChannelRealization h{Eigen::MatrixXcd(m, k_users)};
    ComplexNormal draw;
    draw.fill(engine, h.entries);
    return h;
}

inline ChannelRealization rayleigh_channel(int m, int k_users, std::uint64_t seed)
{
    Engine engine = make_stream(seed, Phase::channel, 0);
    return rayleigh_channel(m, k_users, engine);
}

/// Noise-free pilot-phase signal sqrt(rho) conj(Pbar) h as an M x tau matrix:
/// column t is sqrt(rho) * sum_k conj(p_k[t]) h_k.
inline Eigen::MatrixXcd pilot_signal(const Eigen::MatrixXcd& h, const PilotMatrix& pilots, double rho_bs)
{
    if (h.cols() != pilots.k_users) throw std::invalid_argument("pilot_signal: channel has wrong number of UEs");
    return std::sqrt(rho_bs) * h * pilots.entries.adjoint();
}

/// Pbar_k^T r for every k at once: column k of (M x tau view of r) * P.
inline Eigen::MatrixXcd pilot_despread(const Eigen::MatrixXcd& r, const PilotMatrix& pilots)
{
    if (r.cols() != pilots.tau) throw std::invalid_argument("pilot_despread: expected tau columns");
    return r * pilots.entries;
}

/// Channel estimate (1 / (sqrt(rho) tau)) Pbar^T r, unvec'd to M x K.
inline Eigen::MatrixXcd estimate_channel(const Eigen::MatrixXcd& rce, const PilotMatrix& pilots, double rho_bs)
{
    if (!(rho_bs > 0.0)) throw std::invalid_argument("estimate_channel: rho_bs must be positive");
    return pilot_despread(rce, pilots) / (std::sqrt(rho_bs) * pilots.tau);
}

/// Same estimate from the stacked length-M*tau receive vector.
inline Eigen::MatrixXcd estimate_channel(const Eigen::VectorXcd& rce, const PilotMatrix& pilots, double rho_bs)
{
    if (rce.size() == 0 || rce.size() % pilots.tau != 0)
        throw std::invalid_argument("estimate_channel: receive vector length is not a multiple of tau");
    const Eigen::Index m = rce.size() / pilots.tau;
    const Eigen::Map<const Eigen::MatrixXcd> view(rce.data(), m, pilots.tau);
    return estimate_channel(Eigen::MatrixXcd(view), pilots, rho_bs);
}

inline Eigen::VectorXcd vec(const Eigen::MatrixXcd& a)
{
    return Eigen::Map<const Eigen::VectorXcd>(a.data(), a.size());
}

inline Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, Eigen::Index rows)
{
    if (rows <= 0 || v.size() % rows != 0) throw std::invalid_argument("unvec: incompatible row count");
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), rows, v.size() / rows);
}

} // namespace qmimo
