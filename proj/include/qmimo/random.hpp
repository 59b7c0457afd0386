// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random streams. Every (master seed, phase, trial) triple owns
// its own engine, so a trial's draws do not depend on which thread runs it or
// in which order trials are scheduled.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>

namespace qmimo {

/// Stream families; the numeric values are part of the reproducibility contract.
enum class Phase : std::uint64_t
{
    channel_estimation = 1,
    uplink_data = 2,
    downlink_data = 3,
    distortion = 4,
    projection = 5,
    channel = 6,
    auxiliary = 7,
};

using Engine = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

inline std::uint64_t stream_seed(std::uint64_t master, Phase phase, std::uint64_t index)
{
    std::uint64_t h = detail::splitmix64(master);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(phase));
    return detail::splitmix64(h ^ index);
}

inline Engine make_stream(std::uint64_t master, Phase phase, std::uint64_t index)
{
    return Engine{stream_seed(master, phase, index)};
}

/// Circularly symmetric complex Gaussian sampler, CN(0, variance).
class ComplexNormal
{
  public:
    explicit ComplexNormal(double variance = 1.0) : rail_(0.0, std::sqrt(variance / 2.0)) {}

    std::complex<double> operator()(Engine& engine) { return {rail_(engine), rail_(engine)}; }

    template <class Derived>
    void fill(Engine& engine, Eigen::MatrixBase<Derived>& out)
    {
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = (*this)(engine);
    }

  private:
    boost::random::normal_distribution<double> rail_;  // ziggurat
};

} // namespace qmimo
