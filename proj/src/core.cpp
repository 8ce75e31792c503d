// SPDX-License-Identifier: Apache-2.0
//
// dbp - decentralized baseband processing for massive MIMO uplink
// Copyright (C) 2026 The dbp authors
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

#include "dbp/core.hpp"

#include <algorithm>

namespace dbp
{

Partition::Partition(std::vector<Index> cluster_sizes) : sizes_(std::move(cluster_sizes))
{
    if (sizes_.empty())
        throw InvalidInput("Partition: at least one cluster is required");
    offsets_.reserve(sizes_.size());
    for (Index s : sizes_)
    {
        if (s < 0)
            throw InvalidInput("Partition: negative cluster size");
        offsets_.push_back(antennas_);
        antennas_ += s;
    }
    if (antennas_ == 0)
        throw InvalidInput("Partition: no antennas");
}

Partition Partition::balanced(Index antennas, Index clusters)
{
    if (clusters < 1 || antennas < clusters)
        throw InvalidInput("Partition::balanced: need 1 <= K <= N");
    std::vector<Index> sizes(static_cast<std::size_t>(clusters), antennas / clusters);
    const Index extra = antennas % clusters;
    for (Index k = 0; k < extra; ++k)
        ++sizes[static_cast<std::size_t>(clusters - 1 - k)];
    return Partition(std::move(sizes));
}

bool Partition::has_empty_cluster() const
{
    return std::any_of(sizes_.begin(), sizes_.end(), [](Index s) { return s == 0; });
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream)
    : normal_(Real(0), std::sqrt(Real(0.5)))
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
    engine_.seed(seq);
}

Real RngStream::uniform(Real lo, Real hi)
{
    return std::uniform_real_distribution<Real>(lo, hi)(engine_);
}

Vector sample_standard_complex_gaussian(Index n, RngStream &rng)
{
    Vector z(n);
    for (Index i = 0; i < n; ++i)
    {
        const Real re = rng.normal();
        const Real im = rng.normal();
        z[i] = Complex(re, im);
    }
    return z;
}

Matrix sample_standard_complex_gaussian(Index rows, Index cols, RngStream &rng)
{
    Matrix Z(rows, cols);
    for (Index c = 0; c < cols; ++c)
        Z.col(c) = sample_standard_complex_gaussian(rows, rng);
    return Z;
}

} // namespace dbp
