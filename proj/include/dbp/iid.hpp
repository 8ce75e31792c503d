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


#ifndef DBP_IID_HPP
#define DBP_IID_HPP

#include "dbp/fusion.hpp"

#include <vector>

namespace dbp
{

// Closed forms for R_j = I. Cluster sizes are real-valued so that equal splits of N into any K
// clusters can be evaluated exactly; a zero size is a cluster that contributes nothing.
struct IidScenario
{
    Index interferers = 1; // M
    std::vector<Real> sizes;
    Real noise = 1e-3;
    Real training_noise = 1e-3;
    std::vector<Real> rho;
    RowVector alpha; // used by the custom LFCC scheme

    Index clusters() const { return static_cast<Index>(sizes.size()); }
    Real antennas() const;
    Real c(Index k) const { return sizes.at(static_cast<std::size_t>(k)) / Real(interferers); }
    void check() const;
};

// Scenario with rho_k = sigma^2 / N_k.
IidScenario make_iid_scenario(Index interferers, std::vector<Real> sizes, Real noise, Real training_noise);

// Positive root of A d^2 + (A + 1/c - 1) d - 1 = 0, A = rho (s + 1) + (M + 1) s / (M c). Zero for c = 0.
Real iid_delta(Index k, const IidScenario &sc);
Real iid_varpi(Index k, const IidScenario &sc);

// LFOC and LFSC: sum_k delta_k / varpi_k. LFCC schemes use the constant-weight ratio with
// alpha from the scheme (matched: (1 + delta_k) / varpi_k; custom: sc.alpha).
Real iid_sinr(const IidScenario &sc, Scheme scheme = Scheme::lfoc);

// sigma^2 / N_k per cluster (sigma^2 for an empty cluster, where rho has no effect).
std::vector<Real> optimal_rho(const IidScenario &sc);

struct PartitionBounds
{
    Real gamma_min = 0;     // equal split
    Real gamma_max = 0;     // all antennas in one cluster
    Real gamma_current = 0; // the scenario's own partition
    bool max_valid = false; // sigma^2 / M <= a
    bool min_valid = false; // additionally a <= 2 sigma^2 / M + (M + 1) s / (M (s + 1))
};

// Evaluates the three partitions with rho_k = a / c_k.
PartitionBounds partition_bounds(const IidScenario &sc, Real a);

// sigma^2 / M <= a, the range in which the partition and cluster-count orderings hold.
bool partition_bound_range(const IidScenario &sc, Real a, bool with_min);

// N / ((sigma^2 + M)(s + 1) + s)
Real iid_lower_bound(Real antennas, Index interferers, Real noise, Real training_noise);

struct ClusterCountPoint
{
    Index clusters = 1;
    Real gamma = 0;
    Real bound = 0;
};

// Equal split N / K per cluster with rho_k = a / c_k.
std::vector<ClusterCountPoint> cluster_count_curve(Index antennas, Index interferers, Real noise, Real training_noise,
                                                   Real a, const std::vector<Index> &cluster_counts);

} // namespace dbp

#endif // DBP_IID_HPP
