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


#ifndef DBP_MC_HPP
#define DBP_MC_HPP

#include "dbp/iid.hpp"
#include "dbp/rmt.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dbp
{

enum class ChannelKind
{
    ula, // uniform linear array with the Gaussian angular profile
    iid,
    file
};

enum class SweepAxis
{
    snr_db,
    training_snr_db,
    rho_db,
    first_cluster_size,
    clusters,
    alpha_ratio
};

enum class AnalyticMode
{
    automatic, // closed form for i.i.d. channels, deterministic equivalents otherwise
    rmt,
    iid,
    none
};

std::string axis_name(SweepAxis a);
SweepAxis parse_axis(const std::string &name);
std::string analytic_name(AnalyticMode m);
AnalyticMode parse_analytic(const std::string &name);

// One operating point in human units. Noise powers follow SNR = 1 / power.
struct ScenarioSpec
{
    Index antennas = 32;
    Index interferers = 12;
    std::vector<Index> partition{10, 22};
    ChannelKind channel = ChannelKind::ula;
    std::string channel_file;
    Real antenna_spacing = 1;
    Real snr_db = 30;
    std::optional<Real> training_snr_db = 30; // empty: perfect CSI
    std::optional<Real> rho_db;               // empty: rho_k = sigma^2 / N_k, else rho_k = 10^(rho_db / 10) / N_k
    // lfoc, lfsc, lfcc_uniform, lfcc_proportional, lfcc_matched, custom, centralized
    std::vector<std::string> schemes{"lfoc", "lfsc", "lfcc_uniform"};
    std::vector<Real> alpha; // weights of the custom scheme

    Real noise() const { return db_to_linear(-snr_db); }
    Real training_noise() const { return training_snr_db ? db_to_linear(-*training_snr_db) : 0; }
    void check() const;
};

struct SeriesSpec
{
    std::string label;
    ScenarioSpec scenario;
};

struct ExperimentSpec
{
    std::string name = "custom";
    std::string description;
    std::vector<SeriesSpec> series;
    SweepAxis axis = SweepAxis::snr_db;
    std::vector<Real> values;
    // Sweep values that also get Monte Carlo trials; empty optional means all of them.
    std::optional<std::vector<Real>> mc_values;
    Index trials = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0; // 0: all hardware threads
    AnalyticMode analytic = AnalyticMode::automatic;

    void check() const;
};

// The scenario with the sweep value applied.
ScenarioSpec at_point(const ScenarioSpec &s, SweepAxis axis, Real x);

struct PointResult
{
    Real x = 0;
    std::string series;
    std::string scheme;
    Index n_trials = 0;
    Real mc_mean = std::numeric_limits<Real>::quiet_NaN();
    Real mc_stderr = std::numeric_limits<Real>::quiet_NaN();
    Real analytic = std::numeric_limits<Real>::quiet_NaN();
    Real bound = std::numeric_limits<Real>::quiet_NaN();
    std::string error;

    Real mc_mean_db() const { return linear_to_db(mc_mean); }
    // Delta method: 10 / ln(10) * se / mean.
    Real stderr_db() const { return 10 / std::log(Real(10)) * mc_stderr / mc_mean; }
    Real analytic_db() const { return linear_to_db(analytic); }
};

struct ExperimentResult
{
    std::string name;
    SweepAxis axis = SweepAxis::snr_db;
    bool has_bound = false;
    std::vector<PointResult> rows;
    std::uint64_t seed = 0;
    double wall_seconds = 0;
    unsigned threads = 1;
    std::vector<std::string> errors; // one per failed sweep point
};

struct SchemeTrial
{
    std::vector<Real> sinr; // one entry per requested scheme, same order
};

// Everything one sweep point needs, built once and shared read-only by the trials.
class PointModel
{
  public:
    explicit PointModel(const ScenarioSpec &s);

    const ScenarioSpec &scenario() const { return scenario_; }
    const EstimationModel &estimation() const { return est_; }
    const ReceiverParams &params() const { return params_; }
    Real noise() const { return noise_; }

    // Deterministic equivalents for the scenario's partition, computed on demand.
    const RmtSolution &rmt() const;
    // Same scenario with all antennas in one cluster, for the centralized reference.
    const PointModel &centralized() const;

    // Exact SINR of every requested scheme on one realization.
    std::vector<Real> trial(RngStream &rng, RngStream &rng_centralized) const;

  private:
    ScenarioSpec scenario_;
    Real noise_;
    EstimationModel est_;
    ReceiverParams params_;
    mutable std::optional<RmtSolution> rmt_;
    mutable std::unique_ptr<PointModel> centralized_;
};

// Analytic prediction for a scheme at a point. Returns NaN for AnalyticMode::none.
Real analytic_prediction(const ScenarioSpec &s, const std::string &scheme, AnalyticMode mode, const PointModel *model,
                         std::optional<Real> equal_split_clusters = std::nullopt);

// Shared spatial models are cached by their defining parameters.
SpatialModel build_spatial_model(const ScenarioSpec &s);

ExperimentResult run_experiment(const ExperimentSpec &spec,
                                const std::function<void(const std::string &)> &progress = {});

void write_csv(const ExperimentResult &r, std::ostream &out);
nlohmann::json result_to_json(const ExperimentResult &r);

struct ConvergenceRow
{
    Index antennas = 0;
    Index interferers = 0;
    Index n_trials = 0;
    Real mc_mean = 0;
    Real mc_stderr = 0;
    Real analytic = 0;
    Real gap = 0; // |mc - analytic| / analytic
};

// Scenario s scaled to each N with N_k / M and M / N fixed (partition and M scaled proportionally).
std::vector<ConvergenceRow> convergence_study(const ScenarioSpec &s, const std::vector<Index> &antennas, Index trials,
                                              std::uint64_t seed, unsigned threads = 0);

std::uint64_t fnv1a(const std::string &text);

} // namespace dbp

#endif // DBP_MC_HPP
