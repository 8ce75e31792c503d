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

#include "dbp/mc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <map>
#include <mutex>
#include <thread>

namespace dbp
{

namespace
{

constexpr std::pair<SweepAxis, const char *> axis_names[] = {
    {SweepAxis::snr_db, "snr_db"},
    {SweepAxis::training_snr_db, "training_snr_db"},
    {SweepAxis::rho_db, "rho_db"},
    {SweepAxis::first_cluster_size, "N1"},
    {SweepAxis::clusters, "K"},
    {SweepAxis::alpha_ratio, "alpha_ratio"},
};

constexpr std::pair<AnalyticMode, const char *> analytic_names[] = {
    {AnalyticMode::automatic, "auto"},
    {AnalyticMode::rmt, "rmt"},
    {AnalyticMode::iid, "iid"},
    {AnalyticMode::none, "none"},
};

bool is_integer(Real x) { return std::isfinite(x) && x == std::round(x); }

bool known_scheme(const std::string &s)
{
    if (s == "centralized")
        return true;
    try
    {
        parse_scheme(s);
        return true;
    }
    catch (const InvalidInput &)
    {
        return false;
    }
}

} // namespace

std::string axis_name(SweepAxis a)
{
    for (const auto &[axis, name] : axis_names)
        if (axis == a)
            return name;
    return "unknown";
}

SweepAxis parse_axis(const std::string &name)
{
    for (const auto &[axis, n] : axis_names)
        if (name == n)
            return axis;
    throw InvalidInput("unknown sweep axis \"" + name + "\" (expected snr_db, training_snr_db, rho_db, N1, K or alpha_ratio)");
}

std::string analytic_name(AnalyticMode m)
{
    for (const auto &[mode, name] : analytic_names)
        if (mode == m)
            return name;
    return "unknown";
}

AnalyticMode parse_analytic(const std::string &name)
{
    for (const auto &[mode, n] : analytic_names)
        if (name == n)
            return mode;
    throw InvalidInput("unknown analytic mode \"" + name + "\" (expected auto, rmt, iid or none)");
}

void ScenarioSpec::check() const
{
    if (antennas < 1)
        throw InvalidInput("scenario: antennas must be at least 1");
    if (interferers < 1)
        throw InvalidInput("scenario: interferers must be at least 1");
    Index total = 0;
    for (Index n : partition)
    {
        if (n < 1)
            throw InvalidInput("scenario: every cluster needs at least one antenna for simulation");
        total += n;
    }
    if (partition.empty() || total != antennas)
        throw InvalidInput("scenario: partition sizes must sum to antennas (" + std::to_string(antennas) + ")");
    if (channel == ChannelKind::file && channel_file.empty())
        throw InvalidInput("scenario: channel file path is empty");
    if (!(antenna_spacing > 0))
        throw InvalidInput("scenario: antenna_spacing must be positive");
    if (!std::isfinite(snr_db) || (training_snr_db && !std::isfinite(*training_snr_db)) ||
        (rho_db && !std::isfinite(*rho_db)))
        throw InvalidInput("scenario: SNR and rho values must be finite");
    if (schemes.empty())
        throw InvalidInput("scenario: at least one scheme is required");
    for (const std::string &s : schemes)
        if (!known_scheme(s))
            throw InvalidInput("scenario: unknown scheme \"" + s + "\"");
    if (std::find(schemes.begin(), schemes.end(), "custom") != schemes.end() &&
        static_cast<Index>(alpha.size()) != static_cast<Index>(partition.size()))
        throw InvalidInput("scenario: the custom scheme needs one alpha per cluster");
}

void ExperimentSpec::check() const
{
    if (series.empty())
        throw InvalidInput("experiment: at least one series is required");
    if (values.empty())
        throw InvalidInput("experiment: the sweep has no values");
    if (trials < 1)
        throw InvalidInput("experiment: trials must be at least 1");
    for (Real x : values)
        if (!std::isfinite(x))
            throw InvalidInput("experiment: sweep values must be finite");
    for (const SeriesSpec &s : series)
    {
        for (Real x : values)
        {
            if (axis == SweepAxis::first_cluster_size &&
                (!is_integer(x) || x < 1 || x > Real(s.scenario.antennas - 1) || s.scenario.partition.size() != 2))
                throw InvalidInput("experiment: N1 sweep needs two clusters and integer values in [1, N-1]");
            if (axis == SweepAxis::clusters && (!is_integer(x) || x < 1 || x > Real(s.scenario.antennas)))
                throw InvalidInput("experiment: K sweep needs integer values in [1, N]");
            if (axis == SweepAxis::alpha_ratio && (s.scenario.partition.size() != 2 || !(x > 0)))
                throw InvalidInput("experiment: alpha_ratio sweep needs two clusters and positive values");
            at_point(s.scenario, axis, x).check();
        }
    }
}

ScenarioSpec at_point(const ScenarioSpec &s, SweepAxis axis, Real x)
{
    ScenarioSpec out = s;
    switch (axis)
    {
    case SweepAxis::snr_db:
        out.snr_db = x;
        break;
    case SweepAxis::training_snr_db:
        out.training_snr_db = x;
        break;
    case SweepAxis::rho_db:
        out.rho_db = x;
        break;
    case SweepAxis::first_cluster_size:
        out.partition = {static_cast<Index>(x), s.antennas - static_cast<Index>(x)};
        break;
    case SweepAxis::clusters:
        out.partition = Partition::balanced(s.antennas, static_cast<Index>(x)).sizes();
        break;
    case SweepAxis::alpha_ratio:
        out.alpha = {1, x};
        if (std::find(out.schemes.begin(), out.schemes.end(), "custom") == out.schemes.end())
            out.schemes.push_back("custom");
        break;
    }
    return out;
}

SpatialModel build_spatial_model(const ScenarioSpec &s)
{
    static std::mutex mutex;
    static std::map<std::string, SpatialModel> cache;
    const Partition p(s.partition);
    const std::string key = std::to_string(static_cast<int>(s.channel)) + "|" + std::to_string(s.antennas) + "|" +
                            std::to_string(s.interferers) + "|" + std::to_string(s.antenna_spacing) + "|" +
                            s.channel_file;
    {
        std::lock_guard lock(mutex);
        auto it = cache.find(key);
        if (it != cache.end())
            return it->second.repartitioned(p);
    }
    const Partition whole({s.antennas});
    SpatialModel model = [&] {
        switch (s.channel)
        {
        case ChannelKind::iid:
            return iid_spatial_model(s.antennas, s.interferers, whole);
        case ChannelKind::file: {
            SpatialModel m = load_spatial_model(s.channel_file);
            if (m.antennas() != s.antennas || m.interferers() != s.interferers)
                throw InvalidInput("channel file " + s.channel_file + " holds N=" + std::to_string(m.antennas()) +
                                   ", M=" + std::to_string(m.interferers()) + ", which does not match the scenario");
            return m.repartitioned(whole);
        }
        default:
            return ula_spatial_model(s.antennas, s.interferers, whole, s.antenna_spacing);
        }
    }();
    std::lock_guard lock(mutex);
    cache.emplace(key, model);
    return model.repartitioned(p);
}

namespace
{

ReceiverParams make_params(const ScenarioSpec &s, const SpatialModel &model)
{
    if (!s.rho_db)
        return default_params(model, s.noise(), s.training_noise());
    std::vector<Real> rho;
    for (Index n : s.partition)
        rho.push_back(db_to_linear(*s.rho_db) / Real(n));
    return params_with_rho(model, s.training_noise(), std::move(rho));
}

} // namespace

PointModel::PointModel(const ScenarioSpec &s)
    : scenario_((s.check(), s)), noise_(s.noise()),
      est_(build_estimation_model(build_spatial_model(s), s.training_noise())),
      params_(make_params(s, est_.spatial()))
{
}

const RmtSolution &PointModel::rmt() const
{
    if (!rmt_)
        rmt_ = deterministic_sinr(est_, params_, noise_);
    return *rmt_;
}

const PointModel &PointModel::centralized() const
{
    if (!centralized_)
    {
        ScenarioSpec c = scenario_;
        c.partition = {c.antennas};
        c.schemes = {"lfoc"};
        c.alpha.clear();
        centralized_ = std::make_unique<PointModel>(c);
    }
    return *centralized_;
}

std::vector<Real> PointModel::trial(RngStream &rng, RngStream &rng_centralized) const
{
    const Partition &p = est_.partition();
    const ChannelRealization real = sample_estimated_channel(est_, rng);
    const LocalReceivers recv = build_local_receivers(real.estimated, p, params_);
    const SinrStatistics stats = sinr_statistics(recv, real, est_, noise_);

    std::vector<Real> out;
    out.reserve(scenario_.schemes.size());
    for (const std::string &name : scenario_.schemes)
    {
        if (name == "centralized")
        {
            const PointModel &c = centralized();
            const ChannelRealization rc = sample_estimated_channel(c.est_, rng_centralized);
            const LocalReceivers recv_c = build_local_receivers(rc.estimated, c.est_.partition(), c.params_);
            out.push_back(optimal_sinr(sinr_statistics(recv_c, rc, c.est_, noise_)));
            continue;
        }
        RowVector alpha;
        switch (parse_scheme(name))
        {
        case Scheme::lfoc:
            alpha = lfoc_weights(stats).alpha;
            break;
        case Scheme::lfsc:
            alpha = lfsc_weights(lfsc_intermediates(recv, real, est_, noise_)).alpha;
            break;
        case Scheme::lfcc_uniform:
            alpha = lfcc_weights(p, LfccMode::uniform).alpha;
            break;
        case Scheme::lfcc_proportional:
            alpha = lfcc_weights(p, LfccMode::proportional).alpha;
            break;
        case Scheme::lfcc_matched:
            alpha = lfcc_matched_weights(rmt()).alpha;
            break;
        case Scheme::custom:
            alpha = Eigen::Map<const RealVector>(scenario_.alpha.data(), static_cast<Index>(scenario_.alpha.size()))
                        .transpose()
                        .cast<Complex>();
            break;
        }
        out.push_back(exact_sinr(alpha, stats).gamma);
    }
    return out;
}

Real analytic_prediction(const ScenarioSpec &s, const std::string &scheme, AnalyticMode mode, const PointModel *model,
                         std::optional<Real> equal_split_clusters)
{
    if (mode == AnalyticMode::none)
        return std::numeric_limits<Real>::quiet_NaN();
    const bool use_iid = mode == AnalyticMode::iid || (mode == AnalyticMode::automatic && s.channel == ChannelKind::iid);
    if (use_iid)
    {
        if (s.channel != ChannelKind::iid)
            throw InvalidInput("analytic mode iid requires the i.i.d. channel model");
        IidScenario sc;
        sc.interferers = s.interferers;
        sc.noise = s.noise();
        sc.training_noise = s.training_noise();
        if (scheme == "centralized")
            sc.sizes = {Real(s.antennas)};
        else if (equal_split_clusters)
            sc.sizes.assign(static_cast<std::size_t>(*equal_split_clusters), Real(s.antennas) / *equal_split_clusters);
        else
            for (Index n : s.partition)
                sc.sizes.push_back(Real(n));
        for (Real n : sc.sizes)
            sc.rho.push_back(s.rho_db ? db_to_linear(*s.rho_db) / n : sc.noise / n);
        if (scheme == "custom")
            sc.alpha = Eigen::Map<const RealVector>(s.alpha.data(), static_cast<Index>(s.alpha.size())).transpose().cast<Complex>();
        return iid_sinr(sc, scheme == "centralized" ? Scheme::lfoc : parse_scheme(scheme));
    }

    if (model == nullptr)
        throw InvalidInput("analytic_prediction: deterministic equivalents need a point model");
    if (scheme == "centralized")
        return model->centralized().rmt().gamma_lfoc;
    const RmtSolution &sol = model->rmt();
    const Partition p(s.partition);
    switch (parse_scheme(scheme))
    {
    case Scheme::lfoc:
        return sol.gamma_lfoc;
    case Scheme::lfsc:
        return sol.gamma_lfsc;
    case Scheme::lfcc_uniform:
        return lfcc_sinr(sol, lfcc_weights(p, LfccMode::uniform).alpha);
    case Scheme::lfcc_proportional:
        return lfcc_sinr(sol, lfcc_weights(p, LfccMode::proportional).alpha);
    case Scheme::lfcc_matched:
        return lfcc_sinr(sol, lfcc_matched_weights(sol).alpha);
    case Scheme::custom:
        return lfcc_sinr(sol, Eigen::Map<const RealVector>(s.alpha.data(), static_cast<Index>(s.alpha.size()))
                                  .transpose()
                                  .cast<Complex>());
    }
    return std::numeric_limits<Real>::quiet_NaN();
}

namespace
{

struct TrialBatch
{
    std::vector<std::vector<Real>> values; // [trial][scheme]
    std::string error;                     // first failure by trial index
};

TrialBatch run_trials(const PointModel &pm, Index trials, std::uint64_t seed, std::uint64_t point, unsigned threads)
{
    // Lazily built members must exist before the workers share the model.
    const auto &schemes = pm.scenario().schemes;
    if (std::find(schemes.begin(), schemes.end(), "lfcc_matched") != schemes.end())
        pm.rmt();
    if (std::find(schemes.begin(), schemes.end(), "centralized") != schemes.end())
        pm.centralized();

    TrialBatch batch;
    batch.values.resize(static_cast<std::size_t>(trials));
    std::vector<std::string> errors(static_cast<std::size_t>(trials));
    std::atomic<Index> next{0};
    auto worker = [&] {
        for (Index t = next++; t < trials; t = next++)
        {
            const auto ti = static_cast<std::size_t>(t);
            try
            {
                RngStream rng(seed, 2 * point, static_cast<std::uint64_t>(t));
                RngStream rng_c(seed, 2 * point + 1, static_cast<std::uint64_t>(t));
                batch.values[ti] = pm.trial(rng, rng_c);
            }
            catch (const std::exception &e)
            {
                errors[ti] = "trial " + std::to_string(t) + ": " + e.what();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(trials)));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
        t.join();
    for (const std::string &e : errors)
        if (!e.empty())
        {
            batch.error = e;
            break;
        }
    return batch;
}

// Mean and standard error, summed in trial order.
std::pair<Real, Real> mean_stderr(const std::vector<std::vector<Real>> &values, std::size_t scheme)
{
    const Real n = Real(values.size());
    Real sum = 0;
    for (const auto &v : values)
        sum += v[scheme];
    const Real mean = sum / n;
    if (values.size() < 2)
        return {mean, 0};
    Real ss = 0;
    for (const auto &v : values)
        ss += (v[scheme] - mean) * (v[scheme] - mean);
    return {mean, std::sqrt(ss / (n - 1) / n)};
}

unsigned resolve_threads(unsigned threads)
{
    if (threads > 0)
        return threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

bool contains(const std::vector<Real> &xs, Real x)
{
    return std::any_of(xs.begin(), xs.end(), [&](Real y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x)); });
}

} // namespace

ExperimentResult run_experiment(const ExperimentSpec &spec, const std::function<void(const std::string &)> &progress)
{
    spec.check();
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    result.name = spec.name;
    result.axis = spec.axis;
    result.seed = spec.seed;
    result.threads = resolve_threads(spec.threads);
    result.has_bound = spec.axis == SweepAxis::clusters;

    for (std::size_t si = 0; si < spec.series.size(); ++si)
    {
        const SeriesSpec &series = spec.series[si];
        for (std::size_t vi = 0; vi < spec.values.size(); ++vi)
        {
            const Real x = spec.values[vi];
            const std::uint64_t point = si * spec.values.size() + vi;
            const ScenarioSpec s = at_point(series.scenario, spec.axis, x);
            const bool do_mc = !spec.mc_values || contains(*spec.mc_values, x);
            const bool iid_analytic = spec.analytic == AnalyticMode::iid ||
                                      (spec.analytic == AnalyticMode::automatic && s.channel == ChannelKind::iid);
            const std::optional<Real> equal_split =
                spec.axis == SweepAxis::clusters && iid_analytic ? std::optional<Real>(x) : std::nullopt;

            std::vector<PointResult> rows;
            for (const std::string &scheme : s.schemes)
            {
                PointResult r;
                r.x = x;
                r.series = series.label;
                r.scheme = scheme;
                if (result.has_bound)
                    r.bound = iid_lower_bound(Real(s.antennas), s.interferers, s.noise(), s.training_noise());
                rows.push_back(std::move(r));
            }

            std::string error;
            try
            {
                std::unique_ptr<PointModel> pm;
                if (do_mc || (!iid_analytic && spec.analytic != AnalyticMode::none))
                    pm = std::make_unique<PointModel>(s);
                for (PointResult &r : rows)
                    r.analytic = analytic_prediction(s, r.scheme, spec.analytic, pm.get(), equal_split);
                if (do_mc)
                {
                    TrialBatch batch = run_trials(*pm, spec.trials, spec.seed, point, result.threads);
                    if (!batch.error.empty())
                        throw NumericError(batch.error);
                    for (std::size_t i = 0; i < rows.size(); ++i)
                    {
                        auto [mean, se] = mean_stderr(batch.values, i);
                        rows[i].mc_mean = mean;
                        rows[i].mc_stderr = se;
                        rows[i].n_trials = spec.trials;
                    }
                }
            }
            catch (const std::exception &e)
            {
                error = e.what();
            }
            if (!error.empty())
            {
                const std::string msg = (series.label.empty() ? "" : series.label + ", ") + axis_name(spec.axis) + "=" +
                                        std::to_string(x) + ": " + error;
                result.errors.push_back(msg);
                for (PointResult &r : rows)
                {
                    r.error = error;
                    r.n_trials = 0;
                    r.mc_mean = r.mc_stderr = std::numeric_limits<Real>::quiet_NaN();
                }
            }
            if (progress)
                progress(spec.name + (series.label.empty() ? "" : " [" + series.label + "]") + " " +
                         axis_name(spec.axis) + "=" + std::to_string(x) + (error.empty() ? "" : " FAILED"));
            for (PointResult &r : rows)
                result.rows.push_back(std::move(r));
        }
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

namespace
{

std::string cell(Real x)
{
    if (!std::isfinite(x))
        return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

void write_csv(const ExperimentResult &r, std::ostream &out)
{
    out << axis_name(r.axis) << ",scheme,mc_mean_db,stderr_db,analytic_db" << (r.has_bound ? ",bound_db" : "")
        << ",n_trials\r\n";
    for (const PointResult &p : r.rows)
    {
        const std::string scheme = p.series.empty() ? p.scheme : p.scheme + "@" + p.series;
        out << cell(p.x) << ',' << csv_field(scheme) << ',' << (p.n_trials > 0 ? cell(p.mc_mean_db()) : "") << ','
            << (p.n_trials > 1 ? cell(p.stderr_db()) : "") << ',' << cell(p.analytic_db());
        if (r.has_bound)
            out << ',' << cell(linear_to_db(p.bound));
        out << ',' << p.n_trials << "\r\n";
    }
}

nlohmann::json result_to_json(const ExperimentResult &r)
{
    auto num = [](Real x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    nlohmann::json rows = nlohmann::json::array();
    for (const PointResult &p : r.rows)
    {
        nlohmann::json row = {{"x", p.x},
                              {"series", p.series},
                              {"scheme", p.scheme},
                              {"n_trials", p.n_trials},
                              {"mc_mean", num(p.mc_mean)},
                              {"mc_stderr", num(p.mc_stderr)},
                              {"mc_mean_db", num(p.n_trials > 0 ? p.mc_mean_db() : NAN)},
                              {"stderr_db", num(p.n_trials > 1 ? p.stderr_db() : NAN)},
                              {"analytic", num(p.analytic)},
                              {"analytic_db", num(p.analytic_db())}};
        if (r.has_bound)
            row["bound_db"] = num(linear_to_db(p.bound));
        if (!p.error.empty())
            row["error"] = p.error;
        rows.push_back(std::move(row));
    }
    return {{"experiment", r.name},
            {"axis", axis_name(r.axis)},
            {"seed", r.seed},
            {"threads", r.threads},
            {"wall_seconds", r.wall_seconds},
            {"rate_log_base", 2},
            {"errors", r.errors},
            {"rows", std::move(rows)}};
}

std::vector<ConvergenceRow> convergence_study(const ScenarioSpec &s, const std::vector<Index> &antennas, Index trials,
                                              std::uint64_t seed, unsigned threads)
{
    s.check();
    std::vector<ConvergenceRow> out;
    for (std::size_t i = 0; i < antennas.size(); ++i)
    {
        const Real f = Real(antennas[i]) / Real(s.antennas);
        ScenarioSpec t = s;
        t.antennas = antennas[i];
        t.interferers = std::max<Index>(1, static_cast<Index>(std::lround(Real(s.interferers) * f)));
        Index used = 0;
        for (std::size_t k = 0; k + 1 < t.partition.size(); ++k)
        {
            t.partition[k] = std::max<Index>(1, static_cast<Index>(std::lround(Real(s.partition[k]) * f)));
            used += t.partition[k];
        }
        t.partition.back() = t.antennas - used;
        t.schemes = {"lfoc"};
        PointModel pm(t);
        TrialBatch batch = run_trials(pm, trials, seed, i, resolve_threads(threads));
        if (!batch.error.empty())
            throw NumericError("convergence_study: N=" + std::to_string(t.antennas) + ": " + batch.error);
        ConvergenceRow row;
        row.antennas = t.antennas;
        row.interferers = t.interferers;
        row.n_trials = trials;
        std::tie(row.mc_mean, row.mc_stderr) = mean_stderr(batch.values, 0);
        row.analytic = analytic_prediction(t, "lfoc", AnalyticMode::automatic, &pm);
        row.gap = std::abs(row.mc_mean - row.analytic) / row.analytic;
        out.push_back(row);
    }
    return out;
}

std::uint64_t fnv1a(const std::string &text)
{
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text)
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace dbp
