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

#include "dbp/cli.hpp"

#include "dbp/validation.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace dbp
{

using nlohmann::json;

namespace
{

void check_keys(const json &j, const std::string &path, const std::set<std::string> &allowed)
{
    if (!j.is_object())
        throw ConfigError(path + ": expected an object");
    for (const auto &item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError(path + ": unknown key \"" + item.key() + "\"");
}

template <typename T>
T get(const json &j, const std::string &key, const std::string &path)
{
    try
    {
        return j.at(key).get<T>();
    }
    catch (const json::exception &e)
    {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

std::optional<Real> get_optional_number(const json &j, const std::string &key, const std::string &path)
{
    if (j.at(key).is_null())
        return std::nullopt;
    if (!j.at(key).is_number())
        throw ConfigError(path + "." + key + ": expected a number or null");
    return j.at(key).get<Real>();
}

std::string channel_name(ChannelKind c)
{
    switch (c)
    {
    case ChannelKind::iid:
        return "iid";
    case ChannelKind::file:
        return "file";
    default:
        return "ula";
    }
}

ChannelKind parse_channel(const std::string &s, const std::string &path)
{
    if (s == "ula")
        return ChannelKind::ula;
    if (s == "iid")
        return ChannelKind::iid;
    if (s == "file")
        return ChannelKind::file;
    throw ConfigError(path + ".channel: expected \"ula\", \"iid\" or \"file\", got \"" + s + "\"");
}

} // namespace

json parse_json_text(const std::string &text, const std::string &source)
{
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        // Translate the byte offset into line and column.
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i)
        {
            if (text[i] == '\n')
            {
                ++line;
                col = 1;
            }
            else
                ++col;
        }
        throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

ScenarioSpec scenario_from_json(const json &j, const ScenarioSpec &defaults, const std::string &path)
{
    check_keys(j, path,
               {"antennas", "interferers", "partition", "channel", "channel_file", "antenna_spacing", "snr_db",
                "training_snr_db", "rho_db", "schemes", "alpha"});
    ScenarioSpec s = defaults;
    if (j.contains("antennas"))
        s.antennas = get<Index>(j, "antennas", path);
    if (j.contains("interferers"))
        s.interferers = get<Index>(j, "interferers", path);
    if (j.contains("partition"))
        s.partition = get<std::vector<Index>>(j, "partition", path);
    if (j.contains("channel"))
        s.channel = parse_channel(get<std::string>(j, "channel", path), path);
    if (j.contains("channel_file"))
        s.channel_file = get<std::string>(j, "channel_file", path);
    if (j.contains("antenna_spacing"))
        s.antenna_spacing = get<Real>(j, "antenna_spacing", path);
    if (j.contains("snr_db"))
        s.snr_db = get<Real>(j, "snr_db", path);
    if (j.contains("training_snr_db"))
        s.training_snr_db = get_optional_number(j, "training_snr_db", path);
    if (j.contains("rho_db"))
        s.rho_db = get_optional_number(j, "rho_db", path);
    if (j.contains("schemes"))
        s.schemes = get<std::vector<std::string>>(j, "schemes", path);
    if (j.contains("alpha"))
        s.alpha = get<std::vector<Real>>(j, "alpha", path);
    return s;
}

json scenario_to_json(const ScenarioSpec &s)
{
    json j = {{"antennas", s.antennas},
              {"interferers", s.interferers},
              {"partition", s.partition},
              {"channel", channel_name(s.channel)},
              {"antenna_spacing", s.antenna_spacing},
              {"snr_db", s.snr_db},
              {"training_snr_db", s.training_snr_db ? json(*s.training_snr_db) : json(nullptr)},
              {"rho_db", s.rho_db ? json(*s.rho_db) : json(nullptr)},
              {"schemes", s.schemes},
              {"alpha", s.alpha}};
    if (s.channel == ChannelKind::file)
        j["channel_file"] = s.channel_file;
    return j;
}

ExperimentSpec experiment_from_json(const json &j)
{
    check_keys(j, "config",
               {"experiment", "description", "scenario", "series", "sweep", "trials", "seed", "threads", "analytic"});
    ExperimentSpec spec;
    if (j.contains("experiment"))
        spec.name = get<std::string>(j, "experiment", "config");
    if (j.contains("description"))
        spec.description = get<std::string>(j, "description", "config");
    ScenarioSpec base;
    if (j.contains("scenario"))
        base = scenario_from_json(j.at("scenario"), base, "scenario");
    if (j.contains("series"))
    {
        if (!j.at("series").is_array() || j.at("series").empty())
            throw ConfigError("series: expected a non-empty array");
        for (std::size_t i = 0; i < j.at("series").size(); ++i)
        {
            const json &e = j.at("series")[i];
            const std::string path = "series[" + std::to_string(i) + "]";
            check_keys(e, path, {"label", "scenario"});
            SeriesSpec s;
            s.label = e.contains("label") ? get<std::string>(e, "label", path) : std::string{};
            s.scenario = e.contains("scenario") ? scenario_from_json(e.at("scenario"), base, path + ".scenario") : base;
            spec.series.push_back(std::move(s));
        }
    }
    else
        spec.series.push_back({"", base});

    if (!j.contains("sweep"))
        throw ConfigError("config: missing \"sweep\"");
    const json &sw = j.at("sweep");
    check_keys(sw, "sweep", {"axis", "values", "mc_values"});
    try
    {
        spec.axis = parse_axis(get<std::string>(sw, "axis", "sweep"));
    }
    catch (const ConfigError &)
    {
        throw;
    }
    catch (const InvalidInput &e)
    {
        throw ConfigError(std::string("sweep.axis: ") + e.what());
    }
    spec.values = get<std::vector<Real>>(sw, "values", "sweep");
    if (sw.contains("mc_values") && !sw.at("mc_values").is_null())
        spec.mc_values = get<std::vector<Real>>(sw, "mc_values", "sweep");
    if (j.contains("trials"))
        spec.trials = get<Index>(j, "trials", "config");
    if (j.contains("seed"))
        spec.seed = get<std::uint64_t>(j, "seed", "config");
    if (j.contains("threads"))
        spec.threads = get<unsigned>(j, "threads", "config");
    if (j.contains("analytic"))
    {
        try
        {
            spec.analytic = parse_analytic(get<std::string>(j, "analytic", "config"));
        }
        catch (const ConfigError &)
        {
            throw;
        }
        catch (const InvalidInput &e)
        {
            throw ConfigError(std::string("analytic: ") + e.what());
        }
    }
    try
    {
        spec.check();
    }
    catch (const ConfigError &)
    {
        throw;
    }
    catch (const InvalidInput &e)
    {
        throw ConfigError(e.what());
    }
    return spec;
}

json experiment_to_json(const ExperimentSpec &spec)
{
    json series = json::array();
    for (const SeriesSpec &s : spec.series)
        series.push_back({{"label", s.label}, {"scenario", scenario_to_json(s.scenario)}});
    json sweep = {{"axis", axis_name(spec.axis)}, {"values", spec.values}};
    sweep["mc_values"] = spec.mc_values ? json(*spec.mc_values) : json(nullptr);
    return {{"experiment", spec.name}, {"description", spec.description}, {"series", std::move(series)}, {"sweep", std::move(sweep)},
            {"trials", spec.trials},   {"seed", spec.seed},           {"threads", spec.threads},
            {"analytic", analytic_name(spec.analytic)}};
}

namespace
{

std::vector<Real> range(Real start, Real stop, Real step)
{
    std::vector<Real> v;
    for (int i = 0;; ++i)
    {
        const Real x = start + i * step;
        if (x > stop + 1e-9 * std::abs(step))
            break;
        v.push_back(std::round(x * 1e9) / 1e9);
    }
    return v;
}

std::vector<Real> logspace(Real lo_exp, Real hi_exp, int n)
{
    std::vector<Real> v;
    for (int i = 0; i < n; ++i)
        v.push_back(std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (n - 1)));
    return v;
}

} // namespace

std::vector<std::string> experiment_names() { return {"fig1a", "fig1b", "fig3", "fig4", "fig5", "fig6"}; }

json named_experiment(const std::string &name)
{
    if (name == "fig1")
        return named_experiment("fig1a");
    if (name == "fig1a" || name == "fig1b")
    {
        const bool a = name == "fig1a";
        return {{"experiment", name},
                {"description", a ? "SINR versus signal SNR, training SNR fixed; correlated channel, N=32, M=12, (10,22)"
                                  : "SINR versus training SNR, signal SNR fixed; correlated channel, N=32, M=12, (10,22)"},
                {"scenario",
                 {{"antennas", 32},
                  {"interferers", 12},
                  {"partition", {10, 22}},
                  {"channel", "ula"},
                  {"snr_db", 30},
                  {"training_snr_db", 30},
                  {"schemes", {"lfoc", "lfsc", "lfcc_uniform", "centralized"}}}},
                {"sweep", {{"axis", a ? "snr_db" : "training_snr_db"}, {"values", range(-30, 30, 10)}}},
                {"trials", 5000},
                {"seed", 1}};
    }
    if (name == "fig3")
    {
        std::vector<Real> ratios = logspace(-1, 1, 21);
        std::vector<Real> mc = {ratios[0], ratios[5], ratios[10], ratios[15], ratios[20]};
        json series = json::array();
        for (auto p : std::vector<std::vector<Index>>{{20, 20}, {10, 30}, {30, 10}})
            series.push_back({{"label", "N=(" + std::to_string(p[0]) + "," + std::to_string(p[1]) + ")"},
                              {"scenario", {{"partition", p}}}});
        return {{"experiment", name},
                {"description", "SINR versus alpha_2/alpha_1 for LFCC; correlated channel, N=40, M=15, 30 dB SNRs"},
                {"scenario",
                 {{"antennas", 40},
                  {"interferers", 15},
                  {"partition", {20, 20}},
                  {"channel", "ula"},
                  {"snr_db", 30},
                  {"training_snr_db", 30},
                  {"schemes", {"custom", "lfoc"}},
                  {"alpha", {1, 1}}}},
                {"series", series},
                {"sweep", {{"axis", "alpha_ratio"}, {"values", ratios}, {"mc_values", mc}}},
                {"trials", 1000},
                {"seed", 3}};
    }
    if (name == "fig4")
        return {{"experiment", name},
                {"description", "SINR versus rho with rho_k = rho / N_k; i.i.d. channel, N=72, M=40, (36,36), 30 dB SNRs"},
                {"scenario",
                 {{"antennas", 72},
                  {"interferers", 40},
                  {"partition", {36, 36}},
                  {"channel", "iid"},
                  {"snr_db", 30},
                  {"training_snr_db", 30},
                  {"schemes", {"lfoc", "lfsc", "lfcc_uniform"}}}},
                {"sweep", {{"axis", "rho_db"}, {"values", range(-60, 20, 5)}, {"mc_values", range(-60, 20, 20)}}},
                {"trials", 1000},
                {"seed", 4}};
    if (name == "fig5")
    {
        json series = json::array();
        for (int m : {20, 40, 60})
            series.push_back({{"label", "M=" + std::to_string(m)}, {"scenario", {{"interferers", m}}}});
        return {{"experiment", name},
                {"description", "SINR versus N_1 with N_2 = N - N_1; i.i.d. channel, N=120, K=2, rho_k = sigma^2/N_k"},
                {"scenario",
                 {{"antennas", 120},
                  {"interferers", 40},
                  {"partition", {60, 60}},
                  {"channel", "iid"},
                  {"snr_db", 30},
                  {"training_snr_db", 30},
                  {"schemes", {"lfoc"}}}},
                {"series", series},
                {"sweep", {{"axis", "N1"}, {"values", range(1, 119, 1)}, {"mc_values", {1, 10, 30, 60, 90, 110, 119}}}},
                {"trials", 500},
                {"seed", 5}};
    }
    if (name == "fig6")
        return {{"experiment", name},
                {"description", "SINR versus K with equal splits; i.i.d. channel, N=120, M=40, rho_k = sigma^2/N_k"},
                {"scenario",
                 {{"antennas", 120},
                  {"interferers", 40},
                  {"partition", {120}},
                  {"channel", "iid"},
                  {"snr_db", 30},
                  {"training_snr_db", 30},
                  {"schemes", {"lfoc"}}}},
                {"sweep",
                 {{"axis", "K"},
                  {"values", range(1, 120, 1)},
                  {"mc_values", {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 24, 30, 40, 60, 120}}}},
                {"trials", 500},
                {"seed", 6}};
    throw ConfigError("unknown experiment \"" + name + "\" (expected fig1a, fig1b, fig3, fig4, fig5 or fig6; fig1 is fig1a)");
}

namespace
{

std::string read_file(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_config(const std::string &experiment, const std::string &path)
{
    if (!experiment.empty() && !path.empty())
        throw ConfigError("give either --experiment or a config file, not both");
    if (!experiment.empty())
        return named_experiment(experiment);
    if (path.empty())
        throw ConfigError("no experiment given (use --experiment NAME or a config file)");
    return parse_json_text(read_file(path), path);
}

std::string hex64(std::uint64_t h)
{
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

int cmd_run(const std::string &experiment, const std::string &path, const std::string &out_dir,
            const std::optional<std::uint64_t> &seed, const std::optional<unsigned> &threads,
            const std::optional<Index> &trials, bool quiet, std::ostream &out, std::ostream &err)
{
    json cfg = load_config(experiment, path);
    if (seed)
        cfg["seed"] = *seed;
    if (threads)
        cfg["threads"] = *threads;
    if (trials)
        cfg["trials"] = *trials;
    const ExperimentSpec spec = experiment_from_json(cfg);
    const json canonical = experiment_to_json(spec);

    std::string dir = out_dir;
    if (dir.empty())
    {
        const char *env = std::getenv("DBP_OUTPUT_DIR");
        dir = env && *env ? env : "results";
    }
    std::filesystem::create_directories(dir);

    std::function<void(const std::string &)> progress;
    if (!quiet)
        progress = [&](const std::string &msg) { err << msg << '\n'; };
    const ExperimentResult result = run_experiment(spec, progress);

    const std::filesystem::path csv_path = std::filesystem::path(dir) / (spec.name + ".csv");
    const std::filesystem::path json_path = std::filesystem::path(dir) / (spec.name + ".json");
    {
        std::ofstream csv(csv_path, std::ios::binary);
        write_csv(result, csv);
    }
    {
        json sidecar = result_to_json(result);
        sidecar["config"] = canonical;
        sidecar["config_hash"] = hex64(fnv1a(canonical.dump()));
        std::ofstream js(json_path);
        js << sidecar.dump(2) << '\n';
    }
    out << "wrote " << csv_path.string() << " and " << json_path.string() << '\n';
    if (!result.errors.empty())
    {
        err << "numeric failure at " << result.errors.size() << " sweep point(s):\n";
        for (const std::string &e : result.errors)
            err << "  " << e << '\n';
        return 3;
    }
    return 0;
}

std::vector<Index> divisors_and_n(Index n)
{
    std::vector<Index> ks;
    for (Index k = 1; k <= n; ++k)
        if (n % k == 0)
            ks.push_back(k);
    return ks;
}

int cmd_predict(const std::string &experiment, const std::string &path, bool as_json, std::ostream &out)
{
    json cfg = load_config(experiment, path);
    ExperimentSpec spec = experiment_from_json(cfg);
    spec.mc_values = std::vector<Real>{};
    const ExperimentResult result = run_experiment(spec);

    json report = {{"experiment", spec.name}, {"axis", axis_name(spec.axis)}, {"predictions", json::array()}};
    for (const PointResult &r : result.rows)
        report["predictions"].push_back({{"x", r.x},
                                         {"series", r.series},
                                         {"scheme", r.scheme},
                                         {"analytic_db", std::isfinite(r.analytic) ? json(r.analytic_db()) : json(nullptr)},
                                         {"error", r.error}});

    const ScenarioSpec &s = spec.series.front().scenario;
    if (s.channel == ChannelKind::iid)
    {
        const IidScenario sc = make_iid_scenario(s.interferers, std::vector<Real>(s.partition.begin(), s.partition.end()),
                                                 s.noise(), s.training_noise());
        const Real a = s.noise() / Real(s.interferers);
        const PartitionBounds b = partition_bounds(sc, a);
        json curve = json::array();
        for (const ClusterCountPoint &p :
             cluster_count_curve(s.antennas, s.interferers, s.noise(), s.training_noise(), a, divisors_and_n(s.antennas)))
            curve.push_back({{"K", p.clusters}, {"gamma_db", linear_to_db(p.gamma)}, {"bound_db", linear_to_db(p.bound)}});
        report["iid"] = {{"optimal_rho", optimal_rho(sc)},
                         {"partition_bounds",
                          {{"a", a},
                           {"equal_split_db", linear_to_db(b.gamma_min)},
                           {"single_cluster_db", linear_to_db(b.gamma_max)},
                           {"current_db", linear_to_db(b.gamma_current)},
                           {"max_valid", b.max_valid},
                           {"min_valid", b.min_valid}}},
                         {"cluster_count_curve", curve}};
    }

    if (as_json)
    {
        out << report.dump(2) << '\n';
    }
    else
    {
        out << axis_name(spec.axis) << "  scheme  analytic_db\n";
        for (const PointResult &r : result.rows)
        {
            out << r.x << "  " << (r.series.empty() ? r.scheme : r.scheme + "@" + r.series) << "  ";
            if (std::isfinite(r.analytic))
                out << std::fixed << std::setprecision(4) << r.analytic_db() << std::defaultfloat;
            else
                out << "n/a";
            if (!r.error.empty())
                out << "  (" << r.error << ")";
            out << '\n';
        }
        if (report.contains("iid"))
        {
            const json &i = report["iid"];
            out << "optimal rho_k:";
            for (const auto &r : i["optimal_rho"])
                out << ' ' << r.get<Real>();
            out << "\npartition bounds (a = sigma^2/M): equal split " << i["partition_bounds"]["equal_split_db"].get<Real>()
                << " dB, single cluster " << i["partition_bounds"]["single_cluster_db"].get<Real>() << " dB, current "
                << i["partition_bounds"]["current_db"].get<Real>() << " dB\n";
            out << "cluster count curve (K, dB, bound dB):\n";
            for (const auto &p : i["cluster_count_curve"])
                out << "  " << p["K"].get<Index>() << ' ' << p["gamma_db"].get<Real>() << ' ' << p["bound_db"].get<Real>()
                    << '\n';
        }
    }
    return result.errors.empty() ? 0 : 3;
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Decentralized massive MIMO uplink: Monte Carlo simulation and deterministic SINR prediction", "dbp"};
    app.require_subcommand(1);

    std::string experiment, config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<Index> trials;
    bool quiet = false;
    auto *run = app.add_subcommand("run", "Run an experiment and write <out>/<name>.csv and <out>/<name>.json");
    run->add_option("config", config_path, "JSON configuration file");
    run->add_option("-e,--experiment", experiment, "Named experiment: fig1a, fig1b, fig3, fig4, fig5, fig6");
    run->add_option("-o,--out", out_dir, "Output directory (default: $DBP_OUTPUT_DIR or ./results)");
    run->add_option("--seed", seed, "Override the base seed");
    run->add_option("--threads", threads, "Worker threads (0: all cores)");
    run->add_option("--trials", trials, "Override the number of Monte Carlo trials per point");
    run->add_flag("-q,--quiet", quiet, "No progress output");

    bool as_json = false;
    auto *predict = app.add_subcommand("predict", "Analytic predictions only (no sampling)");
    predict->add_option("config", config_path, "JSON configuration file");
    predict->add_option("-e,--experiment", experiment, "Named experiment");
    predict->add_flag("--json", as_json, "Print the report as JSON");

    std::string level = "fast";
    double tolerance_scale = 1;
    auto *validate = app.add_subcommand("validate", "Run the invariant suites");
    validate->add_option("level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
    validate->add_option("--tolerance-scale", tolerance_scale, "Multiply every tolerance (testing hook)");

    auto *config = app.add_subcommand("config", "Print the canonical configuration of a named experiment");
    config->add_option("-e,--experiment", experiment, "Named experiment")->required();

    app.add_subcommand("list", "List named experiments");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try
    {
        if (run->parsed())
            return cmd_run(experiment, config_path, out_dir, seed, threads, trials, quiet, out, err);
        if (predict->parsed())
            return cmd_predict(experiment, config_path, as_json, out);
        if (validate->parsed())
            return run_validation(level, tolerance_scale, out);
        if (config->parsed())
        {
            out << experiment_to_json(experiment_from_json(named_experiment(experiment))).dump(2) << '\n';
            return 0;
        }
        for (const std::string &n : experiment_names())
            out << n << "  " << named_experiment(n)["description"].get<std::string>() << '\n';
        return 0;
    }
    catch (const InvalidInput &e)
    {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::filesystem::filesystem_error &e)
    {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception &e)
    {
        err << "numeric failure: " << e.what() << '\n';
        return 3;
    }
}

} // namespace dbp
