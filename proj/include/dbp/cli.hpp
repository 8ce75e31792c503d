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


#ifndef DBP_CLI_HPP
#define DBP_CLI_HPP

#include "dbp/mc.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace dbp
{

// Configuration problem, reported with the location in the source text when one is known.
class ConfigError : public InvalidInput
{
  public:
    using InvalidInput::InvalidInput;
};

// Parses JSON text; syntax errors become ConfigError with "source:line:column".
nlohmann::json parse_json_text(const std::string &text, const std::string &source);

// Strict conversion: unknown keys and wrong types are ConfigErrors naming the key path.
// "scenario" holds defaults, each "series" entry is a partial scenario merged on top of it.
ExperimentSpec experiment_from_json(const nlohmann::json &j);
// Canonical form (every series fully resolved); experiment_from_json of it gives the same spec.
nlohmann::json experiment_to_json(const ExperimentSpec &spec);

ScenarioSpec scenario_from_json(const nlohmann::json &j, const ScenarioSpec &defaults = {},
                                const std::string &path = "scenario");
nlohmann::json scenario_to_json(const ScenarioSpec &s);

std::vector<std::string> experiment_names();
// Built-in configuration of a named experiment (fig1a, fig1b, fig3, fig4, fig5, fig6).
nlohmann::json named_experiment(const std::string &name);

// Entry point of the dbp tool. Exit codes: 0 success, 1 validation failure, 2 bad configuration
// or usage, 3 numeric failure.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace dbp

#endif // DBP_CLI_HPP
