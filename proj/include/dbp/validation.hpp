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


#ifndef DBP_VALIDATION_HPP
#define DBP_VALIDATION_HPP

#include "dbp/core.hpp"

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace dbp
{

struct CheckOutcome
{
    bool passed = false;
    std::string detail;
};

// A named invariant. The argument scales every tolerance the check uses; a scale of 1 is nominal.
struct Check
{
    std::string id;
    std::string name;
    std::function<CheckOutcome(Real tolerance_scale)> run;
};

struct CheckResult
{
    std::string id;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0;
};

// Algebraic identities and closed-form versus solver agreement; runs in seconds.
std::vector<Check> fast_checks();
// The ten acceptance criteria, including the Monte Carlo versus deterministic-equivalent suites.
std::vector<Check> acceptance_checks();

// Runs checks in order, printing one "[PASS]"/"[FAIL]" line per check as it finishes. Exceptions count as failures.
std::vector<CheckResult> run_checks(const std::vector<Check> &checks, Real tolerance_scale, std::ostream &out);

// "fast" or "full" (fast plus the acceptance criteria). Returns 0 iff everything passed, 1 otherwise.
int run_validation(const std::string &level, Real tolerance_scale, std::ostream &out);

} // namespace dbp

#endif // DBP_VALIDATION_HPP
