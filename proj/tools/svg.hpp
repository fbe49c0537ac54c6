// Copyright 2026 The uqtsc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "uqtsc/metrics.hpp"

namespace uqtsc::cli {

// Deterministic SVG figures built from evaluation reports. Labels come from the
// report's `uq` tag, falling back to its position.

std::string report_label(const EvalReport& report, std::size_t index);

/// Bin confidence against bin accuracy, one line per report, with the identity diagonal.
std::string reliability_svg(const std::vector<EvalReport>& reports);

/// One bar per label.
std::string bar_svg(const std::string& title, const std::string& y_label, const std::vector<std::string>& labels,
                    const std::vector<double>& values);

/// One point per test sample: entropy against predicted-class probability, coloured by correctness.
std::string entropy_scatter_svg(const std::vector<EvalReport>& reports);

}  // namespace uqtsc::cli
