// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <string>

namespace qds::csv {

/// Wall-clock columns are environment-dependent; `off` writes zeros so that
/// artifacts become pure functions of (config, seeds).
enum class TimingMode { wall, off };

/// Stable numeric formatting for CSV cells ("%.10g"; NaN prints as "nan").
std::string fmt(double v);

/// Seconds column: "%.6f", zeroed under TimingMode::off.
std::string fmt_seconds(double v, TimingMode mode);

}  // namespace qds::csv
