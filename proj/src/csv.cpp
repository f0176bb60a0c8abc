// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#include "qdsweep/csv.hpp"

#include <cmath>
#include <cstdio>

namespace qds::csv {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_seconds(double v, TimingMode mode) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", mode == TimingMode::off ? 0.0 : v);
  return buf;
}

}  // namespace qds::csv
