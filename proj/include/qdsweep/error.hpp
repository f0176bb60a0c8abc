// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright 2026 the qdsweep authors

#pragma once

#include <stdexcept>
#include <string>

namespace qds {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A rejection decoder ran out of attempts. Carries the observed
/// acceptance rate so callers can report or adjust the threshold.
class RejectionError : public Error {
 public:
  RejectionError(const std::string& what, long attempts, double acceptance_rate)
      : Error(what), attempts(attempts), acceptance_rate(acceptance_rate) {}

  long attempts;
  double acceptance_rate;
};

}  // namespace qds
