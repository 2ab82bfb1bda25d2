// Copyright 2026 The LMS3 Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lms3::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitBundle = 3,
  kExitLookup = 4,
  kExitInvariant = 5,
};

/// Runs the command line `lms3 <args...>`. Diagnostics go to err, help text
/// to out. Returns one of ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace lms3::cli
