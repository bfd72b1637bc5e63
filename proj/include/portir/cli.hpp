// Copyright 2026 The portir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace portir {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIntervention = 3;

/// Entry point of the `portir` command. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace portir
