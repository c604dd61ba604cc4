// Copyright 2026 The RedApt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef REDAPT_CLI_HPP_
#define REDAPT_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace redapt {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Entry point of the redapt command-line tool. args excludes the program name.
/// Subcommands: flops, bench, search, ablate, train.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace redapt

#endif  // REDAPT_CLI_HPP_
