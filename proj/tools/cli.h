// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. `run` never calls exit(); it returns the process exit
// code (0 success, 2 usage or input error, 3 numeric failure).

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pmlam::cli {

int run(const std::vector<std::string>& args);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pmlam::cli
