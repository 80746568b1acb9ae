#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcqkit {

/// Subcommands: info, metric, extract, train, rfe, predict, evaluate,
/// crossval. Returns 0 on success, 1 on usage errors, 2 on data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace pcqkit
