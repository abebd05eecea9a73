#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace attnspec::cli {

/// Exit status: 0 success, 2 configuration error, 1 internal consistency failure.
int run(int argc, char** argv);

/// Same, with explicit arguments (program name excluded) and streams.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace attnspec::cli
