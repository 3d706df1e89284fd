#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dmgnn::cli {

/// Exit codes: 0 success, 1 validation or usage error, 2 numeric abort.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace dmgnn::cli
