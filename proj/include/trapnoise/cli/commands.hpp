#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace trapnoise::cli {

// Runs one CLI invocation. `args` excludes the program name. Returns 0 on
// success, 1 on a module error (reported as JSON on `err`) and 2 on a usage
// error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace trapnoise::cli
