#pragma once
// fermichain command line. Exit codes: 0 success, 2 a checked property
// failed (residual above tolerance), 1 usage or input error.

#include <ostream>
#include <string>
#include <vector>

namespace fermichain {

// args without the program name
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fermichain
