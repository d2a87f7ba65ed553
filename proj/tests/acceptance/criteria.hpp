// criteria.hpp — acceptance criteria runner.

#pragma once

#include <string>
#include <vector>

namespace nshops::acceptance {

// Runs the selected criteria (all when empty); returns the number of failures.
int run_all(const std::string& config_dir, const std::vector<int>& selected);

} // namespace nshops::acceptance
