#pragma once

#include <iosfwd>

namespace locov {

/// Exit codes: 0 success or PASS, 1 a validation FAIL, 2 usage, schema or
/// cap errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace locov
