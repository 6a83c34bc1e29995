#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scgmm::cli {

/// Exit codes: 0 success, 2 usage/schema/precondition error, 3 numerical
/// failure. Errors are reported as one JSON line on `err`:
/// {"error":"<kind>","message":"..."}.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNumerical = 3;

/// Runs the tool with argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace scgmm::cli
