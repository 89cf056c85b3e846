#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cohortsbi {

// Command-line surface: simulate, infer, cross-validate, ppc,
// validate-micro, fit-priors. `args` excludes the program name. Returns the
// process exit status; failures print a single line on `err` of the form
//   error: <class>: <message>
// with class one of usage, io, format, consistency, config, domain, numeric,
// leakage, internal.
int cli_dispatch(std::vector<std::string> args, std::ostream& out,
                 std::ostream& err);

}  // namespace cohortsbi
