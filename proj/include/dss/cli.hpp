#pragma once

#include <iosfwd>

namespace dss::harness {

/// Command-line entry point. Returns 0 on success, 2 on a configuration or
/// usage error (message and usage go to `err`).
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dss::harness
