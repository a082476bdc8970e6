#pragma once

namespace dcp {

// Entry point for the command-line tool. Returns 0 on success, 1 on a runtime
// failure and 2 on a usage or configuration error.
int cli_main(int argc, char** argv);

}  // namespace dcp
