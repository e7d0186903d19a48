#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace qmlcp {

// Exit codes: 0 success, 2 configuration (bad flags, unknown family,
// out-of-domain parameters), 3 input/output (missing file, malformed CSV),
// 4 numerical failure, 1 anything else.
enum ExitCode { kExitOk = 0, kExitOther = 1, kExitConfig = 2, kExitIo = 3, kExitNumeric = 4 };

int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);
int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
             std::ostream& err = std::cerr);

}  // namespace qmlcp
