#pragma once

#include <iosfwd>

namespace mods::cli {

enum ExitCode { OK = 0, USAGE = 1, IO = 2, NO_GEOMETRY = 3 };

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mods::cli
