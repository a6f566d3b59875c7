#pragma once

#include <iosfwd>

namespace softgem {

// Entry point of the `softgem` tool. Subcommands:
//   run        --config FILE [--seed N] --out DIR [--jobs N]
//   suite      --configs DIR --out DIR [--jobs N]
//   search-eps --config FILE --out DIR [--points N] [--repeats M] [--jobs N]
//              [--objective parabola:PEAK]
//   metrics    --record FILE [--out FILE.csv]
// Returns 0 on success; prints a diagnostic to `err` and returns nonzero
// otherwise.
int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace softgem
