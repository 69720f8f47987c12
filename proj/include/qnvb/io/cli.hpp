#pragma once

namespace qnvb::io {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point for the `qnvb` command line: fit, advise, readout-sim,
/// parse-check.
int run_cli(int argc, char** argv);

}  // namespace qnvb::io
