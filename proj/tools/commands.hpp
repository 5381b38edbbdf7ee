#pragma once

namespace mfpca::cli {

/// Parses argv and runs one subcommand. Returns 0 on success, 1 on usage
/// errors and 2 on data or validation errors.
int dispatch(int argc, char** argv);

} // namespace mfpca::cli
