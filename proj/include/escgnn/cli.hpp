#pragma once

namespace escgnn {

/// Runs one subcommand (gen-data, precompute, train, eval, cv, verify).
/// Returns the process exit code; errors go to stderr as one line
/// `error: <CodeName>: <message>`.
int cli_dispatch(int argc, char** argv);

}  // namespace escgnn
