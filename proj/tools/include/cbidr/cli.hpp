#pragma once

#include <iosfwd>

namespace cbidr {

/// Entry point of the `cbidr` tool. Subcommands: build-index, query, evaluate,
/// sweep-weights, gen-synth, serve.
///
/// Returns 0 on success, 1 on validation or runtime errors, 2 on usage errors
/// (unknown subcommand or flag).
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbidr
