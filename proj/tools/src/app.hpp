#pragma once

namespace metabandit::cli {

/// Parses the command line, dispatches to a subcommand and returns the
/// process exit code. Reads defaults from the JSON file named by
/// METABANDIT_CONFIG (or --config); explicit flags win over the file.
int run_app(int argc, const char* const* argv);

}  // namespace metabandit::cli
