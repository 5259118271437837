#pragma once

namespace pam::cli {

// Command-line front end (see README for the subcommands). Returns the
// process exit code: 0 anonymous/proved/valid, 1 violation found,
// 2 inconclusive, 3 input error, 4 resource guard tripped.
int run(int argc, char** argv);

}  // namespace pam::cli
