#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vqa::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,     // bad flags, missing inputs, invalid configuration
    kFormat = 3,    // malformed data files, missing image features
    kNumeric = 4,   // numeric or contract violations
};

// Runs one subcommand (build-vocab, train, predict, eval). args excludes the
// program name. Reports go to `out`, diagnostics to `err`. Outputs are written
// to temporary files and renamed into place only on success.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

}  // namespace vqa::cli
