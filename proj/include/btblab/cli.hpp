#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace btblab {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitInternal = 3,
};

inline constexpr const char* kManifestSchema = "btblab.manifest/1";

// Entry point behind the btblab executable. Normal output goes to out,
// diagnostics to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace btblab
