#pragma once

#include <exception>
#include <string>
#include <vector>

namespace rshift {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,
  kExitUsage = 2,
  kExitParse = 3,
  kExitKindMismatch = 4,
  kExitWindowMismatch = 5,
};

/// Applies "a.b.c=value" overrides to a JSON document. Values that parse as JSON keep their type; others become strings.
std::string apply_overrides(const std::string& config_json, const std::vector<std::string>& overrides);

int exit_code_for(const std::exception& e);

enum class DataKind { pattern, raster };
/// Pattern CSV (x,y[,label]), raster CSV (x,y,value) or raster text (anything not ending in .csv).
DataKind detect_kind(const std::string& path);

int run_cli(int argc, char** argv);

}  // namespace rshift
