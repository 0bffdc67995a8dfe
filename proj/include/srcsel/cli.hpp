#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "srcsel/dataset.hpp"

namespace srcsel {

inline constexpr const char* kSeedEnvVar = "SOURCE_SELECT_SEED";
inline constexpr std::uint64_t kDefaultSeed = 42;

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitDataError = 2 };

/// Seed precedence: explicit --seed flag, then the SOURCE_SELECT_SEED environment
/// variable, then the seed found in a config file, then 42.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config_seed);

/// Every `*.csv` in `dir`, loaded with `schema`, in file-name order.
std::vector<Source> load_source_dir(const std::filesystem::path& dir, const SchemaConfig& schema);

/// Runs one subcommand. `args` excludes the program name. Usage problems return 1
/// with the usage text on `err`; data or contract errors return 2 with the message on `err`.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace srcsel
