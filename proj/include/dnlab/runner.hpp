#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace dnlab::runner {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitTolerance = 2;
inline constexpr int kExitStability = 3;

/// Dispatches one experiment command ("flat-check", "coercivity", "convex",
/// "lp", "sharp", "muskat") with a strict-schema JSON config (unknown keys
/// rejected). Writes the reports plus a manifest embedding the fully
/// resolved config into outdir. Returns the process exit code.
int run_command(const std::string& command, const nlohmann::json& config,
                const std::filesystem::path& outdir, int threads = 1);

/// Re-dispatch from a manifest produced by run_command.
int run_manifest(const nlohmann::json& manifest, const std::filesystem::path& outdir,
                 int threads = 1);

/// Locale-independent shortest round-trip formatting used by every CSV cell.
std::string format_double(double v);

}  // namespace dnlab::runner
