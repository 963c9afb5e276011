#pragma once

// Command-line front end: simulate, classify, average, melnikov,
// heteroclinic, splitting, osc, portrait.
//
// Exit codes: 0 success, 2 usage error, 1 numerical failure (partial
// artifacts plus failure.json in the output directory).

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace bwp {

/// BWP_OUT (when set and non-empty) overrides --out, which overrides the
/// default "bwp_out".
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bwp
