#pragma once

#include "levylab/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace levylab {

inline constexpr const char* kVersion = "0.1.0";

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

std::vector<std::string> subcommand_names();

/// Output directory: --out, then $LEVYLAB_OUT, then [output] dir, then ".".
std::string resolve_output_dir(const ExperimentConfig& cfg, const RunOverrides& overrides);

/// Runs one subcommand, writing <subcommand>.csv and appending a record to
/// runs.jsonl in the output directory. Returns 0 on success and 1 if the
/// operation failed (an error record is written in that case).
int run(const ExperimentConfig& cfg, const std::string& subcommand, const RunOverrides& overrides);

/// Appends an error record for failures that happen before a config exists.
void write_error_record(const std::string& out_dir, const std::string& subcommand, const std::string& message);

}  // namespace levylab
