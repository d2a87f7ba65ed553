// config.hpp — run-configuration parsing, validation, and canonicalization.

#pragma once

#include "nshops/simulate.hpp"

#include <string>

namespace nshops::config {

struct ParsedConfig {
    sim::RunSpec spec;
    std::string output;    // empty = caller decides
    std::string canonical; // fully resolved, sorted-key JSON text
    bool has_reference = false;
    sim::RunSpec reference;
};

// Parses and validates a JSON run configuration. `base_dir` resolves
// relative paths of tabulated-coefficient files.
ParsedConfig parse_config(const std::string& text, const std::string& base_dir = "");
ParsedConfig load_config_file(const std::string& path);

// JSON schema reference printed by the print-schema subcommand.
std::string schema_text();

std::string version_string();

} // namespace nshops::config
