#pragma once

#include <optional>
#include <string>

#include "fpk/reference.hpp"
#include "fpk/report.hpp"
#include "fpk/train.hpp"

namespace fpk {

// Everything one experiment run needs: problem selection, variant, training
// hyperparameters, reference settings, and evaluation grids. Built from a
// sectioned key/value config file; every field has an explicit key.
struct RunConfig {
    std::string problem = "example1";
    TrainConfig train;
    ReferenceOptions reference;
    GridSpec grid;
    std::string out_dir;                       // empty: derived by the CLI
    std::optional<std::string> reference_file; // precomputed grid.csv to reuse

    // optional numeric overrides of the named problem
    std::optional<double> t0, t1, c_t;
    std::optional<std::vector<std::array<double, 2>>> space_box;

    void validate() const;  // throws ConfigError with the offending key
    FpkProblem make_problem() const;
    std::string to_text() const;  // round-trips through parse_config
};

// Parses the TOML-style sectioned key/value format used by the presets:
// [section] headers, key = value lines, '#' comments. Unknown sections or
// keys raise ConfigError naming the key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace fpk
