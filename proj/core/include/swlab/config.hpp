#pragma once

#include <string>
#include <vector>

#include "swlab/experiments.hpp"

namespace swlab {

enum class ExperimentKind {
  deviation_scan,
  decay_fit,
  acceleration_persistence,
  bound_state_probe,
};

ExperimentKind kind_from_name(const std::string& name);
std::string to_string(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind kind;
  ExperimentSpec spec;
};

/// Flat key-value config, one [section] per experiment. The section name
/// selects the registered experiment (optionally suffixed, e.g.
/// [deviation_scan.negative]). Unknown keys are errors.
std::vector<ExperimentConfig> parse_config_text(const std::string& text,
                                                const std::string& base_dir);
std::vector<ExperimentConfig> parse_config_file(const std::string& path);

}  // namespace swlab
