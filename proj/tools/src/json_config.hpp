#pragma once

#include <istream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace metabandit::cli {

/// Reads CLI11 configuration from a JSON object. Top-level keys are option
/// names of the main program; a nested object configures the subcommand of
/// that name, e.g. {"eval": {"episodes": 1024, "env": ["Gaussian5_Var1_MeanN0"]}}.
/// Underscores in keys are accepted for dashes.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace metabandit::cli
