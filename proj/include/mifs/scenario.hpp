#pragma once

#include <optional>
#include <string>

#include "mifs/presolution.hpp"
#include "mifs/retarded.hpp"

namespace mifs {

struct Scenario {
  std::string name;
  MarkovIfs ifs;
  Word orbitWord;
  std::optional<HomoclinicPoint> homoclinic;
  std::optional<FlexiblePath> flexiblePath;
  std::optional<PreparedParams> preparedParams;
  PipelineConfig pipeline;
  bool hasPipeline{false};

  // Families are reconstructed from the prepared parameters; the serialized
  // IFS must match base member 1.
  PreparedFamily family() const;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);
std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

// Bundled fixtures (also shipped as JSON files under scenarios/).
Scenario scenario_toy_basic();
Scenario scenario_pipeline();
Scenario scenario_two_disc();
Scenario scenario_weak_core();
Scenario scenario_annulus();
std::vector<std::string> bundled_scenario_names();
Scenario bundled_scenario(const std::string& name);

}  // namespace mifs
