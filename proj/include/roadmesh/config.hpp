#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "roadmesh/synthgen.hpp"
#include "roadmesh/trainer.hpp"

namespace roadmesh {

/// `key = value` lines; '#' starts a comment. Keys may repeat.
class KeyValueFile {
 public:
  static KeyValueFile parse(const std::string& text);

  std::optional<std::string> get(const std::string& key) const;  // last occurrence
  std::vector<std::string> get_all(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Applies the keys of `file` on top of `base`. Unknown keys are rejected.
TrainConfig train_config_from(const KeyValueFile& file, TrainConfig base = {});
std::string to_text(const TrainConfig& config);

/// Scene specs list cameras as repeated `camera = id fx fy cx cy width height
/// gain gamma` followed either by `x y z yaw_deg pitch_down_deg` or by the 12
/// numbers of the row-major [R | t] mount. to_text writes the 12-number form.
SceneSpec scene_spec_from(const KeyValueFile& file, SceneSpec base = {});
std::string to_text(const SceneSpec& spec);

}  // namespace roadmesh
