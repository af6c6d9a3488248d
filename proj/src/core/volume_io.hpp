#pragma once

#include <string>
#include <variant>

#include "core/grid.hpp"

namespace veloreg {

// Raw little-endian payload `<name>.raw` plus a JSON sidecar `<name>.json`
// describing it. The header must match the payload byte count exactly.
struct VolumeHeader {
  std::array<int, 3> dims{0, 0, 0};
  std::string dtype;   // "f32" | "u16"
  std::string order;   // "x3-fastest"
  std::string domain;  // "2pi"
};

using Volume = std::variant<ScalarField, LabelMap>;

// `path` may be given with or without the .raw/.json extension.
std::string volume_base_path(const std::string& path);

void write_volume(const ScalarField& f, const std::string& path);
void write_volume(const LabelMap& m, const std::string& path);
Volume read_volume(const std::string& path);

ScalarField read_scalar_volume(const std::string& path);
LabelMap read_label_volume(const std::string& path);

}  // namespace veloreg
