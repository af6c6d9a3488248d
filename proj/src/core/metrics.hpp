#pragma once

#include "core/transport.hpp"

namespace veloreg {

// Pullback map y(x) = x + u(x), stored as the displacement u so the periodic
// seam stays unambiguous. Warping an image with this map reproduces the final
// slice of the corresponding state solve.
struct DeformationMap {
  VectorField displacement;
};

struct DetFStats {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

DeformationMap compute_deformation_map(const VectorField& v, const TimeGrid& tg, InterpVariant variant);

ScalarField warp_image(const ScalarField& image, const DeformationMap& map, InterpVariant variant);

// Labels move by nearest-neighbor lookup at the mapped points.
LabelMap warp_labels(const LabelMap& labels, const DeformationMap& map);

// F = I + grad(u); the determinant is evaluated per node in closed form.
std::pair<ScalarField, DetFStats> det_deformation_gradient(const DeformationMap& map, DerivBackend backend);

// || m_final - m1 || / || m1 - m0 ||. Throws if the denominator vanishes.
double relative_mismatch(const ScalarField& m_final, const ScalarField& m1, const ScalarField& m0);

// 2|A and B| / (|A| + |B|) over the union of the given labels; an empty label
// list means every nonzero label present in either map. Throws when both
// supports are empty.
double dice(const LabelMap& a, const LabelMap& b, const std::vector<std::uint16_t>& labels = {});

}  // namespace veloreg
