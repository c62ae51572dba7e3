#pragma once

#include <string>
#include <vector>

#include "magspec/fields.hpp"

namespace magspec {

// Registry keys: "landau", "radial_well", "radial_well(a1,a2)",
// "imaginary_well", "perturbed_well(eps)". Throws InvalidInput otherwise.
FieldModel make_model(const std::string& key);

std::vector<std::string> model_keys();

// B and V given as expressions in q1, q2. B must evaluate to a real number.
// b0 <= 0 means: take the minimum of B sampled on sample_box.
FieldModel expression_model(const std::string& B_text, const std::string& V_text, double b0, double u, double v,
                            const Rect& sample_box = {-3, 3, -3, 3});

}  // namespace magspec
