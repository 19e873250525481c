#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kraft/data.hpp"
#include "kraft/kg.hpp"
#include "kraft/transform.hpp"

namespace kraft {

/// Counts over the KG concept basis (classes, then unit names).
using FeatureVector = std::vector<std::uint32_t>;

/// Indicator vector of a feature: each mapped leaf contributes its class,
/// the class's ancestors and its unit; a derived feature adds the registered
/// name of its propagated unit. Unmapped leaves contribute nothing.
FeatureVector phi_feature(const KnowledgeGraph& kg, const FeatureExpr& expr, const Dataset& d);

/// Element-wise sum of phi_feature over the set.
FeatureVector phi_state(const KnowledgeGraph& kg, std::span<const FeatureExpr> features, const Dataset& d);

}  // namespace kraft
