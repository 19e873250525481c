#include "kraft/vectorize.hpp"

namespace kraft {

namespace {

void mark(const KnowledgeGraph& kg, FeatureVector& v, std::string_view concept_name) {
  if (const auto idx = kg.concept_index(concept_name)) v[*idx] = 1;
}

}  // namespace

FeatureVector phi_feature(const KnowledgeGraph& kg, const FeatureExpr& expr, const Dataset& d) {
  FeatureVector v(kg.concept_order().size(), 0);
  for (const auto& column : expr.leaves()) {
    d.column(column);
    const ConceptRef* ref = kg.concept_of(column);
    if (!ref) continue;
    for (const auto& cls : kg.ancestors(ref->cls)) mark(kg, v, cls);
    if (ref->unit) mark(kg, v, *ref->unit);
  }
  if (!expr.is_raw()) {
    if (const MaybeUnit unit = infer_unit(kg, expr); unit && unit->name) mark(kg, v, *unit->name);
  }
  return v;
}

FeatureVector phi_state(const KnowledgeGraph& kg, std::span<const FeatureExpr> features, const Dataset& d) {
  FeatureVector sum(kg.concept_order().size(), 0);
  for (const auto& f : features) {
    const FeatureVector v = phi_feature(kg, f, d);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  return sum;
}

}  // namespace kraft
