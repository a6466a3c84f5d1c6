#pragma once

#include <memory>
#include <vector>

#include "oblab/measure.hpp"
#include "oblab/rng.hpp"

namespace testutil {

using namespace oblab;

inline Model interval_model(ModelId id, double lo, double hi, std::size_t cells, double weight = 1.0) {
    Model m;
    m.id = id;
    m.label = "m" + std::to_string(id);
    m.box = ParameterBox({Axis::interval(lo, hi, cells)});
    m.prior_weight = weight;
    return m;
}

inline Model point_model(ModelId id, double at, double weight = 1.0) {
    Model m;
    m.id = id;
    m.label = "p" + std::to_string(id);
    m.box = ParameterBox({Axis::point(at)});
    m.prior_weight = weight;
    return m;
}

inline SpacePtr make_space(std::vector<Model> models, ModelSet truth = {0}) {
    return std::make_shared<const ModelSpace>(std::move(models), std::move(truth));
}

/// n one-cell models at 0, 1, 2, ... so weights map one-to-one onto model masses.
inline SpacePtr singleton_space(std::size_t n, ModelSet truth = {0}) {
    std::vector<Model> models;
    for (std::size_t j = 0; j < n; ++j) models.push_back(point_model(static_cast<ModelId>(j), static_cast<double>(j)));
    return make_space(std::move(models), std::move(truth));
}

inline GridMeasure random_measure(const SpacePtr& space, Rng& rng, double sparsity = 0.0) {
    std::vector<double> w(space->total_cells());
    for (auto& x : w) x = rng.uniform() < sparsity ? 0.0 : rng.exponential();
    w[rng.index(w.size())] += 1.0;
    return normalize(GridMeasure(space, std::move(w)));
}

}  // namespace testutil
