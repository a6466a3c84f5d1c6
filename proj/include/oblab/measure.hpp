#pragma once

// Discretized probability measures on a finite union of parameter boxes.
//
// A ModelSpace is the disjoint union of {j} x Theta_j, each Theta_j a
// rectangular box gridded into cells. Cells are indexed model-major, then
// row-major over the box axes (last axis fastest). A GridMeasure assigns one
// nonnegative weight per cell; two measures are comparable cell-by-cell when
// their spaces share a layout.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oblab {

inline constexpr std::size_t kDefaultCellBudget = 1'000'000;
inline constexpr double kNormalizationTol = 1e-12;
inline constexpr double kFlushBelow = 1e-300;

using ModelId = int;
using ModelSet = std::vector<ModelId>;

struct Axis {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t cells = 1;
    bool pinned = false;

    static Axis interval(double lo, double hi, std::size_t cells);
    static Axis point(double value);

    double step() const;
    double center(std::size_t k) const;
    /// Factor this axis contributes to a cell volume (1 for pinned axes).
    double volume_factor() const;
};

class ParameterBox {
public:
    ParameterBox() = default;
    explicit ParameterBox(std::vector<Axis> axes,
                          std::size_t budget = kDefaultCellBudget);

    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t dimension() const { return axes_.size(); }
    std::size_t free_dimension() const;
    std::size_t cell_count() const { return cells_; }
    double cell_volume() const;

    void cell_center(std::size_t local, std::span<double> out) const;
    std::vector<double> cell_center(std::size_t local) const;
    bool contains(std::span<const double> theta) const;
    /// Cell holding theta, or nullopt when theta is outside the box.
    std::optional<std::size_t> locate(std::span<const double> theta) const;

    bool operator==(const ParameterBox& other) const;

private:
    std::vector<Axis> axes_;
    std::size_t cells_ = 1;
};

/// Within-model prior density. Gaussian means/sds refer to interval axes in
/// order; pinned axes are ignored.
struct PriorDensity {
    enum class Kind { Uniform, Gaussian };
    Kind kind = Kind::Uniform;
    std::vector<double> mean;
    std::vector<double> sd;

    double log_density(const ParameterBox& box, std::span<const double> theta) const;
    bool operator==(const PriorDensity&) const = default;
};

struct Model {
    ModelId id = 0;
    std::string label;
    ParameterBox box;
    double prior_weight = 1.0;
    PriorDensity density;
};

class ModelSpace {
public:
    ModelSpace(std::vector<Model> models, ModelSet true_ids,
               std::size_t budget = kDefaultCellBudget);

    std::size_t size() const { return models_.size(); }
    const Model& model(ModelId j) const { return models_.at(static_cast<std::size_t>(j)); }
    const std::vector<Model>& models() const { return models_; }
    const ModelSet& true_ids() const { return true_ids_; }
    bool is_true(ModelId j) const;
    ModelSet all_ids() const;
    ModelSet complement(const ModelSet& ids) const;

    std::size_t total_cells() const { return total_cells_; }
    std::size_t offset(ModelId j) const { return offsets_.at(static_cast<std::size_t>(j)); }
    std::size_t cells_of(ModelId j) const { return model(j).box.cell_count(); }
    ModelId model_of_cell(std::size_t cell) const { return cell_model_[cell]; }

    void cell_center(std::size_t cell, std::span<double> out) const;
    std::vector<double> cell_center(std::size_t cell) const;

    /// Common ambient dimension; throws DimensionMismatch if models differ.
    std::size_t ambient_dimension() const;
    std::size_t max_free_dimension() const;

    /// Same models, boxes, weights and densities (true ids may differ).
    bool same_layout(const ModelSpace& other) const;

    /// Copy with a different designated true set.
    ModelSpace with_true_ids(ModelSet ids) const;

private:
    std::vector<Model> models_;
    ModelSet true_ids_;
    std::vector<std::size_t> offsets_;
    std::vector<ModelId> cell_model_;
    std::size_t total_cells_ = 0;
};

using SpacePtr = std::shared_ptr<const ModelSpace>;

class GridMeasure {
public:
    GridMeasure(SpacePtr space, std::vector<double> weights, bool normalized = false);

    const SpacePtr& space_ptr() const { return space_; }
    const ModelSpace& space() const { return *space_; }
    std::span<const double> weights() const { return weights_; }
    double weight(std::size_t cell) const { return weights_[cell]; }
    bool normalized() const { return normalized_; }
    std::size_t size() const { return weights_.size(); }

private:
    SpacePtr space_;
    std::vector<double> weights_;
    bool normalized_;
};

GridMeasure normalize(const GridMeasure& m);

/// exp(logw - max), flushed and normalized. Throws ZeroMass when every entry
/// is -inf or the maximum is not finite.
GridMeasure from_log_weights(SpacePtr space, std::span<const double> log_weights);

/// Prior kappa_j * nu(theta|j) discretized at cell centers times cell volume.
GridMeasure prior_measure(SpacePtr space);

/// Log of the prior cell weights (-inf where the weight is zero).
std::vector<double> prior_log_weights(const ModelSpace& space);

double model_mass(const GridMeasure& m, const ModelSet& ids);
std::vector<double> model_masses(const GridMeasure& m);
GridMeasure condition_on_models(const GridMeasure& m, const ModelSet& ids);
double tv_distance(const GridMeasure& p, const GridMeasure& q);
std::vector<double> mean(const GridMeasure& m);
double expectation(const GridMeasure& m, std::span<const double> h);

}  // namespace oblab
