#include "oblab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "oblab/errors.hpp"
#include "oblab/numerics.hpp"

namespace oblab {

Axis Axis::interval(double lo, double hi, std::size_t cells) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw InvalidArgument("interval axis needs finite lo <= hi");
    if (cells < 1) throw InvalidArgument("interval axis needs at least one cell");
    return Axis{lo, hi, cells, false};
}

Axis Axis::point(double value) {
    if (!std::isfinite(value)) throw InvalidArgument("pinned axis value must be finite");
    return Axis{value, value, 1, true};
}

double Axis::step() const { return pinned ? 0.0 : (hi - lo) / static_cast<double>(cells); }

double Axis::center(std::size_t k) const {
    if (pinned) return lo;
    return lo + (static_cast<double>(k) + 0.5) * step();
}

double Axis::volume_factor() const {
    if (pinned || hi == lo) return 1.0;
    return step();
}

ParameterBox::ParameterBox(std::vector<Axis> axes, std::size_t budget) : axes_(std::move(axes)) {
    cells_ = 1;
    for (const auto& a : axes_) {
        if (!a.pinned && (a.cells < 1 || !(a.lo <= a.hi)))
            throw InvalidArgument("malformed interval axis");
        if (a.pinned) continue;
        if (cells_ > budget / a.cells)
            throw BudgetExceeded("parameter box exceeds cell budget " + std::to_string(budget));
        cells_ *= a.cells;
    }
    if (cells_ > budget)
        throw BudgetExceeded("parameter box exceeds cell budget " + std::to_string(budget));
}

std::size_t ParameterBox::free_dimension() const {
    return static_cast<std::size_t>(
        std::count_if(axes_.begin(), axes_.end(), [](const Axis& a) { return !a.pinned; }));
}

double ParameterBox::cell_volume() const {
    double v = 1.0;
    for (const auto& a : axes_) v *= a.volume_factor();
    return v;
}

void ParameterBox::cell_center(std::size_t local, std::span<double> out) const {
    for (std::size_t d = axes_.size(); d-- > 0;) {
        const Axis& a = axes_[d];
        if (a.pinned) {
            out[d] = a.lo;
            continue;
        }
        out[d] = a.center(local % a.cells);
        local /= a.cells;
    }
}

std::vector<double> ParameterBox::cell_center(std::size_t local) const {
    std::vector<double> out(axes_.size());
    cell_center(local, out);
    return out;
}

bool ParameterBox::contains(std::span<const double> theta) const {
    if (theta.size() != axes_.size()) return false;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        const Axis& a = axes_[d];
        if (a.pinned ? theta[d] != a.lo : (theta[d] < a.lo || theta[d] > a.hi)) return false;
    }
    return true;
}

std::optional<std::size_t> ParameterBox::locate(std::span<const double> theta) const {
    if (!contains(theta)) return std::nullopt;
    std::size_t idx = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        const Axis& a = axes_[d];
        if (a.pinned) continue;
        std::size_t k = 0;
        if (a.hi > a.lo) {
            const double pos = (theta[d] - a.lo) / a.step();
            k = std::min(a.cells - 1, static_cast<std::size_t>(std::max(0.0, std::floor(pos))));
        }
        idx = idx * a.cells + k;
    }
    return idx;
}

bool ParameterBox::operator==(const ParameterBox& other) const {
    if (axes_.size() != other.axes_.size()) return false;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
        const Axis& a = axes_[d];
        const Axis& b = other.axes_[d];
        if (a.pinned != b.pinned || a.lo != b.lo || a.hi != b.hi || a.cells != b.cells)
            return false;
    }
    return true;
}

double PriorDensity::log_density(const ParameterBox& box, std::span<const double> theta) const {
    if (kind == Kind::Uniform) return 0.0;
    double acc = 0.0;
    std::size_t k = 0;
    for (std::size_t d = 0; d < box.dimension(); ++d) {
        if (box.axes()[d].pinned) continue;
        if (k >= mean.size() || k >= sd.size())
            throw InvalidArgument("gaussian prior needs one mean/sd per interval axis");
        const double z = (theta[d] - mean[k]) / sd[k];
        acc += -0.5 * z * z - std::log(sd[k]) - 0.5 * std::log(2.0 * std::numbers::pi);
        ++k;
    }
    return acc;
}

ModelSpace::ModelSpace(std::vector<Model> models, ModelSet true_ids, std::size_t budget)
    : models_(std::move(models)), true_ids_(std::move(true_ids)) {
    if (models_.empty()) throw InvalidArgument("model space needs at least one model");
    CompensatedSum wsum;
    for (std::size_t i = 0; i < models_.size(); ++i) {
        const Model& m = models_[i];
        if (m.id != static_cast<ModelId>(i))
            throw InvalidArgument("model ids must be unique and contiguous from 0");
        if (!(m.prior_weight >= 0.0) || !std::isfinite(m.prior_weight))
            throw InvalidArgument("prior weights must be nonnegative and finite");
        if (m.density.kind == PriorDensity::Kind::Gaussian) {
            const std::size_t fd = m.box.free_dimension();
            if (m.density.mean.size() != fd || m.density.sd.size() != fd)
                throw InvalidArgument("gaussian prior needs one mean/sd per interval axis");
            for (double s : m.density.sd)
                if (!(s > 0.0)) throw InvalidArgument("gaussian prior sd must be positive");
        }
        wsum.add(m.prior_weight);
    }
    const double total = wsum.value();
    if (!(total > 0.0)) throw ZeroMass("prior model weights sum to zero");
    for (auto& m : models_) m.prior_weight /= total;

    std::sort(true_ids_.begin(), true_ids_.end());
    true_ids_.erase(std::unique(true_ids_.begin(), true_ids_.end()), true_ids_.end());
    if (true_ids_.empty()) throw InvalidArgument("true model set must be nonempty");
    for (ModelId j : true_ids_)
        if (j < 0 || static_cast<std::size_t>(j) >= models_.size())
            throw InvalidArgument("true model id " + std::to_string(j) + " out of range");

    offsets_.reserve(models_.size());
    for (const auto& m : models_) {
        offsets_.push_back(total_cells_);
        total_cells_ += m.box.cell_count();
        if (total_cells_ > budget)
            throw BudgetExceeded("model space exceeds cell budget " + std::to_string(budget));
    }
    cell_model_.reserve(total_cells_);
    for (const auto& m : models_) cell_model_.insert(cell_model_.end(), m.box.cell_count(), m.id);
}

bool ModelSpace::is_true(ModelId j) const {
    return std::binary_search(true_ids_.begin(), true_ids_.end(), j);
}

ModelSet ModelSpace::all_ids() const {
    ModelSet ids(models_.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<ModelId>(i);
    return ids;
}

ModelSet ModelSpace::complement(const ModelSet& ids) const {
    ModelSet out;
    for (const auto& m : models_)
        if (std::find(ids.begin(), ids.end(), m.id) == ids.end()) out.push_back(m.id);
    return out;
}

void ModelSpace::cell_center(std::size_t cell, std::span<double> out) const {
    const ModelId j = cell_model_[cell];
    model(j).box.cell_center(cell - offset(j), out);
}

std::vector<double> ModelSpace::cell_center(std::size_t cell) const {
    const ModelId j = cell_model_[cell];
    return model(j).box.cell_center(cell - offset(j));
}

std::size_t ModelSpace::ambient_dimension() const {
    const std::size_t d = models_.front().box.dimension();
    for (const auto& m : models_)
        if (m.box.dimension() != d)
            throw DimensionMismatch("models live in different ambient dimensions");
    return d;
}

std::size_t ModelSpace::max_free_dimension() const {
    std::size_t d = 0;
    for (const auto& m : models_) d = std::max(d, m.box.free_dimension());
    return d;
}

bool ModelSpace::same_layout(const ModelSpace& other) const {
    if (this == &other) return true;
    if (models_.size() != other.models_.size()) return false;
    for (std::size_t i = 0; i < models_.size(); ++i) {
        const Model& a = models_[i];
        const Model& b = other.models_[i];
        if (!(a.box == b.box) || a.prior_weight != b.prior_weight || !(a.density == b.density))
            return false;
    }
    return true;
}

ModelSpace ModelSpace::with_true_ids(ModelSet ids) const {
    ModelSpace copy = *this;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.empty()) throw InvalidArgument("true model set must be nonempty");
    for (ModelId j : ids)
        if (j < 0 || static_cast<std::size_t>(j) >= models_.size())
            throw InvalidArgument("true model id " + std::to_string(j) + " out of range");
    copy.true_ids_ = std::move(ids);
    return copy;
}

GridMeasure::GridMeasure(SpacePtr space, std::vector<double> weights, bool normalized)
    : space_(std::move(space)), weights_(std::move(weights)), normalized_(normalized) {
    if (!space_) throw InvalidArgument("grid measure needs a model space");
    if (weights_.size() != space_->total_cells())
        throw SupportMismatch("weight count does not match the model space cell count");
    for (double w : weights_)
        if (!(w >= 0.0)) throw InvalidArgument("grid measure weights must be nonnegative");
}

GridMeasure normalize(const GridMeasure& m) {
    const double total = compensated_sum(m.weights());
    if (!(total > 0.0) || !std::isfinite(total))
        throw ZeroMass("cannot normalize a measure with total weight " + std::to_string(total));
    std::vector<double> w(m.weights().begin(), m.weights().end());
    for (double& x : w) {
        x /= total;
        if (x < kFlushBelow) x = 0.0;
    }
    return GridMeasure(m.space_ptr(), std::move(w), true);
}

GridMeasure from_log_weights(SpacePtr space, std::span<const double> log_weights) {
    double mx = kNegInf;
    for (double x : log_weights) mx = std::max(mx, x);
    if (!std::isfinite(mx))
        throw ZeroMass("all log-weights underflow (max log-weight " + std::to_string(mx) + ")");
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - mx);
    return normalize(GridMeasure(std::move(space), std::move(w)));
}

std::vector<double> prior_log_weights(const ModelSpace& space) {
    std::vector<double> logw(space.total_cells(), kNegInf);
    std::vector<double> theta;
    for (const auto& m : space.models()) {
        const std::size_t off = space.offset(m.id);
        const std::size_t cells = m.box.cell_count();
        if (m.prior_weight <= 0.0) continue;
        theta.assign(m.box.dimension(), 0.0);
        const double log_vol = std::log(m.box.cell_volume());
        for (std::size_t c = 0; c < cells; ++c) {
            m.box.cell_center(c, theta);
            logw[off + c] = m.density.log_density(m.box, theta) + log_vol;
        }
        const double lz = log_sum_exp(std::span<const double>(logw).subspan(off, cells));
        if (!std::isfinite(lz)) throw ZeroMass("within-model prior of model " + m.label + " has no mass");
        const double lk = std::log(m.prior_weight);
        for (std::size_t c = 0; c < cells; ++c) logw[off + c] += lk - lz;
    }
    return logw;
}

GridMeasure prior_measure(SpacePtr space) {
    const auto logw = prior_log_weights(*space);
    return from_log_weights(std::move(space), logw);
}

double model_mass(const GridMeasure& m, const ModelSet& ids) {
    const ModelSpace& s = m.space();
    CompensatedSum acc;
    for (const auto& model : s.models()) {
        if (std::find(ids.begin(), ids.end(), model.id) == ids.end()) continue;
        const std::size_t off = s.offset(model.id);
        for (std::size_t c = 0; c < model.box.cell_count(); ++c) acc.add(m.weight(off + c));
    }
    return acc.value();
}

std::vector<double> model_masses(const GridMeasure& m) {
    const ModelSpace& s = m.space();
    std::vector<double> out(s.size());
    for (const auto& model : s.models()) out[model.id] = model_mass(m, {model.id});
    return out;
}

GridMeasure condition_on_models(const GridMeasure& m, const ModelSet& ids) {
    const ModelSpace& s = m.space();
    std::vector<double> w(m.size(), 0.0);
    for (ModelId j : ids) {
        if (j < 0 || static_cast<std::size_t>(j) >= s.size())
            throw InvalidArgument("model id " + std::to_string(j) + " out of range");
        const std::size_t off = s.offset(j);
        for (std::size_t c = 0; c < s.cells_of(j); ++c) w[off + c] = m.weight(off + c);
    }
    const double total = compensated_sum(w);
    if (!(total > 0.0)) throw ZeroMass("conditioning event carries zero mass");
    return normalize(GridMeasure(m.space_ptr(), std::move(w)));
}

double tv_distance(const GridMeasure& p, const GridMeasure& q) {
    if (!p.space().same_layout(q.space())) throw SupportMismatch("measures live on different grids");
    // Both one-sided sums equal half the L1 distance for normalized inputs.
    // Taking the larger keeps mass that rounds away on one side, e.g. when
    // conditioning rescales by a factor that rounds to 1.
    CompensatedSum up, down;
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double d = p.weight(c) - q.weight(c);
        if (d > 0.0) up.add(d);
        else down.add(-d);
    }
    return std::max(up.value(), down.value());
}

std::vector<double> mean(const GridMeasure& m) {
    const ModelSpace& s = m.space();
    const std::size_t dim = s.ambient_dimension();
    std::vector<CompensatedSum> acc(dim);
    std::vector<double> theta(dim);
    for (std::size_t c = 0; c < m.size(); ++c) {
        const double w = m.weight(c);
        if (w == 0.0) continue;
        s.cell_center(c, theta);
        for (std::size_t d = 0; d < dim; ++d) acc[d].add(w * theta[d]);
    }
    std::vector<double> out(dim);
    for (std::size_t d = 0; d < dim; ++d) out[d] = acc[d].value();
    return out;
}

double expectation(const GridMeasure& m, std::span<const double> h) {
    if (h.size() != m.size()) throw SupportMismatch("cell function size does not match measure");
    CompensatedSum acc;
    for (std::size_t c = 0; c < m.size(); ++c) {
        const double w = m.weight(c);
        if (w == 0.0) continue;
        acc.add(w * h[c]);
    }
    const double v = acc.value();
    if (!std::isfinite(v)) throw NonFinite("expectation is not finite");
    return v;
}

}  // namespace oblab
