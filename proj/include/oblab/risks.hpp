#pragma once

// Empirical risks R_n(j, theta) paired with their theoretical counterparts
// R(j, theta), plus the data-generating processes they are defined against.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oblab/measure.hpp"

namespace oblab {

struct Dataset {
    std::size_t n = 0;
    std::vector<std::string> columns;
    std::vector<double> values;  // row-major, n * columns.size()
    std::uint64_t seed = 0;
    std::string generator_id;

    Dataset() = default;
    Dataset(std::vector<std::string> columns, std::vector<double> values, std::uint64_t seed,
            std::string generator_id);

    /// Column index; throws SchemaMismatch when absent.
    std::size_t column(std::string_view name) const;
    bool has_column(std::string_view name) const;
    double at(std::size_t row, std::size_t col) const { return values[row * columns.size() + col]; }

    bool operator==(const Dataset&) const = default;
};

/// Risk evaluator with any per-dataset preprocessing already done.
using CellRisk = std::function<double(ModelId, std::span<const double>)>;
using RiskBinder = std::function<CellRisk(const Dataset&)>;

struct TheoreticalTag {
    enum class Kind { Analytic, MonteCarloOracle };
    Kind kind = Kind::Analytic;
    std::size_t m_oracle = 0;
    std::string describe() const;
};

struct Penalty {
    double gamma_pen = 0.0;
    std::vector<int> complexity;  // indexed by model id
    double term(ModelId j) const;
};

class RiskPair {
public:
    RiskPair(std::string tag, RiskBinder empirical, CellRisk theoretical, TheoreticalTag theoretical_tag);

    const std::string& tag() const { return tag_; }
    const TheoreticalTag& theoretical_tag() const { return theoretical_tag_; }
    const std::optional<Penalty>& penalty() const { return penalty_; }

    /// Empirical risk bound to a dataset, penalty included.
    CellRisk bind(const Dataset& data) const;
    /// Unpenalized empirical risk bound to a dataset.
    CellRisk bind_base(const Dataset& data) const;

    double empirical(ModelId j, std::span<const double> theta, const Dataset& data) const;
    double theoretical(ModelId j, std::span<const double> theta) const;
    double theoretical_base(ModelId j, std::span<const double> theta) const;

    RiskPair with_penalty(Penalty p) const;
    RiskPair without_penalty() const;
    RiskPair with_theoretical(CellRisk theoretical, TheoreticalTag tag) const;

private:
    std::string tag_;
    RiskBinder empirical_;
    CellRisk theoretical_;
    TheoreticalTag theoretical_tag_;
    std::optional<Penalty> penalty_;
};

/// Per-cell risks on a model space, canonical cell order.
struct RiskGrid {
    std::vector<double> empirical;
    std::vector<double> theoretical;
};

RiskGrid evaluate_on_grid(const RiskPair& pair, const ModelSpace& space, const Dataset& data);
std::vector<double> theoretical_on_grid(const RiskPair& pair, const ModelSpace& space);

// ---------------------------------------------------------------------------
// Data-generating processes

/// y = theta0' x + noise_sd * e, x = (1, z_1, ..., z_{d-1}) with z iid N(0,1).
struct GaussianDesign {
    std::vector<double> theta0;
    double noise_sd = 1.0;
    std::size_t dim() const { return theta0.size(); }
};
Dataset generate_gaussian(const GaussianDesign& design, std::size_t n, std::uint64_t seed);

/// Interval-censored regressors: Y_j = 1, L_j ~ N(EL_j, spread^2),
/// U_j = L_j + (EU_j - EL_j) * Gamma(4, 1/4). Population means of L_jY_j and
/// U_jY_j equal the configured bounds.
struct IntervalDesign {
    double el1 = 0.3, eu1 = 0.4, el2 = -0.2, eu2 = 0.6;
    double spread = 0.25;
};
Dataset generate_interval(const IntervalDesign& design, std::size_t n, std::uint64_t seed);

/// Maximum-score design: x uniform on [-1,1]^2, eps logistic(0,1),
/// y = 1[x1 + theta0 x2 + eps >= 0], stored as z = -(2y - 1).
struct IndicatorDesign {
    double theta0 = 0.5;
};
Dataset generate_indicator(const IndicatorDesign& design, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Risk families

/// C_n(theta) = (2n)^{-1} sigma^{-2} sum ||y_i - theta' x_i||^2.
RiskPair gaussian_nll_risk(double sigma, const GaussianDesign& design);

/// 0.5 * curvature * ||theta - center||^2 on both sides; no data dependence.
RiskPair quadratic_risk(std::vector<double> center, double curvature);

/// Symmetric positive-definite weight matrix for the moment distance.
struct WeightMatrix {
    std::size_t dim = 0;
    std::vector<double> entries;  // row-major
    bool diagonal = true;
    static WeightMatrix identity(std::size_t dim);
    static WeightMatrix diag(std::vector<double> d);
    static WeightMatrix full(std::size_t dim, std::vector<double> entries);
};

/// inf_{psi >= 0} (m - psi)' V^{-1} (m - psi).
double orthant_distance_sq(std::span<const double> m, const WeightMatrix& v);

/// (UY1 - t1, UY2 - t2, t1 - LY1, t2 - LY2) with sample means of the products.
std::vector<double> interval_bound_moments(std::span<const double> theta, const Dataset& data);
std::vector<double> interval_population_moments(std::span<const double> theta, const IntervalDesign& design);

RiskPair moment_inequality_risk(const WeightMatrix& v, const IntervalDesign& design);

/// C_n(theta) = n^{-1} sum z_i 1[x_i' (1, theta) >= 0].
RiskPair indicator_risk(const IndicatorDesign& design);
double indicator_theoretical_risk(double theta, const IndicatorDesign& design);

RiskPair add_penalty(const RiskPair& base, double gamma_pen, std::vector<int> complexity);

/// Replaces the theoretical side by the empirical risk on a dedicated large
/// sample, drawn once with oracle_seed and bound at construction.
using DatasetGenerator = std::function<Dataset(std::size_t n, std::uint64_t seed)>;
RiskPair with_monte_carlo_oracle(const RiskPair& pair, const DatasetGenerator& generator,
                                 std::size_t m_oracle, std::uint64_t oracle_seed);

/// Empirical side replaced by the theoretical risk (R_n = R).
RiskPair plug_in(const RiskPair& pair);

/// max over cells of |R_n - R|.
double sup_risk_gap(const RiskPair& pair, const Dataset& data, const ModelSpace& space);

}  // namespace oblab
