#include "oblab/risks.hpp"

#include <algorithm>
#include <cmath>

#include "oblab/errors.hpp"
#include "oblab/numerics.hpp"
#include "oblab/rng.hpp"

namespace oblab {

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::vector<std::string> cols, std::vector<double> vals, std::uint64_t seed_,
                 std::string generator)
    : columns(std::move(cols)), values(std::move(vals)), seed(seed_), generator_id(std::move(generator)) {
    if (columns.empty()) throw SchemaMismatch("dataset needs at least one column");
    if (values.size() % columns.size() != 0) throw SchemaMismatch("ragged dataset rows");
    n = values.size() / columns.size();
    if (n < 1) throw SchemaMismatch("dataset needs n >= 1");
}

std::size_t Dataset::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw SchemaMismatch("dataset '" + generator_id + "' has no column '" + std::string(name) + "'");
}

bool Dataset::has_column(std::string_view name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::string TheoreticalTag::describe() const {
    if (kind == Kind::Analytic) return "analytic";
    return "monte-carlo-oracle(" + std::to_string(m_oracle) + ")";
}

double Penalty::term(ModelId j) const {
    return gamma_pen * static_cast<double>(complexity.at(static_cast<std::size_t>(j)));
}

// ---------------------------------------------------------------------------
// RiskPair

RiskPair::RiskPair(std::string tag, RiskBinder empirical, CellRisk theoretical, TheoreticalTag theoretical_tag)
    : tag_(std::move(tag)),
      empirical_(std::move(empirical)),
      theoretical_(std::move(theoretical)),
      theoretical_tag_(theoretical_tag) {}

CellRisk RiskPair::bind_base(const Dataset& data) const { return empirical_(data); }

CellRisk RiskPair::bind(const Dataset& data) const {
    CellRisk base = empirical_(data);
    if (!penalty_) return base;
    return [base = std::move(base), p = *penalty_](ModelId j, std::span<const double> theta) {
        return base(j, theta) + p.term(j);
    };
}

double RiskPair::empirical(ModelId j, std::span<const double> theta, const Dataset& data) const {
    return bind(data)(j, theta);
}

double RiskPair::theoretical_base(ModelId j, std::span<const double> theta) const {
    return theoretical_(j, theta);
}

double RiskPair::theoretical(ModelId j, std::span<const double> theta) const {
    const double base = theoretical_(j, theta);
    return penalty_ ? base + penalty_->term(j) : base;
}

RiskPair RiskPair::with_penalty(Penalty p) const {
    RiskPair out = *this;
    out.penalty_ = std::move(p);
    return out;
}

RiskPair RiskPair::without_penalty() const {
    RiskPair out = *this;
    out.penalty_.reset();
    return out;
}

RiskPair RiskPair::with_theoretical(CellRisk theoretical, TheoreticalTag tag) const {
    RiskPair out = *this;
    out.theoretical_ = std::move(theoretical);
    out.theoretical_tag_ = tag;
    return out;
}

RiskGrid evaluate_on_grid(const RiskPair& pair, const ModelSpace& space, const Dataset& data) {
    const CellRisk emp = pair.bind(data);
    RiskGrid g;
    g.empirical.resize(space.total_cells());
    g.theoretical.resize(space.total_cells());
    parallel_for(space.total_cells(), [&](std::size_t c) {
        const ModelId j = space.model_of_cell(c);
        std::vector<double> theta(space.model(j).box.dimension());
        space.cell_center(c, theta);
        g.empirical[c] = emp(j, theta);
        g.theoretical[c] = pair.theoretical(j, theta);
    });
    return g;
}

std::vector<double> theoretical_on_grid(const RiskPair& pair, const ModelSpace& space) {
    std::vector<double> out(space.total_cells());
    parallel_for(space.total_cells(), [&](std::size_t c) {
        const ModelId j = space.model_of_cell(c);
        std::vector<double> theta(space.model(j).box.dimension());
        space.cell_center(c, theta);
        out[c] = pair.theoretical(j, theta);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Data-generating processes

Dataset generate_gaussian(const GaussianDesign& design, std::size_t n, std::uint64_t seed) {
    const std::size_t d = design.dim();
    if (d < 1) throw InvalidArgument("gaussian design needs at least one coefficient");
    std::vector<std::string> cols;
    for (std::size_t k = 0; k < d; ++k) cols.push_back("x" + std::to_string(k));
    cols.push_back("y");
    Rng rng(seed);
    std::vector<double> vals;
    vals.reserve(n * (d + 1));
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n; ++i) {
        x[0] = 1.0;
        for (std::size_t k = 1; k < d; ++k) x[k] = rng.normal();
        double y = design.noise_sd * rng.normal();
        for (std::size_t k = 0; k < d; ++k) y += design.theta0[k] * x[k];
        vals.insert(vals.end(), x.begin(), x.end());
        vals.push_back(y);
    }
    return Dataset(std::move(cols), std::move(vals), seed, "gaussian");
}

Dataset generate_interval(const IntervalDesign& design, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> vals;
    vals.reserve(n * 6);
    const double w1 = design.eu1 - design.el1;
    const double w2 = design.eu2 - design.el2;
    if (!(w1 > 0.0) || !(w2 > 0.0)) throw InvalidArgument("interval design needs EU > EL");
    auto gamma4 = [&rng] {
        return 0.25 * (rng.exponential() + rng.exponential() + rng.exponential() + rng.exponential());
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double l1 = rng.normal(design.el1, design.spread);
        const double u1 = l1 + w1 * gamma4();
        const double l2 = rng.normal(design.el2, design.spread);
        const double u2 = l2 + w2 * gamma4();
        vals.insert(vals.end(), {l1, u1, 1.0, l2, u2, 1.0});
    }
    return Dataset({"L1", "U1", "Y1", "L2", "U2", "Y2"}, std::move(vals), seed, "interval");
}

Dataset generate_indicator(const IndicatorDesign& design, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> vals;
    vals.reserve(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = rng.uniform(-1.0, 1.0);
        const double x2 = rng.uniform(-1.0, 1.0);
        const double eps = rng.logistic();
        const double y = (x1 + design.theta0 * x2 + eps >= 0.0) ? 1.0 : 0.0;
        vals.insert(vals.end(), {x1, x2, -(2.0 * y - 1.0)});
    }
    return Dataset({"x1", "x2", "z"}, std::move(vals), seed, "indicator");
}

// ---------------------------------------------------------------------------
// Gaussian negative log-likelihood

RiskPair gaussian_nll_risk(double sigma, const GaussianDesign& design) {
    if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
    const std::size_t d = design.dim();
    const double scale = 1.0 / (2.0 * sigma * sigma);

    RiskBinder binder = [d, scale](const Dataset& data) -> CellRisk {
        std::vector<std::size_t> xcol(d);
        for (std::size_t k = 0; k < d; ++k) xcol[k] = data.column("x" + std::to_string(k));
        const std::size_t ycol = data.column("y");
        // Sufficient statistics: sum y^2, sum x y, sum x x'.
        CompensatedSum syy;
        std::vector<CompensatedSum> sxy(d), sxx(d * d);
        for (std::size_t i = 0; i < data.n; ++i) {
            const double y = data.at(i, ycol);
            syy.add(y * y);
            for (std::size_t a = 0; a < d; ++a) {
                const double xa = data.at(i, xcol[a]);
                sxy[a].add(xa * y);
                for (std::size_t b = 0; b < d; ++b) sxx[a * d + b].add(xa * data.at(i, xcol[b]));
            }
        }
        const double inv_n = 1.0 / static_cast<double>(data.n);
        std::vector<double> mxy(d), mxx(d * d);
        for (std::size_t a = 0; a < d; ++a) mxy[a] = sxy[a].value() * inv_n;
        for (std::size_t k = 0; k < d * d; ++k) mxx[k] = sxx[k].value() * inv_n;
        const double myy = syy.value() * inv_n;
        return [d, scale, myy, mxy = std::move(mxy), mxx = std::move(mxx)](ModelId, std::span<const double> theta) {
            if (theta.size() != d) throw DimensionMismatch("gaussian risk expects theta of dimension " + std::to_string(d));
            double quad = 0.0, lin = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                lin += theta[a] * mxy[a];
                for (std::size_t b = 0; b < d; ++b) quad += theta[a] * mxx[a * d + b] * theta[b];
            }
            return scale * (myy - 2.0 * lin + quad);
        };
    };
    CellRisk theoretical = [design, scale](ModelId, std::span<const double> theta) {
        double dist2 = 0.0;
        for (std::size_t k = 0; k < design.dim(); ++k) {
            const double e = theta[k] - design.theta0[k];
            dist2 += e * e;
        }
        return scale * (design.noise_sd * design.noise_sd + dist2);
    };
    return RiskPair("gaussian-nll", std::move(binder), std::move(theoretical), {});
}

RiskPair quadratic_risk(std::vector<double> center, double curvature) {
    if (!(curvature > 0.0)) throw InvalidArgument("quadratic risk needs positive curvature");
    CellRisk f = [center = std::move(center), curvature](ModelId, std::span<const double> theta) {
        double s = 0.0;
        for (std::size_t k = 0; k < center.size(); ++k) s += (theta[k] - center[k]) * (theta[k] - center[k]);
        return 0.5 * curvature * s;
    };
    RiskBinder binder = [f](const Dataset&) { return f; };
    return RiskPair("quadratic", std::move(binder), f, {});
}

// ---------------------------------------------------------------------------
// Moment inequalities

WeightMatrix WeightMatrix::identity(std::size_t dim) { return diag(std::vector<double>(dim, 1.0)); }

WeightMatrix WeightMatrix::diag(std::vector<double> d) {
    for (double x : d)
        if (!(x > 0.0)) throw NotPositiveDefinite("diagonal weight entries must be positive");
    const std::size_t dim = d.size();
    std::vector<double> e(dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = d[i];
    return WeightMatrix{dim, std::move(e), true};
}

namespace {
std::vector<double> cholesky(std::span<const double> a, std::size_t n);
}

WeightMatrix WeightMatrix::full(std::size_t dim, std::vector<double> entries) {
    if (entries.size() != dim * dim) throw InvalidArgument("weight matrix has wrong entry count");
    if (dim > 8) throw InvalidArgument("full weight matrix limited to dimension 8");
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t k = 0; k < i; ++k)
            if (std::abs(entries[i * dim + k] - entries[k * dim + i]) > 1e-12)
                throw NotPositiveDefinite("weight matrix is not symmetric");
    (void)cholesky(entries, dim);
    return WeightMatrix{dim, std::move(entries), false};
}

namespace {

// Lower Cholesky factor of a small symmetric matrix, row-major.
std::vector<double> cholesky(std::span<const double> a, std::size_t n) {
    std::vector<double> l(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k <= i; ++k) {
            double s = a[i * n + k];
            for (std::size_t p = 0; p < k; ++p) s -= l[i * n + p] * l[k * n + p];
            if (i == k) {
                if (!(s > 0.0)) throw NotPositiveDefinite("matrix is not positive definite");
                l[i * n + i] = std::sqrt(s);
            } else {
                l[i * n + k] = s / l[k * n + k];
            }
        }
    }
    return l;
}

// Solves (L L') x = b in place.
void cholesky_solve(std::span<const double> l, std::size_t n, std::span<double> b) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t p = 0; p < i; ++p) s -= l[i * n + p] * b[p];
        b[i] = s / l[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t p = i + 1; p < n; ++p) s -= l[p * n + i] * b[p];
        b[i] = s / l[i * n + i];
    }
}

// Lawson-Hanson active set for min (m - psi)' W (m - psi), psi >= 0, with
// W = V^{-1}. Works on the normal equations: gradient g = W (m - psi).
double project_full(std::span<const double> m, const WeightMatrix& v) {
    const std::size_t n = v.dim;
    const auto lv = cholesky(v.entries, n);
    // W = V^{-1}, column by column.
    std::vector<double> w(n * n);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::fill(col.begin(), col.end(), 0.0);
        col[k] = 1.0;
        cholesky_solve(lv, n, col);
        for (std::size_t i = 0; i < n; ++i) w[i * n + k] = col[i];
    }
    auto residual_grad = [&](const std::vector<double>& psi) {
        std::vector<double> g(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) g[i] += w[i * n + k] * (m[k] - psi[k]);
        return g;
    };
    // Unconstrained least squares over the passive set P: psi_P solves
    // W_PP psi_P = W_P. m (columns outside P fixed at zero).
    auto solve_passive = [&](const std::vector<bool>& passive) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (passive[i]) idx.push_back(i);
        const std::size_t p = idx.size();
        std::vector<double> a(p * p), rhs(p);
        for (std::size_t r = 0; r < p; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += w[idx[r] * n + k] * m[k];
            rhs[r] = s;
            for (std::size_t c = 0; c < p; ++c) a[r * p + c] = w[idx[r] * n + idx[c]];
        }
        std::vector<double> s(n, 0.0);
        if (p > 0) {
            const auto la = cholesky(a, p);
            cholesky_solve(la, p, rhs);
            for (std::size_t r = 0; r < p; ++r) s[idx[r]] = rhs[r];
        }
        return s;
    };

    const double tol = 1e-14;
    std::vector<double> psi(n, 0.0);
    std::vector<bool> passive(n, false);
    const std::size_t cap = std::size_t{1} << n;
    std::size_t iter = 0;
    for (;;) {
        // Descent direction for increasing psi_i is +g_i (objective gradient is -2g).
        auto g = residual_grad(psi);
        std::size_t best = n;
        double best_g = tol;
        for (std::size_t i = 0; i < n; ++i)
            if (!passive[i] && g[i] > best_g) {
                best_g = g[i];
                best = i;
            }
        if (best == n) break;
        if (++iter > cap)
            throw ProjectionNotConverged("active-set projection exceeded " + std::to_string(cap) + " iterations");
        passive[best] = true;
        for (;;) {
            auto s = solve_passive(passive);
            bool feasible = true;
            for (std::size_t i = 0; i < n; ++i)
                if (passive[i] && s[i] <= 0.0) feasible = false;
            if (feasible) {
                psi = std::move(s);
                break;
            }
            double alpha = 1.0;
            for (std::size_t i = 0; i < n; ++i)
                if (passive[i] && s[i] <= 0.0) alpha = std::min(alpha, psi[i] / (psi[i] - s[i]));
            for (std::size_t i = 0; i < n; ++i) psi[i] += alpha * (s[i] - psi[i]);
            for (std::size_t i = 0; i < n; ++i)
                if (passive[i] && psi[i] <= tol) {
                    passive[i] = false;
                    psi[i] = 0.0;
                }
        }
    }
    double val = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) val += (m[i] - psi[i]) * w[i * n + k] * (m[k] - psi[k]);
    return std::max(val, 0.0);
}

}  // namespace

double orthant_distance_sq(std::span<const double> m, const WeightMatrix& v) {
    if (m.size() != v.dim) throw DimensionMismatch("moment vector and weight matrix differ in dimension");
    if (v.diagonal) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.dim; ++i) {
            const double neg = std::min(m[i], 0.0);
            s += neg * neg / v.entries[i * v.dim + i];
        }
        return s;
    }
    return project_full(m, v);
}

namespace {

struct IntervalMeans {
    double uy1, uy2, ly1, ly2;
};

IntervalMeans interval_means(const Dataset& data) {
    const std::size_t l1 = data.column("L1"), u1 = data.column("U1"), y1 = data.column("Y1");
    const std::size_t l2 = data.column("L2"), u2 = data.column("U2"), y2 = data.column("Y2");
    CompensatedSum suy1, suy2, sly1, sly2;
    for (std::size_t i = 0; i < data.n; ++i) {
        suy1.add(data.at(i, u1) * data.at(i, y1));
        suy2.add(data.at(i, u2) * data.at(i, y2));
        sly1.add(data.at(i, l1) * data.at(i, y1));
        sly2.add(data.at(i, l2) * data.at(i, y2));
    }
    const double inv = 1.0 / static_cast<double>(data.n);
    return {suy1.value() * inv, suy2.value() * inv, sly1.value() * inv, sly2.value() * inv};
}

std::vector<double> moments_from_means(std::span<const double> theta, const IntervalMeans& mm) {
    if (theta.size() != 2) throw DimensionMismatch("interval moments expect a 2-vector theta");
    return {mm.uy1 - theta[0], mm.uy2 - theta[1], theta[0] - mm.ly1, theta[1] - mm.ly2};
}

}  // namespace

std::vector<double> interval_bound_moments(std::span<const double> theta, const Dataset& data) {
    return moments_from_means(theta, interval_means(data));
}

std::vector<double> interval_population_moments(std::span<const double> theta, const IntervalDesign& d) {
    return moments_from_means(theta, IntervalMeans{d.eu1, d.eu2, d.el1, d.el2});
}

RiskPair moment_inequality_risk(const WeightMatrix& v, const IntervalDesign& design) {
    if (v.dim != 4) throw DimensionMismatch("interval-bound moments need a 4x4 weight matrix");
    if (!v.diagonal) (void)cholesky(v.entries, v.dim);  // NotPositiveDefinite early
    RiskBinder binder = [v](const Dataset& data) -> CellRisk {
        const IntervalMeans mm = interval_means(data);
        return [v, mm](ModelId, std::span<const double> theta) {
            const auto m = moments_from_means(theta, mm);
            return orthant_distance_sq(m, v);
        };
    };
    CellRisk theoretical = [v, design](ModelId, std::span<const double> theta) {
        return orthant_distance_sq(interval_population_moments(theta, design), v);
    };
    return RiskPair("moment-inequality", std::move(binder), std::move(theoretical), {});
}

// ---------------------------------------------------------------------------
// Indicator (maximum score) risk

namespace {

double log_cosh(double x) {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

// Inner integral over x1 in [max(-1, -theta x2), 1] of tanh((x1 + theta0 x2)/2).
double inner_integral(double x2, double theta, double theta0) {
    const double lower = std::clamp(-theta * x2, -1.0, 1.0);
    return 2.0 * (log_cosh((1.0 + theta0 * x2) / 2.0) - log_cosh((lower + theta0 * x2) / 2.0));
}

double simpson(double a, double b, int intervals, const std::function<double(double)>& f) {
    const double h = (b - a) / intervals;
    CompensatedSum s;
    s.add(f(a));
    s.add(f(b));
    for (int i = 1; i < intervals; ++i) s.add((i % 2 ? 4.0 : 2.0) * f(a + i * h));
    return s.value() * h / 3.0;
}

}  // namespace

double indicator_theoretical_risk(double theta, const IndicatorDesign& design) {
    // Split [-1, 1] at the kinks of the clamp, x2 = +-1/theta.
    std::vector<double> knots{-1.0, 1.0};
    if (std::abs(theta) > 1.0) {
        knots.push_back(-1.0 / std::abs(theta));
        knots.push_back(1.0 / std::abs(theta));
    }
    std::sort(knots.begin(), knots.end());
    auto f = [&](double x2) { return inner_integral(x2, theta, design.theta0); };
    CompensatedSum total;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        if (knots[k + 1] > knots[k]) total.add(simpson(knots[k], knots[k + 1], 2000, f));
    return -0.25 * total.value();
}

RiskPair indicator_risk(const IndicatorDesign& design) {
    RiskBinder binder = [](const Dataset& data) -> CellRisk {
        const std::size_t cx1 = data.column("x1"), cx2 = data.column("x2"), cz = data.column("z");
        std::vector<double> x1(data.n), x2(data.n), z(data.n);
        for (std::size_t i = 0; i < data.n; ++i) {
            x1[i] = data.at(i, cx1);
            x2[i] = data.at(i, cx2);
            z[i] = data.at(i, cz);
        }
        const double inv = 1.0 / static_cast<double>(data.n);
        return [x1 = std::move(x1), x2 = std::move(x2), z = std::move(z), inv](ModelId,
                                                                              std::span<const double> theta) {
            if (theta.size() != 1) throw DimensionMismatch("indicator risk expects a scalar theta");
            const double t = theta[0];
            double s = 0.0;  // integer-valued partial sums of +-1: exact
            for (std::size_t i = 0; i < x1.size(); ++i)
                if (x1[i] + t * x2[i] >= 0.0) s += z[i];
            return s * inv;
        };
    };
    CellRisk theoretical = [design](ModelId, std::span<const double> theta) {
        return indicator_theoretical_risk(theta[0], design);
    };
    return RiskPair("indicator", std::move(binder), std::move(theoretical), {});
}

// ---------------------------------------------------------------------------

RiskPair add_penalty(const RiskPair& base, double gamma_pen, std::vector<int> complexity) {
    if (!(gamma_pen > 0.0)) throw InvalidArgument("gamma_pen must be positive");
    return base.with_penalty(Penalty{gamma_pen, std::move(complexity)});
}

RiskPair with_monte_carlo_oracle(const RiskPair& pair, const DatasetGenerator& generator, std::size_t m_oracle,
                                 std::uint64_t oracle_seed) {
    const Dataset big = generator(m_oracle, oracle_seed);
    CellRisk oracle = pair.bind_base(big);
    return pair.with_theoretical(std::move(oracle), {TheoreticalTag::Kind::MonteCarloOracle, m_oracle});
}

RiskPair plug_in(const RiskPair& pair) {
    RiskBinder binder = [pair](const Dataset&) -> CellRisk {
        return [pair](ModelId j, std::span<const double> theta) { return pair.theoretical_base(j, theta); };
    };
    RiskPair out(pair.tag() + "+plug-in", std::move(binder),
                 [pair](ModelId j, std::span<const double> theta) { return pair.theoretical_base(j, theta); },
                 pair.theoretical_tag());
    if (pair.penalty()) out = out.with_penalty(*pair.penalty());
    return out;
}

double sup_risk_gap(const RiskPair& pair, const Dataset& data, const ModelSpace& space) {
    const RiskGrid g = evaluate_on_grid(pair, space, data);
    double mx = 0.0;
    for (std::size_t c = 0; c < g.empirical.size(); ++c)
        mx = std::max(mx, std::abs(g.empirical[c] - g.theoretical[c]));
    return mx;
}

}  // namespace oblab
