#include "oblab/bic.hpp"

#include <algorithm>
#include <cmath>

#include "oblab/errors.hpp"
#include "oblab/numerics.hpp"

namespace oblab {

namespace {

struct ModelCells {
    std::vector<double> risk;       // unpenalized C_n
    std::vector<double> prior_log;  // within-model normalized ln nu(c|j)
};

ModelCells model_cells(const ModelSpace& space, const CellRisk& risk, ModelId j) {
    const Model& m = space.model(j);
    const std::size_t cells = m.box.cell_count();
    ModelCells mc;
    mc.risk.resize(cells);
    mc.prior_log.resize(cells);
    std::vector<double> theta(m.box.dimension());
    const double log_vol = std::log(m.box.cell_volume());
    for (std::size_t c = 0; c < cells; ++c) {
        m.box.cell_center(c, theta);
        mc.risk[c] = risk(j, theta);
        mc.prior_log[c] = m.density.log_density(m.box, theta) + log_vol;
    }
    const double lz = log_sum_exp(mc.prior_log);
    for (double& x : mc.prior_log) x -= lz;
    return mc;
}

double exact_from_cells(const ModelCells& mc, double lambda) {
    std::vector<double> terms(mc.risk.size());
    for (std::size_t c = 0; c < terms.size(); ++c) terms[c] = mc.prior_log[c] - lambda * mc.risk[c];
    const double l = log_sum_exp(terms);
    if (!std::isfinite(l)) throw ZeroMass("model integral underflows");
    return -l / lambda;
}

std::size_t argmin_cell(const std::vector<double>& risk) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < risk.size(); ++c)
        if (risk[c] < risk[best]) best = c;
    return best;
}

double dimension_term(double lambda, int d) { return std::log(lambda) / (2.0 * lambda) * d; }

bool box_contains(const ParameterBox& outer, const ParameterBox& inner) {
    if (outer.dimension() != inner.dimension()) return false;
    for (std::size_t k = 0; k < outer.dimension(); ++k) {
        const Axis& o = outer.axes()[k];
        const Axis& i = inner.axes()[k];
        if (o.pinned) {
            if (!i.pinned || i.lo != o.lo) return false;
        } else if (i.lo < o.lo || i.hi > o.hi) {
            return false;
        }
    }
    return true;
}

}  // namespace

double exact_log_marginal(const ModelSpace& space, const RiskPair& pair, double lambda, const Dataset& data,
                          ModelId j) {
    if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
    if (!(space.model(j).prior_weight > 0.0)) throw ZeroMass("model has zero prior weight");
    return exact_from_cells(model_cells(space, pair.bind_base(data), j), lambda);
}

double bic_approx(const ModelSpace& space, const RiskPair& pair, double lambda, const Dataset& data, ModelId j) {
    const auto mc = model_cells(space, pair.bind_base(data), j);
    const int d = static_cast<int>(space.model(j).box.free_dimension());
    return mc.risk[argmin_cell(mc.risk)] + dimension_term(lambda, d);
}

BicReport bic_report(const ModelSpace& space, const RiskPair& pair, double lambda, const Dataset& data) {
    const CellRisk risk = pair.bind_base(data);
    BicReport rep;
    std::vector<double> log_mass(space.size(), kNegInf);
    for (const auto& m : space.models()) {
        const auto mc = model_cells(space, risk, m.id);
        BicModelEntry e;
        e.id = m.id;
        e.d = static_cast<int>(m.box.free_dimension());
        e.exact = exact_from_cells(mc, lambda);
        const std::size_t best = argmin_cell(mc.risk);
        e.approx = mc.risk[best] + dimension_term(lambda, e.d);
        e.error = e.exact - e.approx;
        e.theta_hat = m.box.cell_center(best);
        rep.models.push_back(std::move(e));
        if (m.prior_weight > 0.0) log_mass[m.id] = std::log(m.prior_weight) - lambda * rep.models.back().exact;
    }
    std::vector<double> truth;
    for (ModelId t : space.true_ids()) truth.push_back(log_mass[t]);
    const double l0 = log_sum_exp(truth);
    for (const auto& m : space.models()) rep.log_ratio.push_back(log_mass[m.id] - l0);

    // Models attaining the global theoretical infimum whose boxes are not nested.
    const auto theo = theoretical_on_grid(pair.without_penalty(), space);
    std::vector<double> inf_j(space.size(), std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < theo.size(); ++c) {
        const ModelId j = space.model_of_cell(c);
        inf_j[j] = std::min(inf_j[j], theo[c]);
    }
    const double inf_all = *std::min_element(inf_j.begin(), inf_j.end());
    const double tol = 1e-9 * std::max(1.0, std::abs(inf_all));
    for (std::size_t a = 0; a < space.size(); ++a)
        for (std::size_t b = a + 1; b < space.size(); ++b) {
            if (inf_j[a] - inf_all > tol || inf_j[b] - inf_all > tol) continue;
            const auto& ba = space.model(static_cast<ModelId>(a)).box;
            const auto& bb = space.model(static_cast<ModelId>(b)).box;
            if (!box_contains(ba, bb) && !box_contains(bb, ba))
                rep.warnings.push_back("models " + std::to_string(a) + " and " + std::to_string(b) +
                                       " both attain the global infimum with non-nested parameter spaces; "
                                       "the polynomial-rate approximation may not apply");
        }
    return rep;
}

double bic_rate_check(const ModelSpace& space, const RiskPair& pair, const Dataset& data,
                      const std::vector<double>& lambda_grid, ModelId j) {
    if (lambda_grid.size() < 4) throw InvalidArgument("lambda grid needs at least 4 points");
    const auto [lo, hi] = std::minmax_element(lambda_grid.begin(), lambda_grid.end());
    if (*hi < 8.0 * *lo) throw InvalidArgument("lambda grid must span at least a factor of 8");
    const auto mc = model_cells(space, pair.bind_base(data), j);
    const int d = static_cast<int>(space.model(j).box.free_dimension());
    const double c_hat = mc.risk[argmin_cell(mc.risk)];
    std::vector<double> x, y;
    for (double lambda : lambda_grid) {
        const double err = exact_from_cells(mc, lambda) - (c_hat + dimension_term(lambda, d));
        if (!(std::abs(err) > 1e-14)) throw DegenerateFit("BIC error is numerically zero at lambda " + std::to_string(lambda));
        x.push_back(std::log(lambda));
        y.push_back(std::log(std::abs(err)));
    }
    return ols_slope(x, y);
}

std::string to_string(RatioRegime r) {
    switch (r) {
        case RatioRegime::WrongExponential: return "wrong-exponential";
        case RatioRegime::TruePolynomial: return "true-polynomial";
        case RatioRegime::Reference: return "reference";
    }
    return "unknown";
}

RatioDiagnostics model_ratio_diagnostics(const QuasiPosterior& qp, const RiskPair& pair) {
    const ModelSpace& space = *qp.space;
    const double l0 = [&] {
        std::vector<double> sel;
        for (std::size_t c = 0; c < qp.log_pi.size(); ++c)
            if (space.is_true(space.model_of_cell(c))) sel.push_back(qp.log_pi[c]);
        return log_sum_exp(sel);
    }();
    if (l0 == kNegInf) throw ZeroMass("true model set has zero posterior mass");

    std::vector<double> inf_j(space.size(), std::numeric_limits<double>::infinity());
    std::vector<std::vector<double>> logs(space.size());
    for (const auto& m : space.models()) {
        const std::size_t off = space.offset(m.id);
        std::vector<double> theta(m.box.dimension());
        for (std::size_t c = 0; c < m.box.cell_count(); ++c) {
            m.box.cell_center(c, theta);
            inf_j[m.id] = std::min(inf_j[m.id], pair.theoretical_base(m.id, theta));
            logs[m.id].push_back(qp.log_pi[off + c]);
        }
    }
    const double inf_all = *std::min_element(inf_j.begin(), inf_j.end());
    const double tol = 1e-9 * std::max(1.0, std::abs(inf_all));
    std::size_t d0 = std::numeric_limits<std::size_t>::max();
    for (ModelId t : space.true_ids()) d0 = std::min(d0, space.model(t).box.free_dimension());

    RatioDiagnostics out;
    for (const auto& m : space.models()) {
        ModelRatio r;
        r.id = m.id;
        r.log_ratio = log_sum_exp(logs[m.id]) - l0;
        if (space.is_true(m.id)) {
            r.regime = RatioRegime::Reference;
        } else if (inf_j[m.id] - inf_all > tol) {
            r.regime = RatioRegime::WrongExponential;
        } else {
            r.regime = RatioRegime::TruePolynomial;
            if (m.box.free_dimension() <= d0)
                out.warnings.push_back("model " + std::to_string(m.id) +
                                       " attains the global infimum without extra dimensions (non-nested truth)");
        }
        out.models.push_back(r);
    }
    return out;
}

double ratio_slope(SpacePtr space, const RiskPair& pair, const Dataset& data,
                   const std::vector<double>& lambda_grid, ModelId j) {
    const RiskGrid g = evaluate_on_grid(pair, *space, data);
    std::vector<double> x, y;
    for (double lambda : lambda_grid) {
        const auto qp = build_from_risks(space, g, lambda, pair.tag());
        const auto diag = model_ratio_diagnostics(qp, pair);
        x.push_back(std::log(lambda));
        y.push_back(diag.models.at(static_cast<std::size_t>(j)).log_ratio);
    }
    return ols_slope(x, y);
}

}  // namespace oblab
