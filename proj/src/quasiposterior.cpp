#include "oblab/quasiposterior.hpp"

#include <algorithm>
#include <cmath>

#include "oblab/errors.hpp"
#include "oblab/numerics.hpp"
#include "oblab/rng.hpp"

namespace oblab {

namespace {

std::vector<double> normalized_log(std::vector<double> logw) {
    const double lz = log_sum_exp(logw);
    if (!std::isfinite(lz)) throw ZeroMass("all quasi-posterior log-weights underflow (log-normalizer " + std::to_string(lz) + ")");
    for (double& x : logw) x -= lz;
    return logw;
}

std::vector<double> tempered_log(std::span<const double> risk, std::span<const double> prior_log, double lambda) {
    std::vector<double> lw(risk.size());
    for (std::size_t c = 0; c < risk.size(); ++c)
        lw[c] = prior_log[c] == kNegInf ? kNegInf : -lambda * risk[c] + prior_log[c];
    return lw;
}

// pi(c) must be proportional to exp(-lambda R_n(c)) kappa(c); spot-checked on
// a fixed pseudo-random sample of cells.
void verify_proportionality(const QuasiPosterior& qp) {
    Rng rng(0x5eedc0deULL);
    const std::size_t cells = qp.pi.size();
    double ref = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < 16; ++k) {
        const std::size_t c = rng.index(cells);
        const double w = qp.pi.weight(c);
        if (w <= 0.0 || qp.prior_log[c] == kNegInf) continue;
        const double offset = std::log(w) - (-qp.lambda * qp.empirical_risk[c] + qp.prior_log[c]);
        if (std::isnan(ref)) {
            ref = offset;
        } else if (std::abs(offset - ref) > 1e-8 * std::max(1.0, std::abs(ref))) {
            throw CheckFailed("quasi-posterior weights are not proportional to exp(-lambda R_n) kappa");
        }
    }
}

}  // namespace

QuasiPosterior build_from_risks(SpacePtr space, RiskGrid risks, double lambda, std::string risk_tag) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive and finite");
    if (risks.empirical.size() != space->total_cells() || risks.theoretical.size() != space->total_cells())
        throw SupportMismatch("risk grid does not match the model space");
    for (std::size_t c = 0; c < risks.empirical.size(); ++c)
        if (!std::isfinite(risks.empirical[c]) || !std::isfinite(risks.theoretical[c]))
            throw NonFinite("risk is not finite at cell " + std::to_string(c));

    auto prior_log = prior_log_weights(*space);
    auto log_pi = normalized_log(tempered_log(risks.empirical, prior_log, lambda));
    auto log_phi = normalized_log(tempered_log(risks.theoretical, prior_log, lambda));
    GridMeasure prior = from_log_weights(space, prior_log);
    GridMeasure pi = from_log_weights(space, log_pi);
    GridMeasure phi = from_log_weights(space, log_phi);
    QuasiPosterior qp{lambda,
                      space,
                      std::move(risk_tag),
                      std::move(risks.empirical),
                      std::move(risks.theoretical),
                      std::move(prior_log),
                      std::move(log_pi),
                      std::move(log_phi),
                      std::move(prior),
                      std::move(pi),
                      std::move(phi)};
    verify_proportionality(qp);
    return qp;
}

QuasiPosterior build(SpacePtr space, const RiskPair& pair, double lambda, const Dataset& data) {
    if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
    RiskGrid g = evaluate_on_grid(pair, *space, data);
    return build_from_risks(std::move(space), std::move(g), lambda, pair.tag());
}

double model_probability(const QuasiPosterior& qp, const ModelSet& ids) { return model_mass(qp.pi, ids); }

double misselection_probability(const QuasiPosterior& qp) {
    const ModelSet others = qp.space->complement(qp.space->true_ids());
    return others.empty() ? 0.0 : model_probability(qp, others);
}

ModelId map_model(const QuasiPosterior& qp) {
    const auto masses = model_masses(qp.pi);
    ModelId best = 0;
    for (std::size_t j = 1; j < masses.size(); ++j)
        if (masses[j] > masses[static_cast<std::size_t>(best)]) best = static_cast<ModelId>(j);
    return best;
}

GridMeasure conditional(const QuasiPosterior& qp, const ModelSet& ids) {
    std::vector<double> logw(qp.log_pi.size(), kNegInf);
    for (ModelId j : ids) {
        const std::size_t off = qp.space->offset(j);
        for (std::size_t c = 0; c < qp.space->cells_of(j); ++c) logw[off + c] = qp.log_pi[off + c];
    }
    return from_log_weights(qp.space, logw);
}

GridMeasure oracle_posterior(const QuasiPosterior& qp) {
    return conditional(qp, qp.space->true_ids());
}

ModelSet map_selection(const QuasiPosterior& qp) {
    const ModelSpace& space = *qp.space;
    const auto masses = model_masses(qp.pi);
    // a multi-model true set is one mixture model; other models stand alone
    std::vector<ModelSet> units;
    bool true_placed = false;
    for (ModelId j = 0; j < static_cast<ModelId>(space.size()); ++j) {
        if (!space.is_true(j)) {
            units.push_back({j});
        } else if (!true_placed) {
            units.push_back(space.true_ids());
            true_placed = true;
        }
    }
    std::size_t best = 0;
    double best_mass = -1.0;
    for (std::size_t u = 0; u < units.size(); ++u) {
        CompensatedSum m;
        for (ModelId j : units[u]) m.add(masses[static_cast<std::size_t>(j)]);
        if (m.value() > best_mass) {
            best_mass = m.value();
            best = u;
        }
    }
    return units[best];
}

GridMeasure selection_posterior(const QuasiPosterior& qp) { return conditional(qp, map_selection(qp)); }

MeanDecomposition mean_decomposition(const QuasiPosterior& qp) {
    const ModelSpace& space = *qp.space;
    const std::size_t dim = space.ambient_dimension();
    const ModelSet& truth = space.true_ids();

    const auto e_all = mean(qp.pi);
    const auto e_true = mean(conditional(qp, truth));

    MeanDecomposition out;
    out.lhs.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) out.lhs[d] = e_all[d] - e_true[d];

    out.rhs_per_model.assign(space.size(), std::vector<double>(dim, 0.0));
    std::vector<CompensatedSum> total(dim);
    for (const auto& m : space.models()) {
        if (space.is_true(m.id)) continue;
        const double pj = model_mass(qp.pi, {m.id});
        if (pj <= 0.0) continue;
        const auto e_j = mean(conditional(qp, {m.id}));
        for (std::size_t d = 0; d < dim; ++d) {
            out.rhs_per_model[m.id][d] = pj * (e_j[d] - e_true[d]);
            total[d].add(out.rhs_per_model[m.id][d]);
        }
    }
    out.rhs_total.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) out.rhs_total[d] = total[d].value();

    out.two_term.assign(dim, 0.0);
    const ModelSet others = space.complement(truth);
    const double pc = others.empty() ? 0.0 : model_mass(qp.pi, others);
    if (pc > 0.0) {
        const auto e_c = mean(conditional(qp, others));
        for (std::size_t d = 0; d < dim; ++d) out.two_term[d] = pc * (e_c[d] - e_true[d]);
    }
    for (std::size_t d = 0; d < dim; ++d) {
        out.residual = std::max(out.residual, std::abs(out.lhs[d] - out.rhs_total[d]));
        out.residual = std::max(out.residual, std::abs(out.lhs[d] - out.two_term[d]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metropolis cross-check

namespace {

struct ModelProposal {
    std::vector<double> cell_cdf;  // cumulative within-model pi weights
    double within_mass = 0.0;
    double cell_volume = 1.0;
    double box_volume = 1.0;
    std::vector<double> step;      // per ambient axis, 0 on pinned axes
    bool has_free = false;
};

}  // namespace

MetropolisResult metropolis_check(const QuasiPosterior& qp, const RiskPair& pair, const Dataset& data,
                                  std::size_t steps, std::uint64_t seed) {
    if (steps < 10'000) throw InvalidArgument("metropolis_check needs at least 1e4 steps");
    const ModelSpace& space = *qp.space;
    const CellRisk risk = pair.bind(data);
    const std::size_t nmodels = space.size();

    // Within-model prior density, piecewise constant on cells.
    auto log_prior_density = [&](ModelId j, std::span<const double> theta) {
        const Model& m = space.model(j);
        const auto local = m.box.locate(theta);
        if (!local) return kNegInf;
        const double lp = qp.prior_log[space.offset(j) + *local];
        return lp - std::log(m.box.cell_volume());
    };
    auto log_target = [&](ModelId j, std::span<const double> theta) {
        const double lp = log_prior_density(j, theta);
        if (lp == kNegInf) return kNegInf;
        return lp - qp.lambda * risk(j, theta);
    };

    std::vector<ModelProposal> prop(nmodels);
    for (const auto& m : space.models()) {
        auto& p = prop[m.id];
        const std::size_t off = space.offset(m.id);
        const std::size_t cells = m.box.cell_count();
        p.cell_cdf.resize(cells);
        CompensatedSum acc;
        for (std::size_t c = 0; c < cells; ++c) {
            acc.add(qp.pi.weight(off + c));
            p.cell_cdf[c] = acc.value();
        }
        p.within_mass = acc.value();
        p.cell_volume = m.box.cell_volume();
        p.box_volume = p.cell_volume * static_cast<double>(cells);
        p.has_free = m.box.free_dimension() > 0;
        // Random-walk scale from the grid conditional spread, floored at one cell.
        const std::size_t dim = m.box.dimension();
        p.step.assign(dim, 0.0);
        std::vector<CompensatedSum> s1(dim), s2(dim);
        std::vector<double> theta(dim);
        for (std::size_t c = 0; c < cells; ++c) {
            const double w = p.within_mass > 0.0 ? qp.pi.weight(off + c) / p.within_mass : 1.0 / cells;
            m.box.cell_center(c, theta);
            for (std::size_t d = 0; d < dim; ++d) {
                s1[d].add(w * theta[d]);
                s2[d].add(w * theta[d] * theta[d]);
            }
        }
        const double scale = p.has_free ? 2.4 / std::sqrt(static_cast<double>(m.box.free_dimension())) : 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const Axis& a = m.box.axes()[d];
            if (a.pinned) continue;
            const double var = std::max(0.0, s2[d].value() - s1[d].value() * s1[d].value());
            p.step[d] = std::max(scale * std::sqrt(var), a.step());
        }
    }

    Rng rng(seed);
    constexpr double kGridShare = 0.9;

    // Independence proposal for a fresh theta inside model j: mixture of the
    // grid conditional (uniform within the chosen cell) and uniform on the box.
    auto draw_in_model = [&](ModelId j, std::vector<double>& theta) {
        const Model& m = space.model(j);
        const auto& p = prop[j];
        theta.assign(m.box.dimension(), 0.0);
        std::size_t cell;
        if (p.within_mass > 0.0 && rng.uniform() < kGridShare) {
            const double u = rng.uniform() * p.within_mass;
            cell = static_cast<std::size_t>(std::lower_bound(p.cell_cdf.begin(), p.cell_cdf.end(), u) - p.cell_cdf.begin());
            cell = std::min(cell, m.box.cell_count() - 1);
        } else {
            cell = rng.index(m.box.cell_count());
        }
        m.box.cell_center(cell, theta);
        for (std::size_t d = 0; d < theta.size(); ++d) {
            const Axis& a = m.box.axes()[d];
            if (!a.pinned) theta[d] += (rng.uniform() - 0.5) * a.step();
        }
    };
    auto log_proposal_density = [&](ModelId j, std::span<const double> theta) {
        const Model& m = space.model(j);
        const auto& p = prop[j];
        if (!p.has_free) return 0.0;
        const auto local = m.box.locate(theta);
        if (!local) return kNegInf;
        const double w = qp.pi.weight(space.offset(j) + *local);
        const double grid_part = p.within_mass > 0.0 ? kGridShare * w / (p.within_mass * p.cell_volume) : 0.0;
        const double unif_share = p.within_mass > 0.0 ? 1.0 - kGridShare : 1.0;
        return std::log(grid_part + unif_share / p.box_volume);
    };

    // Start at the highest-weight cell.
    std::size_t start = 0;
    for (std::size_t c = 1; c < qp.pi.size(); ++c)
        if (qp.pi.weight(c) > qp.pi.weight(start)) start = c;
    ModelId j = space.model_of_cell(start);
    std::vector<double> theta = space.cell_center(start);
    double lt = log_target(j, theta);

    const std::size_t burn = std::min<std::size_t>(steps / 10, 5000);
    std::vector<double> counts(space.total_cells(), 0.0);
    std::vector<double> model_counts(nmodels, 0.0);
    std::size_t accepted = 0;
    std::vector<double> cand;
    for (std::size_t it = 0; it < steps + burn; ++it) {
        // fixed move-type odds; a within move on a pinned model stays put
        const bool within = rng.uniform() < 0.5;
        double log_alpha;
        ModelId cj = j;
        if (within && !prop[j].has_free) {
            cand = theta;
        } else if (within) {
            cand = theta;
            for (std::size_t d = 0; d < cand.size(); ++d)
                if (prop[j].step[d] > 0.0) cand[d] += prop[j].step[d] * rng.normal();
            const double lc = log_target(j, cand);
            log_alpha = lc - lt;
            if (lc != kNegInf && std::log(rng.uniform()) < log_alpha) {
                theta = cand;
                lt = lc;
                ++accepted;
            }
        } else {
            cj = static_cast<ModelId>(rng.index(nmodels));
            draw_in_model(cj, cand);
            const double lc = log_target(cj, cand);
            log_alpha = lc + log_proposal_density(j, theta) - lt - log_proposal_density(cj, cand);
            if (lc != kNegInf && std::log(rng.uniform()) < log_alpha) {
                j = cj;
                theta = cand;
                lt = lc;
                ++accepted;
            }
        }
        if (it < burn) continue;
        model_counts[j] += 1.0;
        if (const auto local = space.model(j).box.locate(theta)) counts[space.offset(j) + *local] += 1.0;
    }

    MetropolisResult out;
    out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(steps + burn);
    if (out.acceptance_rate < 1e-3)
        throw ChainNotMoved("acceptance rate " + std::to_string(out.acceptance_rate) + " below 0.1%");
    const double total = static_cast<double>(steps);
    out.model_prob_mcmc.resize(nmodels);
    for (std::size_t m = 0; m < nmodels; ++m) out.model_prob_mcmc[m] = model_counts[m] / total;
    GridMeasure hist = normalize(GridMeasure(qp.space, std::move(counts)));
    out.tv_to_grid = tv_distance(hist, qp.pi);
    return out;
}

}  // namespace oblab
