#include "oblab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oblab/errors.hpp"
#include "oblab/numerics.hpp"

namespace oblab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double grid_min(std::span<const double> xs) {
    double m = kInf;
    for (double x : xs) m = std::min(m, x);
    return m;
}

// ln of the pi-mass (given normalized log weights) of cells selected by keep.
template <class Pred>
double log_mass_where(std::span<const double> log_w, Pred keep) {
    std::vector<double> sel;
    sel.reserve(log_w.size());
    for (std::size_t c = 0; c < log_w.size(); ++c)
        if (keep(c)) sel.push_back(log_w[c]);
    return log_sum_exp(sel);
}

double max_step(const ModelSpace& space) {
    double h = 0.0;
    for (const auto& m : space.models())
        for (const auto& a : m.box.axes())
            if (!a.pinned) h = std::max(h, a.step());
    return h;
}

}  // namespace

double gap(std::span<const double> theoretical, const ModelSpace& space) {
    const double inf_all = grid_min(theoretical);
    double inf_wrong = kInf;
    for (std::size_t c = 0; c < theoretical.size(); ++c)
        if (!space.is_true(space.model_of_cell(c))) inf_wrong = std::min(inf_wrong, theoretical[c]);
    if (inf_wrong == kInf) return kInf;
    return inf_wrong - inf_all;
}

double gap(const RiskPair& pair, const ModelSpace& space) { return gap(theoretical_on_grid(pair, space), space); }

double r_term(std::span<const double> theoretical, std::span<const double> prior_log, double lambda) {
    const double inf_r = grid_min(theoretical);
    std::vector<double> terms(theoretical.size());
    for (std::size_t c = 0; c < terms.size(); ++c)
        terms[c] = prior_log[c] == kNegInf ? kNegInf : prior_log[c] - lambda * (theoretical[c] - inf_r);
    const double l = log_sum_exp(terms);
    if (!std::isfinite(l)) throw ZeroMass("prior carries no mass in the r integral");
    // The integrand is <= 1 and the prior is normalized, so l <= 0 up to rounding.
    return std::max(0.0, -l / lambda);
}

double r_term(const QuasiPosterior& qp) { return r_term(qp.theoretical_risk, qp.prior_log, qp.lambda); }

double r_upper(std::span<const double> theoretical, std::span<const double> prior_log, double lambda,
               std::span<const double> a_grid) {
    if (a_grid.empty()) throw InvalidArgument("a_grid must be nonempty");
    const double inf_r = grid_min(theoretical);
    double best = kInf;
    for (double a : a_grid) {
        if (!(a > 0.0)) throw InvalidArgument("a_grid entries must be positive");
        const double lmass =
            log_mass_where(prior_log, [&](std::size_t c) { return theoretical[c] - inf_r < a; });
        if (lmass == kNegInf) continue;
        best = std::min(best, a - lmass / lambda);
    }
    if (best == kInf) throw AllMassExcluded("kappa(R - inf R < a) = 0 for every a in a_grid");
    return best;
}

double r_upper(const QuasiPosterior& qp, std::span<const double> a_grid) {
    return r_upper(qp.theoretical_risk, qp.prior_log, qp.lambda, a_grid);
}

std::vector<double> default_a_grid(const ModelSpace& space, double lambda) {
    const double d = static_cast<double>(std::max<std::size_t>(1, space.max_free_dimension()));
    const double base = d * std::max(1.0, std::log(lambda)) / lambda;
    std::vector<double> out;
    for (int k = -2; k <= 4; ++k) out.push_back(base * std::ldexp(1.0, k));
    return out;
}

double u_term(const QuasiPosterior& qp) {
    const std::size_t n = qp.log_phi.size();
    std::vector<double> delta(n);
    CompensatedSum centre;
    for (std::size_t c = 0; c < n; ++c) {
        delta[c] = qp.empirical_risk[c] - qp.theoretical_risk[c];
        centre.add(qp.phi.weight(c) * delta[c]);
    }
    const double mu = centre.value();
    std::vector<double> terms(n);
    for (std::size_t c = 0; c < n; ++c)
        terms[c] = qp.log_phi[c] == kNegInf ? kNegInf : qp.log_phi[c] - 2.0 * qp.lambda * (delta[c] - mu);
    const double l = log_sum_exp(terms) - log_sum_exp(qp.log_phi);
    if (!std::isfinite(l)) throw ZeroMass("limiting posterior carries no mass in the u integral");
    // Jensen: the centred exponential integral is >= 1.
    return -std::max(0.0, l) / (2.0 * qp.lambda);
}

InequalityCheck gibbslim_check(const QuasiPosterior& qp, std::span<const double> h) {
    const std::size_t n = qp.log_pi.size();
    if (h.size() != n) throw SupportMismatch("cell function size does not match the grid");
    std::vector<double> a(n), b(n);
    for (std::size_t c = 0; c < n; ++c) {
        if (!(h[c] >= 0.0) || !std::isfinite(h[c])) throw InvalidArgument("h must be finite and nonnegative");
        const double lh = h[c] > 0.0 ? std::log(h[c]) : kNegInf;
        a[c] = lh == kNegInf ? kNegInf : qp.log_pi[c] + lh;
        b[c] = lh == kNegInf ? kNegInf : qp.log_phi[c] + 2.0 * lh;
    }
    InequalityCheck out;
    out.lhs = log_sum_exp(a) - log_sum_exp(qp.log_pi);
    if (out.lhs == kNegInf) throw ZeroMass("pi(h) = 0");
    out.rhs = 0.5 * (log_sum_exp(b) - log_sum_exp(qp.log_phi)) - qp.lambda * u_term(qp);
    out.holds = out.lhs <= out.rhs + kBoundTol;
    return out;
}

std::vector<InequalityCheck> gibbslim_event_checks(const QuasiPosterior& qp) {
    const ModelSpace& space = *qp.space;
    const double u = u_term(qp);
    const double lz_pi = log_sum_exp(qp.log_pi), lz_phi = log_sum_exp(qp.log_phi);
    std::vector<InequalityCheck> out;
    for (const auto& m : space.models()) {
        auto in_model = [&](std::size_t c) { return space.model_of_cell(c) == m.id; };
        InequalityCheck chk;
        chk.lhs = log_mass_where(qp.log_pi, in_model) - lz_pi;
        chk.rhs = 0.5 * (log_mass_where(qp.log_phi, in_model) - lz_phi) - qp.lambda * u;
        chk.vacuous = chk.lhs == kNegInf;
        chk.holds = chk.vacuous || chk.lhs <= chk.rhs + kBoundTol;
        out.push_back(chk);
    }
    return out;
}

InequalityCheck riskbd_check(const QuasiPosterior& qp, double gamma_q) {
    if (!(gamma_q > 0.0)) throw InvalidArgument("gamma_q must be positive");
    const auto& rr = qp.theoretical_risk;
    const double inf_r = grid_min(rr);
    const double llhs = log_mass_where(qp.log_pi, [&](std::size_t c) { return rr[c] - inf_r >= gamma_q; });
    const double lrhs = -0.5 * qp.lambda * (gamma_q - r_term(qp) - 2.0 * std::abs(u_term(qp)));
    InequalityCheck out;
    out.lhs = std::exp(llhs);
    out.rhs = std::exp(lrhs);
    out.vacuous = lrhs >= 0.0;
    out.holds = out.vacuous || llhs <= lrhs + kBoundTol;
    return out;
}

InequalityCheck msrisk_check(const QuasiPosterior& qp) {
    const ModelSpace& space = *qp.space;
    const auto& rr = qp.theoretical_risk;
    const double g = gap(rr, space);
    const double inf_r = grid_min(rr);
    InequalityCheck out;
    const double llhs =
        log_mass_where(qp.log_pi, [&](std::size_t c) { return !space.is_true(space.model_of_cell(c)); });
    const double lrhs = g == kInf ? kNegInf
                                  : log_mass_where(qp.log_pi, [&](std::size_t c) { return rr[c] - inf_r >= g; });
    out.lhs = std::exp(llhs);
    out.rhs = std::exp(lrhs);
    out.holds = out.lhs <= out.rhs + 1e-12;
    return out;
}

BoundReport prop3_check(const QuasiPosterior& qp) {
    const ModelSpace& space = *qp.space;
    BoundReport b;
    b.gamma = gap(qp.theoretical_risk, space);
    b.r = r_term(qp);
    b.u = u_term(qp);
    double sup_gap = 0.0;
    for (std::size_t c = 0; c < qp.empirical_risk.size(); ++c)
        sup_gap = std::max(sup_gap, std::abs(qp.empirical_risk[c] - qp.theoretical_risk[c]));
    b.u_uniform = 2.0 * sup_gap;
    b.u_uniform_holds = std::abs(b.u) <= b.u_uniform + kBoundTol;
    const auto a_grid = default_a_grid(space, qp.lambda);
    b.r_upper = r_upper(qp, a_grid);
    b.r_upper_holds = b.r <= b.r_upper + kBoundTol;
    b.grid_step = max_step(space);

    b.lhs_log_misselect =
        log_mass_where(qp.log_pi, [&](std::size_t c) { return !space.is_true(space.model_of_cell(c)); });
    const double slack = b.gamma - b.r - 2.0 * std::abs(b.u);
    b.rhs_bound = b.gamma == kInf ? kNegInf : -0.5 * qp.lambda * slack;
    b.bound_active = slack > 0.0;
    b.inequality_holds = b.lhs_log_misselect == kNegInf ||
                         b.lhs_log_misselect <= b.rhs_bound + kBoundTol;

    double margin = kInf;
    std::vector<double> ones(qp.log_pi.size(), 1.0);
    const auto one = gibbslim_check(qp, ones);
    margin = std::min(margin, one.rhs - one.lhs);
    for (const auto& e : gibbslim_event_checks(qp))
        if (!e.vacuous) margin = std::min(margin, e.rhs - e.lhs);
    b.gibbslim_margin = margin;

    if (b.gamma > 0.0 && b.gamma != kInf) {
        const auto rb = riskbd_check(qp, b.gamma);
        b.riskbd_checked = rb.holds;
    } else {
        b.riskbd_checked = true;
    }
    return b;
}

}  // namespace oblab
