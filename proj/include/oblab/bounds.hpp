#pragma once

// Mis-selection bound quantities (gap, r, u) and the inequality chain that
// links the quasi-posterior to its limiting version. All infima are grid
// infima over the cells of the model space.

#include <span>
#include <vector>

#include "oblab/quasiposterior.hpp"

namespace oblab {

inline constexpr double kBoundTol = 1e-9;

/// min R over non-true cells minus min R over all cells (+inf without
/// non-true models). theoretical is per cell, penalty included.
double gap(std::span<const double> theoretical, const ModelSpace& space);
double gap(const RiskPair& pair, const ModelSpace& space);

/// -lambda^{-1} ln sum_c kappa_c exp(-lambda (R_c - inf R)); always >= 0.
double r_term(std::span<const double> theoretical, std::span<const double> prior_log, double lambda);
double r_term(const QuasiPosterior& qp);

/// min over a of a + lambda^{-1} ln(1 / kappa(R - inf R < a)).
double r_upper(std::span<const double> theoretical, std::span<const double> prior_log, double lambda,
               std::span<const double> a_grid);
double r_upper(const QuasiPosterior& qp, std::span<const double> a_grid);

/// d ln(lambda)/lambda * 2^k, k = -2..4, with d the largest model dimension
/// (at least 1) and ln(lambda) floored at 1.
std::vector<double> default_a_grid(const ModelSpace& space, double lambda);

/// -(2 lambda)^{-1} ln sum_c phi_c exp(-2 lambda [(R_n - R)_c - phi(R_n - R)]); always <= 0.
double u_term(const QuasiPosterior& qp);

struct BoundReport {
    double gamma = 0.0;
    double r = 0.0;
    double u = 0.0;
    double u_uniform = 0.0;        // 2 sup |R_n - R|
    double r_upper = 0.0;
    double lhs_log_misselect = 0;  // ln pi(M0^c), -inf when empty or zero
    double rhs_bound = 0.0;        // -0.5 lambda (gamma - r - 2|u|)
    bool bound_active = false;     // gamma > r + 2|u|
    bool inequality_holds = true;
    bool u_uniform_holds = true;
    bool r_upper_holds = true;
    double gibbslim_margin = 0.0;  // min over checked h of rhs - lhs
    bool riskbd_checked = false;
    double grid_step = 0.0;        // largest interval-axis step, reported with gamma
};

BoundReport prop3_check(const QuasiPosterior& qp);

struct InequalityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool vacuous = false;
    bool holds = true;
};

/// lhs = pi(R >= inf R + gamma_q); rhs = exp(-0.5 lambda (gamma_q - r - 2|u|)).
InequalityCheck riskbd_check(const QuasiPosterior& qp, double gamma_q);

/// ln pi(h) <= 0.5 ln phi(h^2) - lambda u, h >= 0 per cell.
InequalityCheck gibbslim_check(const QuasiPosterior& qp, std::span<const double> h);

/// Event form for A = model j: ln pi(A) <= 0.5 ln phi(A) - lambda u.
std::vector<InequalityCheck> gibbslim_event_checks(const QuasiPosterior& qp);

/// pi(M0^c) <= pi(R >= inf R + gamma).
InequalityCheck msrisk_check(const QuasiPosterior& qp);

}  // namespace oblab
