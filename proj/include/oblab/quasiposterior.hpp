#pragma once

// Quasi-posterior pi ∝ exp(-lambda R_n) kappa and its limiting companion
// phi ∝ exp(-lambda R) kappa on a gridded model space.

#include <cstdint>
#include <string>
#include <vector>

#include "oblab/measure.hpp"
#include "oblab/risks.hpp"

namespace oblab {

struct QuasiPosterior {
    double lambda = 0.0;
    SpacePtr space;
    std::string risk_tag;
    std::vector<double> empirical_risk;    // R_n per cell, penalty included
    std::vector<double> theoretical_risk;  // R per cell, penalty included
    std::vector<double> prior_log;         // ln kappa per cell
    std::vector<double> log_pi;            // normalized ln pi per cell
    std::vector<double> log_phi;           // normalized ln phi per cell
    GridMeasure prior;
    GridMeasure pi;
    GridMeasure phi;
};

QuasiPosterior build(SpacePtr space, const RiskPair& pair, double lambda, const Dataset& data);

/// Same as build() from risks already evaluated on the grid.
QuasiPosterior build_from_risks(SpacePtr space, RiskGrid risks, double lambda, std::string risk_tag);

double model_probability(const QuasiPosterior& qp, const ModelSet& ids);

/// pi(M0^c), summed directly rather than as 1 - pi(M0).
double misselection_probability(const QuasiPosterior& qp);

/// Argmax of model masses, ties to the lowest id.
ModelId map_model(const QuasiPosterior& qp);

/// pi conditioned on a model set, formed from the log weights so that it
/// stays defined when pi(ids) underflows.
GridMeasure conditional(const QuasiPosterior& qp, const ModelSet& ids);
GridMeasure oracle_posterior(const QuasiPosterior& qp);
/// MAP over selectable units: a true set with several models counts as one
/// mixture model, every other model stands alone. Ties go to the unit with
/// the lowest id. Equals {map_model(qp)} when the true set is a single model.
ModelSet map_selection(const QuasiPosterior& qp);

/// pi conditioned on map_selection(qp).
GridMeasure selection_posterior(const QuasiPosterior& qp);

struct MeanDecomposition {
    std::vector<double> lhs;                         // E(theta) - E(theta|M0)
    std::vector<double> rhs_total;                   // sum of per-model terms
    std::vector<std::vector<double>> rhs_per_model;  // indexed by model id; zero for true ids
    std::vector<double> two_term;                    // pi(M0^c) (E(theta|M0^c) - E(theta|M0))
    double residual = 0.0;                           // max |lhs - rhs_total|, |lhs - two_term|
};

MeanDecomposition mean_decomposition(const QuasiPosterior& qp);

struct MetropolisResult {
    std::vector<double> model_prob_mcmc;
    double tv_to_grid = 0.0;
    double acceptance_rate = 0.0;
};

/// Random-walk Metropolis over (j, theta) targeting exp(-lambda R_n) kappa,
/// with the within-model prior taken piecewise constant on the grid cells.
MetropolisResult metropolis_check(const QuasiPosterior& qp, const RiskPair& pair, const Dataset& data,
                                  std::size_t steps, std::uint64_t seed);

}  // namespace oblab
