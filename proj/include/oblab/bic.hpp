#pragma once

// Exact -lambda^{-1} log-marginals by grid quadrature against the BIC-type
// approximation C_n(theta_hat_j) + ln(lambda)/(2 lambda) d_j.

#include <string>
#include <vector>

#include "oblab/quasiposterior.hpp"

namespace oblab {

/// -lambda^{-1} ln sum_{cells of j} nu(c|j) exp(-lambda C_n(c)); the model
/// weight kappa_j is not included. C_n is the unpenalized empirical risk.
double exact_log_marginal(const ModelSpace& space, const RiskPair& pair, double lambda, const Dataset& data,
                          ModelId j);

/// C_n at the grid argmin over Theta_j (ties to the lowest cell) plus the
/// ln(lambda)/(2 lambda) d_j dimension term.
double bic_approx(const ModelSpace& space, const RiskPair& pair, double lambda, const Dataset& data, ModelId j);

struct BicModelEntry {
    ModelId id = 0;
    double exact = 0.0;
    double approx = 0.0;
    double error = 0.0;  // exact - approx
    int d = 0;
    std::vector<double> theta_hat;
};

struct BicReport {
    bool applicable = true;
    std::vector<BicModelEntry> models;
    std::vector<double> log_ratio;  // ln(pi(M_j) / pi(M0)) from the exact marginals
    std::vector<std::string> warnings;
};

BicReport bic_report(const ModelSpace& space, const RiskPair& pair, double lambda, const Dataset& data);

/// OLS slope of ln|exact - approx| on ln(lambda) for model j.
double bic_rate_check(const ModelSpace& space, const RiskPair& pair, const Dataset& data,
                      const std::vector<double>& lambda_grid, ModelId j);

enum class RatioRegime { WrongExponential, TruePolynomial, Reference };
std::string to_string(RatioRegime r);

struct ModelRatio {
    ModelId id = 0;
    double log_ratio = 0.0;
    RatioRegime regime = RatioRegime::Reference;
};

struct RatioDiagnostics {
    std::vector<ModelRatio> models;
    std::vector<std::string> warnings;
};

/// Classifies each model by its theoretical infimum against the global one
/// and reports ln(pi(M_j)/pi(M0)) from the built quasi-posterior.
RatioDiagnostics model_ratio_diagnostics(const QuasiPosterior& qp, const RiskPair& pair);

/// OLS slope of the log ratio of model j against ln(lambda) across a sweep.
double ratio_slope(SpacePtr space, const RiskPair& pair, const Dataset& data,
                   const std::vector<double>& lambda_grid, ModelId j);

}  // namespace oblab
