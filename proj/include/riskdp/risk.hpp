#pragma once
// Risk kernel: average value at risk (AVaR) and Kusuoka-style mixtures of
// AVaR levels on finite discrete distributions, plus the partial-expectation
// curve q -> E[(Z - q)_+] that the rest of the toolkit optimizes over.

#include <string>
#include <vector>

#include "riskdp/errors.hpp"

namespace riskdp {

/// One spectral atom: AVaR level xi in (0, 1] with a mixture weight.
struct RiskAtom {
    double xi = 1.0;
    double weight = 1.0;
};

/// A discrete mixing measure over AVaR levels.
struct SpectralMeasure {
    std::vector<RiskAtom> atoms;

    double min_xi() const;
    double weight_sum() const;
    void validate(double weight_tol = 1e-9) const;
};

/// The finite family of mixing measures defining the risk mapping. `b` is
/// the smallest AVaR level appearing anywhere; every atom sits above it.
struct RiskSpec {
    std::vector<SpectralMeasure> measures;
    double b = 0.0;

    void validate(double weight_tol = 1e-9) const;
};

/// Builds a RiskSpec, computing b and validating the measures.
RiskSpec make_risk_spec(std::vector<SpectralMeasure> measures,
                        double weight_tol = 1e-9);

/// Finite discrete distribution: parallel (value, probability) atoms.
struct DiscreteDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    double mean() const;
    void validate(double prob_tol = 1e-12) const;
};

/// Piecewise-linear partial-expectation curve. Evaluation is linear between
/// breakpoints, constant to the left of the first one, and to the right of
/// the last one the final slope continues until the curve reaches zero
/// (constant afterwards), which preserves convexity.
struct GCurve {
    std::vector<double> breakpoints;
    std::vector<double> values;

    double value(double q) const;
    void validate(double tol = 1e-9) const;
};

/// AVaR_xi of a discrete distribution by the sorted-tail rule: the mean of
/// the worst xi-fraction of outcomes, with the boundary atom counted
/// fractionally. Exact on discrete laws.
double avar(const DiscreteDistribution& dist, double xi);

/// AVaR_xi as inf_q { q + xi^-1 E[(Z-q)_+] }, scanned over the atom values
/// where the minimum is attained. Independent cross-check of `avar`.
double avar_qscan(const DiscreteDistribution& dist, double xi);

/// max over measures of the weighted AVaR mixture, with the q-infimum taken
/// per atom.
double kusuoka_risk(const DiscreteDistribution& dist, const RiskSpec& spec);

/// Exact curve q -> sum_z p(z) * (z - q)_+ of a discrete distribution.
/// Breakpoints are the distinct atom values plus 0 when all atoms are
/// positive, so evaluation is exact on all q >= 0.
GCurve curve_from_distribution(const DiscreteDistribution& dist);

/// max over measures of sum_atoms weight * min_{q in [q_lo, q_hi]}
/// { q + xi^-1 g(q) }. The inner minimum of the piecewise-linear objective
/// is found exactly by scanning breakpoints and interval endpoints.
double risk_from_gcurve(const GCurve& curve, const RiskSpec& spec,
                        double q_lo, double q_hi);

}  // namespace riskdp
