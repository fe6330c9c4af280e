#include "riskdp/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace riskdp {

namespace {

// Neumaier-compensated accumulator; keeps long sums exact to a few ulp.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    double get() const { return sum + comp; }
};

}  // namespace

double SpectralMeasure::min_xi() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& a : atoms) m = std::min(m, a.xi);
    return m;
}

double SpectralMeasure::weight_sum() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.weight;
    return s;
}

void SpectralMeasure::validate(double weight_tol) const {
    if (atoms.empty()) throw ValidationError("spectral measure has no atoms");
    for (const auto& a : atoms) {
        if (!(a.xi > 0.0) || a.xi > 1.0)
            throw ValidationError("spectral measure atom level must lie in (0,1]");
        if (!(a.weight >= 0.0) || !std::isfinite(a.weight))
            throw ValidationError("spectral measure weight must be non-negative");
    }
    if (std::abs(weight_sum() - 1.0) > weight_tol)
        throw ValidationError("spectral measure weights must sum to 1");
}

void RiskSpec::validate(double weight_tol) const {
    if (measures.empty()) throw ValidationError("risk spec has no measures");
    double min_xi = std::numeric_limits<double>::infinity();
    for (const auto& m : measures) {
        m.validate(weight_tol);
        min_xi = std::min(min_xi, m.min_xi());
    }
    if (!(b > 0.0) || std::abs(b - min_xi) > 1e-12)
        throw ValidationError("risk spec b must equal the smallest atom level");
}

RiskSpec make_risk_spec(std::vector<SpectralMeasure> measures, double weight_tol) {
    RiskSpec spec;
    spec.measures = std::move(measures);
    if (spec.measures.empty()) throw ValidationError("risk spec has no measures");
    double min_xi = std::numeric_limits<double>::infinity();
    for (const auto& m : spec.measures) {
        m.validate(weight_tol);
        min_xi = std::min(min_xi, m.min_xi());
    }
    spec.b = min_xi;
    return spec;
}

double DiscreteDistribution::mean() const {
    KahanSum s;
    for (std::size_t i = 0; i < values.size(); ++i) s.add(values[i] * probs[i]);
    return s.get();
}

void DiscreteDistribution::validate(double prob_tol) const {
    if (values.size() != probs.size() || values.empty())
        throw ValidationError("distribution needs matching non-empty value/prob lists");
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw ValidationError("distribution value not finite");
        if (!(probs[i] >= 0.0)) throw ValidationError("distribution probability negative");
        total += probs[i];
    }
    if (std::abs(total - 1.0) > prob_tol)
        throw ValidationError("distribution probabilities must sum to 1");
}

double GCurve::value(double q) const {
    const auto& bp = breakpoints;
    if (bp.empty()) throw ValidationError("curve has no breakpoints");
    if (q <= bp.front()) return values.front();
    if (q >= bp.back()) {
        if (bp.size() == 1) return values.back();
        const std::size_t n = bp.size();
        const double slope =
            (values[n - 1] - values[n - 2]) / (bp[n - 1] - bp[n - 2]);
        if (slope >= 0.0) return values.back();
        const double ext = values.back() + slope * (q - bp.back());
        return ext > 0.0 ? ext : 0.0;
    }
    const auto it = std::upper_bound(bp.begin(), bp.end(), q);
    const std::size_t hi = static_cast<std::size_t>(it - bp.begin());
    const std::size_t lo = hi - 1;
    const double w = (q - bp[lo]) / (bp[hi] - bp[lo]);
    return values[lo] + w * (values[hi] - values[lo]);
}

void GCurve::validate(double tol) const {
    if (breakpoints.size() != values.size() || breakpoints.empty())
        throw ValidationError("curve needs matching non-empty breakpoint/value lists");
    for (double v : values)
        if (!(v >= -tol)) throw ValidationError("curve value negative");
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        const double dq = breakpoints[i] - breakpoints[i - 1];
        if (!(dq > 0.0)) throw ValidationError("curve breakpoints must strictly increase");
        const double dv = values[i] - values[i - 1];
        if (dv > tol) throw ValidationError("curve must be non-increasing");
        if (dv < -dq - tol) throw ValidationError("curve slope below -1");
    }
}

double avar(const DiscreteDistribution& dist, double xi) {
    if (!(xi > 0.0) || xi > 1.0) throw ValidationError("avar level must lie in (0,1]");
    dist.validate();
    const std::size_t n = dist.values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist.values[a] > dist.values[b];
    });
    KahanSum tail;
    double taken = 0.0;
    for (std::size_t idx : order) {
        const double room = xi - taken;
        if (room <= 0.0) break;
        const double w = std::min(dist.probs[idx], room);
        tail.add(w * dist.values[idx]);
        taken += w;
    }
    // taken can fall a few ulp short of xi when the probabilities do.
    return tail.get() / (taken > 0.0 ? std::max(taken, xi * (1.0 - 1e-12)) : xi);
}

double avar_qscan(const DiscreteDistribution& dist, double xi) {
    if (!(xi > 0.0) || xi > 1.0) throw ValidationError("avar level must lie in (0,1]");
    dist.validate();
    double best = std::numeric_limits<double>::infinity();
    for (double q : dist.values) {
        KahanSum excess;
        for (std::size_t i = 0; i < dist.values.size(); ++i)
            excess.add(dist.probs[i] * std::max(dist.values[i] - q, 0.0));
        best = std::min(best, q + excess.get() / xi);
    }
    return best;
}

double kusuoka_risk(const DiscreteDistribution& dist, const RiskSpec& spec) {
    spec.validate();
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& measure : spec.measures) {
        double mixed = 0.0;
        for (const auto& atom : measure.atoms)
            mixed += atom.weight * avar(dist, atom.xi);
        worst = std::max(worst, mixed);
    }
    return worst;
}

GCurve curve_from_distribution(const DiscreteDistribution& dist) {
    dist.validate();
    const std::size_t n = dist.values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dist.values[a] < dist.values[b];
    });

    // Distinct ascending atom values with merged probabilities.
    std::vector<double> vals, mass;
    for (std::size_t idx : order) {
        if (!vals.empty() && dist.values[idx] == vals.back())
            mass.back() += dist.probs[idx];
        else {
            vals.push_back(dist.values[idx]);
            mass.push_back(dist.probs[idx]);
        }
    }

    GCurve curve;
    const std::size_t m = vals.size();
    // g at breakpoint v_i: sum over strictly larger atoms of p (z - v_i),
    // built from suffix sums so each value is one compensated pass.
    std::vector<double> g(m);
    KahanSum tail_mass;   // sum of p z over atoms above the current point
    KahanSum tail_prob;   // sum of p over atoms above the current point
    g[m - 1] = 0.0;
    for (std::size_t i = m - 1; i-- > 0;) {
        tail_mass.add(mass[i + 1] * vals[i + 1]);
        tail_prob.add(mass[i + 1]);
        g[i] = tail_mass.get() - vals[i] * tail_prob.get();
    }
    if (vals.front() > 0.0) {
        // Prepend q = 0 so the curve is exact on [0, max atom] even when all
        // atoms are positive (slope -1 down to the first atom).
        tail_mass.add(mass[0] * vals[0]);
        tail_prob.add(mass[0]);
        curve.breakpoints.push_back(0.0);
        curve.values.push_back(tail_mass.get());
    }
    curve.breakpoints.insert(curve.breakpoints.end(), vals.begin(), vals.end());
    curve.values.insert(curve.values.end(), g.begin(), g.end());
    return curve;
}

double risk_from_gcurve(const GCurve& curve, const RiskSpec& spec,
                        double q_lo, double q_hi) {
    if (!(q_lo < q_hi)) throw ValidationError("risk_from_gcurve needs q_lo < q_hi");
    curve.validate();
    spec.validate();

    std::vector<double> candidates;
    candidates.push_back(q_lo);
    candidates.push_back(q_hi);
    for (double q : curve.breakpoints)
        if (q > q_lo && q < q_hi) candidates.push_back(q);
    // Kink where the right extension reaches zero.
    if (curve.breakpoints.size() >= 2 && curve.values.back() > 0.0) {
        const std::size_t n = curve.breakpoints.size();
        const double slope = (curve.values[n - 1] - curve.values[n - 2]) /
                             (curve.breakpoints[n - 1] - curve.breakpoints[n - 2]);
        if (slope < 0.0) {
            const double q0 = curve.breakpoints.back() - curve.values.back() / slope;
            if (q0 > q_lo && q0 < q_hi) candidates.push_back(q0);
        }
    }

    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& measure : spec.measures) {
        double mixed = 0.0;
        for (const auto& atom : measure.atoms) {
            double inner = std::numeric_limits<double>::infinity();
            for (double q : candidates)
                inner = std::min(inner, q + curve.value(q) / atom.xi);
            mixed += atom.weight * inner;
        }
        worst = std::max(worst, mixed);
    }
    return worst;
}

}  // namespace riskdp
