#include "riskdp/simplex_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskdp/errors.hpp"
#include "riskdp/rng.hpp"

namespace riskdp {

void SimplexSearch::validate() const {
    if (!(grid_step > 0.0) || grid_step > 1.0)
        throw ValidationError("simplex search grid_step must lie in (0,1]");
    if (n_random < 0 || refine_rounds < 0)
        throw ValidationError("simplex search counts must be >= 0");
    if (!(refine_radius > 0.0) || refine_radius > 1.0)
        throw ValidationError("simplex search refine_radius must lie in (0,1]");
}

std::vector<std::vector<double>> simplex_lattice(int dim, double step) {
    if (dim < 1) throw ValidationError("simplex_lattice: dim must be >= 1");
    if (!(step > 0.0) || step > 1.0)
        throw ValidationError("simplex_lattice: step must lie in (0,1]");
    const long long resolution = std::max(1ll, std::llround(1.0 / step));

    // Compositions of `resolution` into dim non-negative parts, ascending
    // lexicographic order.
    std::vector<std::vector<double>> points;
    std::vector<long long> counts(static_cast<std::size_t>(dim), 0);
    std::function<void(int, long long)> emit = [&](int level, long long remaining) {
        if (level == dim - 1) {
            counts[level] = remaining;
            std::vector<double> lambda(static_cast<std::size_t>(dim));
            for (int k = 0; k < dim; ++k)
                lambda[k] = static_cast<double>(counts[k]) / resolution;
            points.push_back(std::move(lambda));
            return;
        }
        for (long long c = 0; c <= remaining; ++c) {
            counts[level] = c;
            emit(level + 1, remaining - c);
        }
    };
    emit(0, resolution);
    return points;
}

namespace {

bool lex_less(std::span<const double> a, std::span<const double> b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

SimplexMinResult simplex_minimize(
    int dim, const SimplexSearch& search,
    const std::function<double(std::span<const double>)>& eval) {
    search.validate();
    if (dim < 1) throw ValidationError("simplex_minimize: dim must be >= 1");

    SimplexMinResult best;
    best.value = std::numeric_limits<double>::infinity();

    auto consider = [&](const std::vector<double>& lambda) {
        const double v = eval(lambda);
        ++best.evaluations;
        if (v < best.value ||
            (v == best.value &&
             (best.argmin.empty() || lex_less(lambda, best.argmin)))) {
            best.value = v;
            best.argmin = lambda;
        }
    };

    for (const auto& lambda : simplex_lattice(dim, search.grid_step)) consider(lambda);

    Rng rng(search.seed);
    std::vector<double> draw(static_cast<std::size_t>(dim));
    for (int r = 0; r < search.n_random; ++r) {
        rng.dirichlet(std::span<double>(draw));
        consider(draw);
    }

    double radius = search.refine_radius;
    for (int round = 0; round < search.refine_rounds; ++round) {
        const std::vector<double> center = best.argmin;
        std::vector<double> candidate(static_cast<std::size_t>(dim));
        for (int r = 0; r < search.n_random; ++r) {
            rng.dirichlet(std::span<double>(draw));
            for (int k = 0; k < dim; ++k)
                candidate[k] = (1.0 - radius) * center[k] + radius * draw[k];
            consider(candidate);
        }
        radius *= 0.25;
    }
    return best;
}

void CurveBundle::build_slopes() {
    slope.assign(g.size(), {});
    for (std::size_t k = 0; k < g.size(); ++k) {
        slope[k].resize(q.size() > 0 ? q.size() - 1 : 0);
        for (std::size_t s = 0; s + 1 < q.size(); ++s)
            slope[k][s] = (g[k][s + 1] - g[k][s]) / (q[s + 1] - q[s]);
    }
}

double CurveBundle::inner_min(std::span<const double> lambda, double xi) const {
    const std::size_t m = q.size();
    auto mixed_g = [&](std::size_t idx) {
        double v = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            if (lambda[k] != 0.0) v += lambda[k] * g[k][idx];
        return v;
    };
    if (m == 1) return q[0] + mixed_g(0) / xi;

    if (convex && m > 64) {
        // Objective q + xi^-1 g(q) is convex piecewise linear; its minimizer
        // is the first breakpoint where the mixed slope reaches -xi.
        auto mixed_slope = [&](std::size_t seg) {
            double s = 0.0;
            for (std::size_t k = 0; k < slope.size(); ++k)
                if (lambda[k] != 0.0) s += lambda[k] * slope[k][seg];
            return s;
        };
        std::size_t lo = 0, hi = m - 1;  // invariant: answer in [lo, hi]
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;  // segment [mid, mid+1]
            if (mixed_slope(mid) >= -xi)
                hi = mid;
            else
                lo = mid + 1;
        }
        return q[lo] + mixed_g(lo) / xi;
    }

    double out = std::numeric_limits<double>::infinity();
    for (std::size_t idx = 0; idx < m; ++idx)
        out = std::min(out, q[idx] + mixed_g(idx) / xi);
    return out;
}

double CurveBundle::policy_risk(std::span<const double> lambda,
                                const RiskSpec& spec) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& measure : spec.measures) {
        double mixed = 0.0;
        for (const auto& atom : measure.atoms)
            mixed += atom.weight * inner_min(lambda, atom.xi);
        worst = std::max(worst, mixed);
    }
    return worst;
}

CurveBundle bundle_from_curves(const std::vector<GCurve>& per_action,
                               double q_lo, double q_hi) {
    if (per_action.empty()) throw ValidationError("bundle needs at least one curve");
    if (!(q_lo < q_hi)) throw ValidationError("bundle needs q_lo < q_hi");

    std::vector<double> merged;
    merged.push_back(q_lo);
    merged.push_back(q_hi);
    for (const auto& curve : per_action)
        for (double bp : curve.breakpoints)
            if (bp > q_lo && bp < q_hi) merged.push_back(bp);
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    CurveBundle bundle;
    bundle.q = std::move(merged);
    bundle.g.resize(per_action.size());
    for (std::size_t k = 0; k < per_action.size(); ++k) {
        bundle.g[k].resize(bundle.q.size());
        for (std::size_t idx = 0; idx < bundle.q.size(); ++idx)
            bundle.g[k][idx] = per_action[k].value(bundle.q[idx]);
    }
    bundle.build_slopes();
    return bundle;
}

}  // namespace riskdp
