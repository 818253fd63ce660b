#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ssb/errors.hpp"
#include "ssb/series.hpp"

namespace ssb {

// Parameters of the cubic-drift return dynamics
//
//     dr/dt = rho - (lambda - lambda_c) r - (lambda_c / r_c^2) r^3 + noise.
//
// lambda  : speed of adjustment per period (the control parameter)
// lambda_c: critical speed of adjustment per period (benchmark-derived)
// r_c     : cutoff return scale
// rho     : weak-field constant drift offset (any real, usually ~0)
//
// In coefficient form the drift is rho - l1*r - l3*r^3 with l1 = lambda -
// lambda_c and l3 = lambda_c / r_c^2; l3 > 0 always, while l1 > 0 only in the
// short-living (no-arbitrage) phase.
struct SsbParams {
    double lambda = 1.0;
    double lambda_c = 1.0;
    double r_c = 1.0;
    double rho = 0.0;

    double l1() const { return lambda - lambda_c; }
    double l3() const { return lambda_c / (r_c * r_c); }
};

inline void validate(const SsbParams& p) {
    if (!(p.lambda > 0.0) || !std::isfinite(p.lambda))
        throw DomainError("lambda must be positive and finite");
    if (!(p.lambda_c > 0.0) || !std::isfinite(p.lambda_c))
        throw DomainError("lambda_c must be positive and finite");
    if (!(p.r_c > 0.0) || !std::isfinite(p.r_c))
        throw DomainError("r_c must be positive and finite");
    if (!std::isfinite(p.rho))
        throw DomainError("rho must be finite");
}

// Two regimes of the dynamics. Equilibria at +-r_v exist only below the
// critical speed; at or above it the origin is the sole equilibrium, so
// lambda == lambda_c belongs to the short-living branch.
enum class PhaseLabel { LongLivingArbitrage, ShortLivingArbitrage };

inline const char* to_string(PhaseLabel p) {
    return p == PhaseLabel::LongLivingArbitrage ? "LongLivingArbitrage" : "ShortLivingArbitrage";
}

inline PhaseLabel classify_phase(const SsbParams& p) {
    validate(p);
    return p.lambda < p.lambda_c ? PhaseLabel::LongLivingArbitrage
                                 : PhaseLabel::ShortLivingArbitrage;
}

// Magnitude of the nonzero equilibria r_v = sqrt(1 - lambda/lambda_c) * r_c;
// absent at or above the critical speed.
inline std::optional<double> spontaneous_return(const SsbParams& p) {
    validate(p);
    if (p.lambda >= p.lambda_c) return std::nullopt;
    return std::sqrt(1.0 - p.lambda / p.lambda_c) * p.r_c;
}

// Deterministic right-hand side rho - l1*r - l3*r^3.
inline double drift(const SsbParams& p, double r) {
    validate(p);
    if (!std::isfinite(r)) throw DomainError("drift: r must be finite");
    return p.rho - p.l1() * r - p.l3() * r * r * r;
}

namespace detail {

// Bisection on the cubic rho - l1*r - l3*r^3 between a sign change.
inline double bisect_root(const SsbParams& p, double lo, double hi) {
    double flo = p.rho - p.l1() * lo - p.l3() * lo * lo * lo;
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        double fmid = p.rho - p.l1() * mid - p.l3() * mid * mid * mid;
        if (fmid == 0.0 || hi - lo < 1e-15 * std::max(1.0, std::abs(mid))) return mid;
        if ((flo < 0.0) == (fmid < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// All real equilibria of the drift, ascending. With rho == 0 these are the
// closed forms {0} or {-r_v, 0, +r_v}; otherwise the cubic is scanned for
// sign changes on a fine grid over [-10 r_c, 10 r_c] and each bracket is
// bisected to ~1e-12. All roots lie in that range: |r| > 10 r_c would need
// |rho| > 990 * lambda_c * r_c, far outside the model's small-return regime
// (and the scan range grows with rho to keep the guarantee).
inline std::vector<double> fixed_points(const SsbParams& p) {
    validate(p);
    if (p.rho == 0.0) {
        auto rv = spontaneous_return(p);
        if (!rv) return {0.0};
        return {-*rv, 0.0, *rv};
    }
    double range = 10.0 * p.r_c;
    // Ensure the cubic term dominates at the scan edges so no root escapes.
    while (p.l3() * range * range * range < 2.0 * (std::abs(p.rho) + std::abs(p.l1()) * range))
        range *= 2.0;
    const int n_cells = 200000; // resolution r_c/1e4 at the default range
    std::vector<double> roots;
    double prev_x = -range;
    double prev_f = p.rho - p.l1() * prev_x - p.l3() * prev_x * prev_x * prev_x;
    for (int i = 1; i <= n_cells; ++i) {
        double x = -range + 2.0 * range * i / n_cells;
        double f = p.rho - p.l1() * x - p.l3() * x * x * x;
        if (f == 0.0) {
            roots.push_back(x);
        } else if ((prev_f < 0.0) != (f < 0.0)) {
            roots.push_back(detail::bisect_root(p, prev_x, x));
        }
        prev_x = x;
        prev_f = f;
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// Deterministic closed-form solution of dr/dt = -l1 r - l3 r^3 (rho must be
// 0). Numerically stable equivalents of the textbook form are used so the
// result is finite for every finite r0 and every elapsed >= 0:
//
//   l1 > 0:  r^2 = r0^2 e^{-2 l1 t} / (1 + (l3/l1) r0^2 (1 - e^{-2 l1 t}))
//   l1 = 0:  r^2 = r0^2 / (1 + 2 l3 r0^2 t)
//   l1 < 0:  r^2 = r0^2 / ((1 - r0^2/r_v^2) e^{2 l1 t} + r0^2/r_v^2),
//            r_v^2 = -l1/l3
//
// with r(t) = sign(r0) sqrt(r^2). Each denominator is positive for all
// t >= 0, including starts outside the equilibrium (|r0| > r_v). Backward
// evaluation (elapsed < 0) is rejected: there the solution genuinely blows
// up in finite time.
inline double exact_solution(const SsbParams& p, double r_initial, double elapsed) {
    validate(p);
    if (p.rho != 0.0)
        throw DomainError("exact_solution requires rho == 0");
    if (!std::isfinite(r_initial))
        throw DomainError("exact_solution: r_initial must be finite");
    if (!(elapsed >= 0.0))
        throw DomainError("exact_solution: elapsed must be >= 0");
    if (r_initial == 0.0) return 0.0;

    const double l1 = p.l1();
    const double l3 = p.l3();
    const double r0sq = r_initial * r_initial;
    double rsq;
    if (l1 > 0.0) {
        double decay = std::exp(-2.0 * l1 * elapsed);
        double den = 1.0 + (l3 / l1) * r0sq * (1.0 - decay);
        rsq = r0sq * decay / den;
    } else if (l1 == 0.0) {
        rsq = r0sq / (1.0 + 2.0 * l3 * r0sq * elapsed);
    } else {
        double rvsq = -l1 / l3;
        if (r0sq == rvsq) return r_initial; // on the equilibrium, stays put
        double ratio = r0sq / rvsq;
        double den = (1.0 - ratio) * std::exp(2.0 * l1 * elapsed) + ratio;
        if (!(den > 0.0))
            throw DomainError("exact_solution: solution not defined at requested time");
        rsq = r0sq / den;
    }
    return std::copysign(std::sqrt(rsq), r_initial);
}

// The two solutions of the transition field psi at elapsed time t > 0 in the
// long-living phase: psi = 0 (stay on branch) and, for the branch starting
// at +-r_v, psi = -+ 2 r_v / (1 - e^{-(lambda_c - lambda) t}) (hop to the
// opposite branch, tending to -+ 2 r_v as t -> infinity).
struct PsiSolutions {
    double trivial;               // always 0: remain on the same branch
    double plus_branch_nontrivial;  // branch +r_v: negative, -> -2 r_v
    double minus_branch_nontrivial; // branch -r_v: positive, -> +2 r_v
};

inline PsiSolutions psi_solutions(const SsbParams& p, double elapsed) {
    validate(p);
    if (p.lambda >= p.lambda_c)
        throw DomainError("psi_solutions requires the long-living phase (lambda < lambda_c)");
    if (!(elapsed > 0.0))
        throw DomainError("psi_solutions: elapsed must be > 0");
    double rv = *spontaneous_return(p);
    double denom = 1.0 - std::exp(-(p.lambda_c - p.lambda) * elapsed);
    double mag = 2.0 * rv / denom;
    return PsiSolutions{0.0, -mag, +mag};
}

// One step of the discrete-time map
//   r_{i+1} = (1 - l1) r_i - l3 r_i^3 + rho + eps.
inline double discrete_step(const SsbParams& p, double r_i, double eps) {
    validate(p);
    if (!std::isfinite(r_i) || !std::isfinite(eps))
        throw DomainError("discrete_step: inputs must be finite");
    return (1.0 - p.l1()) * r_i - p.l3() * r_i * r_i * r_i + p.rho + eps;
}

// Simulation request: initial value, number of steps, per-step Gaussian
// noise scale, RNG seed. The same seed always reproduces the same path.
struct PathSpec {
    double r0 = 0.0;
    std::int64_t n_steps = 1;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

inline void validate(const PathSpec& s) {
    if (s.n_steps < 1) throw DomainError("n_steps must be >= 1");
    if (!(s.noise_std >= 0.0) || !std::isfinite(s.noise_std))
        throw DomainError("noise_std must be >= 0 and finite");
    if (!std::isfinite(s.r0)) throw DomainError("r0 must be finite");
}

// Iterates the discrete map for n_steps steps with i.i.d. Gaussian(0,
// noise_std^2) shocks. Output has n_steps + 1 entries; period 0 carries r0.
// Aborts if |r| exceeds 1e6 * r_c — the cubic map diverges outside the
// small-return regime and continuing would only produce non-finite values.
inline ReturnSeries simulate_path(const SsbParams& p, const PathSpec& spec) {
    validate(p);
    validate(spec);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ReturnSeries out;
    double r = spec.r0;
    out.push_back(0, r);
    const double guard = 1e6 * p.r_c;
    for (std::int64_t i = 1; i <= spec.n_steps; ++i) {
        double eps = spec.noise_std * gauss(rng);
        r = discrete_step(p, r, eps);
        if (!std::isfinite(r) || std::abs(r) > guard)
            throw DomainError("simulate_path diverged at step " + std::to_string(i) +
                              " (|r| > 1e6 * r_c); reduce the step scale or noise");
        out.push_back(i, r);
    }
    return out;
}

// Stationary AR(1) generator r_{i+1} = phi r_i + eps, eps ~ N(0, sigma^2),
// with r_0 drawn from the stationary distribution N(0, sigma^2/(1-phi^2)).
// Synthetic oracle for the speed-of-adjustment estimators (lambda = 1 - phi).
inline ReturnSeries gen_ar1(double phi, double sigma, std::int64_t n, std::uint64_t seed) {
    if (!(std::abs(phi) < 1.0))
        throw DomainError("gen_ar1 requires |phi| < 1 for stationarity");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw DomainError("gen_ar1: sigma must be >= 0 and finite");
    if (n < 2) throw DomainError("gen_ar1: n must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ReturnSeries out;
    double r = sigma / std::sqrt(1.0 - phi * phi) * gauss(rng);
    out.push_back(0, r);
    for (std::int64_t i = 1; i < n; ++i) {
        r = phi * r + sigma * gauss(rng);
        out.push_back(i, r);
    }
    return out;
}

} // namespace ssb
