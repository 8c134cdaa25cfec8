#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "coresim/detection.hpp"
#include "coresim/stats.hpp"

namespace coresim {

/// Hyperparameters of the regularized inverse distance d^{-1}(r; c, l) = c/(r+l).
struct InverseDistanceParams {
    double c = 1.0;
    double ell = 0.1;

    bool valid() const { return c > 0.0 && ell > 0.0; }
};

/// d^{-1}(r; c, l). The value c/l corresponds to unsafe-set contact.
inline double regularized_inverse_distance(double r, const InverseDistanceParams& p) {
    if (r < 0.0) throw std::invalid_argument("regularized_inverse_distance: r must be >= 0");
    return p.c / (r + p.ell);
}

enum class PriorKind { uniform_on_R_D, point_mass_at_R };

/**
 * Inputs of the safe-traversal certificate: the inverse-distance scale, the
 * conservative detection curve (with sensing radius D), the safe initial
 * radius R, the risk split (total delta, context fraction gamma), the prior
 * over the initial distance to the nearest undetected unsafe region, and the
 * platform speed/latency that nondimensionalize into the measurement budget.
 */
struct CertificateProblem {
    InverseDistanceParams params;
    DetectionModel model;
    double R = 4.0;
    double delta = 0.1;
    double gamma = 0.0;
    PriorKind prior = PriorKind::uniform_on_R_D;
    double speed = 0.35;
    double latency = 3.0;

    void validate() const {
        if (!params.valid()) throw std::invalid_argument("certificate: c, ell must be > 0");
        // gamma == delta is the boundary of the trivial certificate (all risk
        // apportioned to context failures) and is accepted
        if (!(gamma >= 0.0 && gamma <= delta && delta < 1.0))
            throw std::invalid_argument("certificate: need 0 <= gamma <= delta < 1");
        if (!(R > 0.0 && R <= model.D))
            throw std::invalid_argument("certificate: need 0 < R <= D");
        if (!(speed > 0.0 && latency > 0.0))
            throw std::invalid_argument("certificate: speed and latency must be > 0");
    }

    double rhs() const { return params.c * (delta - gamma) / params.ell; }
};

struct CertificateResult {
    int kappa = 0;       // measurements per D-traversal (budget semantics)
    bool feasible = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;  // rhs - lhs
    double max_safe_speed = 0.0;
};

namespace detail {

/// Composite Simpson over [a, b] with n subintervals (n made even).
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n < 2) n = 2;
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

/// m_D evaluated through the linear branch, without the r >= D override;
/// used inside integrals where the domain is already truncated to D.
inline double detection_interior(const DetectionModel& m, double r) {
    return std::max(0.0, m.p0 - m.epsilon * r / m.D);
}

}  // namespace detail

/**
 * Upper bound on E[d^{-1}(r)] after k measurements from a fixed position:
 * the ratio of integral(c (1-m)^k / ((r+l) Z) p0(r)) with Z normalizing
 * (1-m)^k p0 over [0, D]. Point-mass priors evaluate in closed form; the
 * uniform prior integrates by composite Simpson with a step-halving check.
 * Weights are rescaled in log space so large k cannot underflow the ratio.
 */
inline double expected_inverse_distance(int k, const CertificateProblem& prob) {
    if (k < 0) throw std::invalid_argument("expected_inverse_distance: k must be >= 0");
    prob.validate();
    const double c = prob.params.c, ell = prob.params.ell;
    const double R = prob.R, D = prob.model.D;

    if (prob.prior == PriorKind::point_mass_at_R || R >= D) {
        // (1-m(R))^k cancels with Z unless m(R) = 1, which A.2 excludes.
        const double m = prob.model.probability(R);
        if (m >= 1.0) throw std::domain_error("expected_inverse_distance: invalid model, Z = 0");
        return c / (R + ell);
    }

    // log weight, rescaled by its maximum over [R, D] (m decreasing => at D).
    const double log_w_max = k * std::log1p(-detail::detection_interior(prob.model, D));
    auto w = [&](double r) {
        return std::exp(k * std::log1p(-detail::detection_interior(prob.model, r)) - log_w_max);
    };
    auto numerator = [&](double r) { return w(r) * c / (r + ell); };

    int n = 10000;
    double num = detail::simpson(numerator, R, D, n);
    double den = detail::simpson(w, R, D, n);
    for (int pass = 0; pass < 3; ++pass) {
        const double num2 = detail::simpson(numerator, R, D, 2 * n);
        const double den2 = detail::simpson(w, R, D, 2 * n);
        const double before = num / den, after = num2 / den2;
        num = num2;
        den = den2;
        n *= 2;
        if (std::abs(after - before) <= 1e-6 * std::abs(after)) break;
    }
    // Z in unscaled terms: den * exp(log_w_max) / (D - R); spec rejects Z < 1e-300.
    if (std::log(den) + log_w_max - std::log(D - R) < -300.0 * std::log(10.0))
        throw std::domain_error("expected_inverse_distance: invalid model, Z below 1e-300");
    return num / den;
}

/// Certificate condition at a fixed k: E[d^{-1}]{k} <= c (delta - gamma) / ell.
inline CertificateResult check_theorem_condition(int k, const CertificateProblem& prob) {
    CertificateResult r;
    r.kappa = k;
    r.lhs = expected_inverse_distance(k, prob);
    r.rhs = prob.rhs();
    r.residual = r.rhs - r.lhs;
    r.feasible = r.lhs <= r.rhs;
    r.max_safe_speed = !r.feasible ? 0.0
                       : k == 0    ? std::numeric_limits<double>::infinity()
                                   : prob.model.D / (k * prob.latency);
    return r;
}

/// Smallest k satisfying the certificate condition (the lhs is nonincreasing in
/// k, so the linear scan is sound). Infeasible results carry k = k_max.
inline CertificateResult solve_nopm(const CertificateProblem& prob, int k_max = 200) {
    if (k_max < 1) throw std::invalid_argument("solve_nopm: k_max must be >= 1");
    for (int k = 0; k <= k_max; ++k) {
        CertificateResult r = check_theorem_condition(k, prob);
        if (r.feasible) return r;
    }
    CertificateResult r = check_theorem_condition(k_max, prob);
    r.feasible = false;
    r.kappa = k_max;
    r.max_safe_speed = 0.0;
    return r;
}

/// One evaluation of the beeline ("maximum traversal speed") left-hand side.
struct MtsEvaluation {
    double lhs = 0.0;
    double miss_probability = 0.0;  // R(m_D): all measurement events missed
};

/**
 * The beeline sum over a ladder of `events` measurement positions
 * r_j = D(events-j)/events, j = 0..events-1 — the first at r = D where
 * m_D(D) = 0 (the window-opening delivery carries no information). Detection
 * at step i contributes its inverse distance weighted by the miss/hit
 * probabilities; the all-miss remainder enters at the contact value c/ell.
 * Products run in log space to avoid underflow.
 */
inline MtsEvaluation mts_lhs(const CertificateProblem& prob, int events) {
    if (events < 1) throw std::invalid_argument("mts_lhs: events must be >= 1");
    const double c = prob.params.c, ell = prob.params.ell, D = prob.model.D;
    double log_miss_prefix = 0.0;  // log prod_{j<i} (1 - m_j)
    bool prefix_zero = false;
    double lhs = 0.0;
    for (int i = 1; i <= events - 1; ++i) {
        const double r_prev = D * (events - (i - 1)) / events;
        const double m_prev = prob.model.probability(r_prev);
        if (m_prev >= 1.0) prefix_zero = true;
        else log_miss_prefix += std::log1p(-m_prev);
        const double r_i = D * (events - i) / events;
        const double m_i = prob.model.probability(r_i);
        if (!prefix_zero && m_i > 0.0)
            lhs += c / (ell + r_i) * std::exp(log_miss_prefix) * m_i;
    }
    // remainder: miss every event on the ladder
    {
        const double r_last = D * 1.0 / events;
        const double m_last = prob.model.probability(r_last);
        if (m_last >= 1.0) prefix_zero = true;
        else log_miss_prefix += std::log1p(-m_last);
    }
    MtsEvaluation ev;
    ev.miss_probability = prefix_zero ? 0.0 : std::exp(log_miss_prefix);
    ev.lhs = lhs + ev.miss_probability * c / ell;
    return ev;
}

/**
 * Smallest measurement budget kappa whose beeline condition holds. The ladder
 * for budget kappa spans kappa+1 events (the window-opening delivery plus one
 * per period). A zero all-miss probability certifies trivially at any
 * delta >= gamma (undetected entry is impossible). Linear scan; monotonicity
 * is not assumed.
 */
inline CertificateResult solve_mts(const CertificateProblem& prob, int k_max = 200) {
    if (k_max < 1) throw std::invalid_argument("solve_mts: k_max must be >= 1");
    prob.validate();
    const double rhs = prob.rhs();
    MtsEvaluation last;
    for (int kappa = 0; kappa <= k_max; ++kappa) {
        last = mts_lhs(prob, kappa + 1);
        const bool trivial = last.miss_probability == 0.0 && prob.delta >= prob.gamma;
        if (last.lhs <= rhs || trivial) {
            CertificateResult r;
            r.kappa = kappa;
            r.feasible = true;
            r.lhs = last.lhs;
            r.rhs = rhs;
            r.residual = rhs - last.lhs;
            r.max_safe_speed = kappa == 0 ? std::numeric_limits<double>::infinity()
                                          : prob.model.D / (kappa * prob.latency);
            return r;
        }
    }
    CertificateResult r;
    r.kappa = k_max;
    r.feasible = false;
    r.lhs = last.lhs;
    r.rhs = rhs;
    r.residual = rhs - last.lhs;
    return r;
}

/// Measurements that fit in one D-traversal at the given speed and latency.
inline int nondimensionalize(double speed, double latency, double D, int k_max = 200) {
    if (speed <= 0.0 || latency <= 0.0 || D <= 0.0)
        throw std::invalid_argument("nondimensionalize: all inputs must be positive");
    const double raw = D / (speed * latency);
    if (raw >= static_cast<double>(k_max)) return k_max;
    return static_cast<int>(std::floor(raw));
}

struct CertificatePoint {
    InverseDistanceParams params;
    CertificateResult result;
};

struct CertificateSearch {
    bool any_feasible = false;
    CertificatePoint best;               // max normalized residual among feasible,
                                         // else the least-infeasible point
    std::vector<CertificatePoint> grid;  // full evaluation table
};

/**
 * Log-grid search over (c, ell) in [1e-2, 1e2] x [1e-3, 1e1] for a beeline
 * certificate within the measurement budget. Feasibility is c-invariant
 * (both sides scale linearly in c), so this is effectively a 1-D search over
 * ell, retained in 2-D. Preference goes to the maximal residual in
 * delta-units (residual * ell / c).
 */
inline CertificateSearch search_certificate(double target_delta, double gamma, int kappa_budget,
                                            const DetectionModel& model,
                                            PriorKind prior = PriorKind::uniform_on_R_D,
                                            double R = 4.0, double speed = 0.35,
                                            double latency = 3.0) {
    if (kappa_budget < 1) throw std::invalid_argument("search_certificate: budget must be >= 1");
    CertificateSearch out;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int ci = 0; ci <= 16; ++ci) {
        const double c = std::pow(10.0, -2.0 + 0.25 * ci);
        for (int li = 0; li <= 32; ++li) {
            const double ell = std::pow(10.0, -3.0 + 0.125 * li);
            CertificateProblem prob;
            prob.params = {c, ell};
            prob.model = model;
            prob.R = R;
            prob.delta = target_delta;
            prob.gamma = gamma;
            prob.prior = prior;
            prob.speed = speed;
            prob.latency = latency;
            CertificatePoint pt;
            pt.params = prob.params;
            pt.result = solve_mts(prob, kappa_budget);
            out.grid.push_back(pt);
            // feasibility is c-invariant; nudge ties toward c = 1 for reporting
            const double score = pt.result.residual * ell / c - 1e-9 * std::abs(std::log10(c));
            if (pt.result.feasible) {
                if (!out.any_feasible || score > best_score) {
                    out.any_feasible = true;
                    best_score = score;
                    out.best = pt;
                }
            } else if (!out.any_feasible && score > best_score) {
                best_score = score;
                out.best = pt;
            }
        }
    }
    return out;
}

struct MonteCarloResult {
    double unsafe_rate = 0.0;
    uint64_t unsafe_count = 0;
    uint64_t trials = 0;
    BinomialCi ci;  // 95% Clopper-Pearson
};

/**
 * Beeline validation of the certificate: kappa independent Bernoulli
 * measurements at r = D(kappa-j)/kappa; a trial is safe iff some detection
 * occurs at r > stopping_margin.
 */
inline MonteCarloResult monte_carlo_validate(int kappa, const DetectionModel& model,
                                             uint64_t trials, std::mt19937_64& rng,
                                             double stopping_margin = 0.0) {
    if (trials < 1) throw std::invalid_argument("monte_carlo_validate: trials must be >= 1");
    if (kappa < 1) throw std::invalid_argument("monte_carlo_validate: kappa must be >= 1");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> p(kappa), r(kappa);
    for (int j = 0; j < kappa; ++j) {
        r[j] = model.D * (kappa - j) / kappa;
        p[j] = model.probability(r[j]);
    }
    uint64_t unsafe = 0;
    for (uint64_t t = 0; t < trials; ++t) {
        bool saved = false;
        for (int j = 0; j < kappa; ++j)
            if (unit(rng) < p[j] && r[j] > stopping_margin) {
                saved = true;
                break;
            }
        if (!saved) ++unsafe;
    }
    MonteCarloResult res;
    res.unsafe_count = unsafe;
    res.trials = trials;
    res.unsafe_rate = static_cast<double>(unsafe) / trials;
    res.ci = clopper_pearson(unsafe, trials);
    return res;
}

}  // namespace coresim
