#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "dcss/channel.hpp"
#include "dcss/detectors.hpp"
#include "dcss/errors.hpp"
#include "dcss/stats.hpp"

namespace dcss {

// Two Gaussian emission components plus the Markov transition probabilities.
// Component 0 is the low-mean (idle) state; m_step re-establishes the
// ordering after every update.
struct ModelParams {
    double mu0 = 0.0;
    double var0 = 1.0;
    double mu1 = 1.0;
    double var1 = 1.0;
    double alpha = 0.5;  // P(idle at d | active at d-1)
    double beta = 0.5;   // P(active at d | idle at d-1)

    double steady_state_p1() const { return beta / (alpha + beta); }

    // P(next = h | prev = g)
    double transition(int g, int h) const {
        if (g == 0) return h == 0 ? 1.0 - beta : beta;
        return h == 0 ? alpha : 1.0 - alpha;
    }

    double emission_logpdf(double x, int h) const {
        return h == 0 ? gaussian_logpdf(x, mu0, var0) : gaussian_logpdf(x, mu1, var1);
    }
};

// Scaled forward/backward messages. Each nu row is normalized to sum 1 and
// scale[d] holds the per-step normalizer, so loglik = sum of log scales.
// Emission likelihoods are cached for the backward pass and the posteriors.
struct ForwardBackwardPass {
    std::vector<std::array<double, 2>> nu;
    std::vector<std::array<double, 2>> pi;
    std::vector<double> scale;
    std::vector<std::array<double, 2>> emission;  // linear-domain densities
    double loglik = 0.0;
};

inline ForwardBackwardPass forward_pass(const ObservationWindow& window,
                                        const ModelParams& p) {
    const std::size_t d = window.size();
    if (d == 0) throw std::domain_error("forward_pass: empty window");
    ForwardBackwardPass fb;
    fb.nu.resize(d);
    fb.scale.resize(d);
    fb.emission.resize(d);

    for (std::size_t k = 0; k < d; ++k)
        for (int h = 0; h < 2; ++h)
            fb.emission[k][h] = std::exp(p.emission_logpdf(window.samples[k], h));

    const double p1 = p.steady_state_p1();
    std::array<double, 2> prev{};
    double loglik = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        std::array<double, 2> cur{};
        for (int h = 0; h < 2; ++h) {
            const double incoming =
                k == 0 ? (h == 0 ? 1.0 - p1 : p1)
                       : prev[0] * p.transition(0, h) + prev[1] * p.transition(1, h);
            cur[h] = fb.emission[k][h] * incoming;
        }
        const double s = cur[0] + cur[1];
        if (!(s > 0.0) || !std::isfinite(s))
            throw numerical_error("forward_pass: zero emission mass", static_cast<long>(k));
        fb.scale[k] = s;
        fb.nu[k] = {cur[0] / s, cur[1] / s};
        prev = fb.nu[k];
        loglik += std::log(s);
    }
    fb.loglik = loglik;
    return fb;
}

// Fills fb.pi from the recursion running d = D-1 down to 1, each step divided
// by the forward scale of step d+1. pi_D = (1,1) before scaling.
inline void backward_pass(const ObservationWindow& window, const ModelParams& p,
                          ForwardBackwardPass& fb) {
    const std::size_t d = window.size();
    fb.pi.assign(d, {1.0, 1.0});
    for (std::size_t k = d - 1; k-- > 0;) {
        for (int g = 0; g < 2; ++g) {
            double acc = 0.0;
            for (int h = 0; h < 2; ++h)
                acc += fb.pi[k + 1][h] * fb.emission[k + 1][h] * p.transition(g, h);
            fb.pi[k][g] = acc / fb.scale[k + 1];
        }
        if (!std::isfinite(fb.pi[k][0]) || !std::isfinite(fb.pi[k][1]))
            throw numerical_error("backward_pass: non-finite message", static_cast<long>(k));
    }
}

// Per-step state posteriors gamma and pairwise posteriors xi.
// xi[k][h][g] = P(s_{k+1} = h, s_k = g | window), k = 0..D-2.
struct PosteriorMarginals {
    std::vector<std::array<double, 2>> gamma;
    std::vector<std::array<std::array<double, 2>, 2>> xi;
};

inline PosteriorMarginals posterior_marginals(const ForwardBackwardPass& fb,
                                              const ModelParams& p) {
    const std::size_t d = fb.nu.size();
    PosteriorMarginals m;
    m.gamma.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        double g0 = fb.nu[k][0] * fb.pi[k][0];
        double g1 = fb.nu[k][1] * fb.pi[k][1];
        const double s = g0 + g1;
        if (!(s > 0.0))
            throw numerical_error("posterior_marginals: zero gamma mass", static_cast<long>(k));
        m.gamma[k] = {g0 / s, g1 / s};
    }
    if (d >= 2) m.xi.resize(d - 1);
    for (std::size_t k = 0; k + 1 < d; ++k) {
        double total = 0.0;
        std::array<std::array<double, 2>, 2> x{};
        for (int h = 0; h < 2; ++h)
            for (int g = 0; g < 2; ++g) {
                x[h][g] = fb.nu[k][g] * p.transition(g, h) * fb.emission[k + 1][h] *
                          fb.pi[k + 1][h] / fb.scale[k + 1];
                total += x[h][g];
            }
        if (!(total > 0.0))
            throw numerical_error("posterior_marginals: zero xi mass", static_cast<long>(k));
        for (int h = 0; h < 2; ++h)
            for (int g = 0; g < 2; ++g) x[h][g] /= total;
        m.xi[k] = x;
    }
    return m;
}

namespace detail {

inline double sample_variance(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return var / static_cast<double>(xs.size());
}

inline double variance_floor(const std::vector<double>& xs) {
    return std::max(1e-8, 1e-6 * sample_variance(xs));
}

constexpr double transition_clamp = 1e-4;

inline double clamp_transition(double p) {
    return std::clamp(p, transition_clamp, 1.0 - transition_clamp);
}

// Expected complete-data log-likelihood terms that involve the transition
// probabilities, including the stationary first-state prior:
//   f(alpha, beta) = (n01 + g0) log(alpha) + n11 log(1 - alpha)
//                  + (n10 + g1) log(beta)  + n00 log(1 - beta)
//                  - log(alpha + beta)
// where nHG are accumulated pairwise posteriors (to H from G) and
// (g0, g1) the first-step state posterior.
struct TransitionObjective {
    double a01 = 0.0;  // n01 + g0, multiplies log(alpha)
    double a11 = 0.0;  // n11, multiplies log(1 - alpha)
    double b10 = 0.0;  // n10 + g1, multiplies log(beta)
    double b00 = 0.0;  // n00, multiplies log(1 - beta)

    double value(double alpha, double beta) const {
        double v = -std::log(alpha + beta);
        if (a01 > 0.0) v += a01 * std::log(alpha);
        if (a11 > 0.0) v += a11 * std::log(1.0 - alpha);
        if (b10 > 0.0) v += b10 * std::log(beta);
        if (b00 > 0.0) v += b00 * std::log(1.0 - beta);
        return v;
    }
};

// Exact maximizer of a*log t + b*log(1-t) - log(t + other) over the clamped
// interval: stationary points solve a quadratic, so evaluate them and the
// interval ends.
inline double maximize_transition_coordinate(double a, double b, double other) {
    const double lo = transition_clamp, hi = 1.0 - transition_clamp;
    auto value = [&](double t) {
        double v = -std::log(t + other);
        if (a > 0.0) v += a * std::log(t);
        if (b > 0.0) v += b * std::log(1.0 - t);
        return v;
    };
    double best_t = lo;
    double best_v = value(lo);
    if (value(hi) > best_v) {
        best_t = hi;
        best_v = value(hi);
    }
    const double c2 = 1.0 - a - b;
    const double c1 = a * (1.0 - other) - b * other - 1.0;
    const double c0 = a * other;
    auto consider = [&](double t) {
        if (t > lo && t < hi && value(t) > best_v) {
            best_t = t;
            best_v = value(t);
        }
    };
    if (std::abs(c2) < 1e-14) {
        if (std::abs(c1) > 1e-14) consider(-c0 / c1);
    } else {
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc >= 0.0) {
            const double root = std::sqrt(disc);
            consider((-c1 + root) / (2.0 * c2));
            consider((-c1 - root) / (2.0 * c2));
        }
    }
    return best_t;
}

// Cyclic exact coordinate ascent on the transition objective from a given
// start; every sweep can only increase the objective.
inline std::pair<double, double> ascend_transitions(const TransitionObjective& f, double alpha,
                                                    double beta) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        const double next_alpha = maximize_transition_coordinate(f.a01, f.a11, beta);
        const double next_beta = maximize_transition_coordinate(f.b10, f.b00, next_alpha);
        const bool settled =
            std::abs(next_alpha - alpha) < 1e-13 && std::abs(next_beta - beta) < 1e-13;
        alpha = next_alpha;
        beta = next_beta;
        if (settled) break;
    }
    return {alpha, beta};
}

}  // namespace detail

// Maximization given the posteriors: responsibility-weighted means,
// variances about the new means (floored), and the transition probabilities
// maximizing the expected complete-data log-likelihood. Because the
// first-state prior is the stationary law beta/(alpha+beta), the plain
// pairwise-posterior ratios maximize only the transition part and can lower
// the likelihood; the exact coordinate ascent below keeps every step a
// proper GEM step. The ratios remain the dominant term (the correction is
// O(1/D)). Components are reordered so mu0 <= mu1, swapping alpha and beta
// accordingly.
//
// `previous`, when given, seeds the transition ascent so the update never
// falls below the incoming parameters.
inline ModelParams m_step(const ObservationWindow& window, const PosteriorMarginals& m,
                          const ModelParams* previous = nullptr) {
    const std::size_t d = window.size();
    std::array<double, 2> resp{};
    std::array<double, 2> mu{};
    for (std::size_t k = 0; k < d; ++k)
        for (int h = 0; h < 2; ++h) {
            resp[h] += m.gamma[k][h];
            mu[h] += m.gamma[k][h] * window.samples[k];
        }
    for (int h = 0; h < 2; ++h) {
        if (resp[h] < 1e-8)
            throw degenerate_component_error("m_step: component lost all responsibility");
        mu[h] /= resp[h];
    }

    const double floor = detail::variance_floor(window.samples);
    std::array<double, 2> var{};
    for (std::size_t k = 0; k < d; ++k)
        for (int h = 0; h < 2; ++h) {
            const double dev = window.samples[k] - mu[h];
            var[h] += m.gamma[k][h] * dev * dev;
        }
    for (int h = 0; h < 2; ++h) var[h] = std::max(var[h] / resp[h], floor);

    double alpha = 0.5, beta = 0.5;
    if (!m.xi.empty()) {
        double n01 = 0.0, n11 = 0.0, n10 = 0.0, n00 = 0.0;  // n{h}{g}: to h from g
        for (const auto& x : m.xi) {
            n01 += x[0][1];
            n11 += x[1][1];
            n10 += x[1][0];
            n00 += x[0][0];
        }
        detail::TransitionObjective obj;
        obj.a01 = n01 + m.gamma[0][0];
        obj.a11 = n11;
        obj.b10 = n10 + m.gamma[0][1];
        obj.b00 = n00;

        // ratio estimates as the primary start
        const double ratio_alpha =
            n01 + n11 > 0.0 ? detail::clamp_transition(n01 / (n01 + n11)) : 0.5;
        const double ratio_beta =
            n10 + n00 > 0.0 ? detail::clamp_transition(n10 / (n10 + n00)) : 0.5;
        auto [best_a, best_b] = detail::ascend_transitions(obj, ratio_alpha, ratio_beta);
        double best_v = obj.value(best_a, best_b);
        if (previous) {
            auto [pa, pb] = detail::ascend_transitions(
                obj, detail::clamp_transition(previous->alpha),
                detail::clamp_transition(previous->beta));
            if (obj.value(pa, pb) > best_v) {
                best_a = pa;
                best_b = pb;
                best_v = obj.value(pa, pb);
            }
        }
        alpha = best_a;
        beta = best_b;
    }

    ModelParams p;
    p.mu0 = mu[0];
    p.var0 = var[0];
    p.mu1 = mu[1];
    p.var1 = var[1];
    p.alpha = detail::clamp_transition(alpha);
    p.beta = detail::clamp_transition(beta);
    if (p.mu0 > p.mu1) {
        std::swap(p.mu0, p.mu1);
        std::swap(p.var0, p.var1);
        std::swap(p.alpha, p.beta);
    }
    return p;
}

// 1-D 2-means with deterministic min/max initialization. Returns emission
// parameters only (transitions are left at the 0.5 placeholder for the grid
// search to fill in).
inline ModelParams kmeans_init(const ObservationWindow& window) {
    const std::vector<double>& xs = window.samples;
    if (xs.size() < 2) throw degenerate_input_error("kmeans_init: need at least two samples");
    const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
    if (*lo_it == *hi_it)
        throw degenerate_input_error("kmeans_init: all samples identical");

    double c0 = *lo_it, c1 = *hi_it;
    std::vector<char> assign(xs.size(), 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const char a = std::abs(xs[k] - c0) <= std::abs(xs[k] - c1) ? 0 : 1;
            if (a != assign[k]) {
                assign[k] = a;
                changed = true;
            }
        }
        double s0 = 0.0, s1 = 0.0;
        std::size_t n0 = 0, n1 = 0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            if (assign[k] == 0) {
                s0 += xs[k];
                ++n0;
            } else {
                s1 += xs[k];
                ++n1;
            }
        }
        // min/max seeding keeps both clusters non-empty
        c0 = s0 / static_cast<double>(n0);
        c1 = s1 / static_cast<double>(n1);
        if (!changed && iter > 0) break;
    }

    const double floor = detail::variance_floor(xs);
    double v0 = 0.0, v1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (assign[k] == 0) {
            v0 += (xs[k] - c0) * (xs[k] - c0);
            ++n0;
        } else {
            v1 += (xs[k] - c1) * (xs[k] - c1);
            ++n1;
        }
    }
    ModelParams p;
    p.mu0 = c0;
    p.var0 = std::max(n0 ? v0 / static_cast<double>(n0) : 0.0, floor);
    p.mu1 = c1;
    p.var1 = std::max(n1 ? v1 / static_cast<double>(n1) : 0.0, floor);
    if (p.mu0 > p.mu1) {
        std::swap(p.mu0, p.mu1);
        std::swap(p.var0, p.var1);
    }
    return p;
}

// The transition-probability grid used for likelihood initialization.
inline const std::array<double, 9>& transition_grid() {
    static const std::array<double, 9> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    return grid;
}

namespace detail {

// Forward log-likelihood over precomputed emission densities; the grid
// search varies only the transition probabilities, so the exp-heavy emission
// evaluation is hoisted out of the 81 passes.
inline double forward_loglik_cached(const std::vector<std::array<double, 2>>& emission,
                                    double alpha, double beta) {
    const double p1 = beta / (alpha + beta);
    const double a00 = 1.0 - beta, a01 = beta, a10 = alpha, a11 = 1.0 - alpha;
    double prev0 = 0.0, prev1 = 0.0;
    double loglik = 0.0;
    for (std::size_t k = 0; k < emission.size(); ++k) {
        const double in0 = k == 0 ? 1.0 - p1 : prev0 * a00 + prev1 * a10;
        const double in1 = k == 0 ? p1 : prev0 * a01 + prev1 * a11;
        const double c0 = emission[k][0] * in0;
        const double c1 = emission[k][1] * in1;
        const double s = c0 + c1;
        if (!(s > 0.0) || !std::isfinite(s))
            throw numerical_error("forward_pass: zero emission mass", static_cast<long>(k));
        prev0 = c0 / s;
        prev1 = c1 / s;
        loglik += std::log(s);
    }
    return loglik;
}

}  // namespace detail

// Coarse likelihood search over the 9x9 transition grid with the emission
// parameters held fixed. Ties resolve to the smallest (alpha, beta) pair.
inline std::pair<double, double> grid_init_transitions(const ObservationWindow& window,
                                                       const ModelParams& emissions) {
    std::vector<std::array<double, 2>> e(window.size());
    for (std::size_t k = 0; k < window.size(); ++k)
        for (int h = 0; h < 2; ++h)
            e[k][h] = std::exp(emissions.emission_logpdf(window.samples[k], h));

    double best_ll = -std::numeric_limits<double>::infinity();
    double best_a = transition_grid().front(), best_b = transition_grid().front();
    for (double a : transition_grid())
        for (double b : transition_grid()) {
            const double ll = detail::forward_loglik_cached(e, a, b);
            if (ll > best_ll) {
                best_ll = ll;
                best_a = a;
                best_b = b;
            }
        }
    return {best_a, best_b};
}

struct EmResult {
    ModelParams params;
    std::vector<double> loglik_trace;
    int iterations = 0;
    bool converged = false;
};

using EmObserver = std::function<void(int iteration, const ModelParams& params, double loglik)>;

// Alternates the forward-backward E-step and the closed-form M-step until the
// relative log-likelihood change drops below tol. The trace holds one
// log-likelihood per E-step and is non-decreasing up to floating-point slack.
inline EmResult run_em(const ObservationWindow& window, const ModelParams& init, double tol,
                       int max_iter, const EmObserver& observer = {}) {
    EmResult res;
    res.params = init;
    for (int iter = 1; iter <= max_iter; ++iter) {
        ForwardBackwardPass fb = forward_pass(window, res.params);
        backward_pass(window, res.params, fb);
        const PosteriorMarginals marg = posterior_marginals(fb, res.params);
        try {
            res.params = m_step(window, marg, &res.params);
        } catch (const degenerate_component_error& e) {
            throw degenerate_component_error(e.what(), iter);
        }
        res.loglik_trace.push_back(fb.loglik);
        res.iterations = iter;
        if (observer) observer(iter, res.params, fb.loglik);
        if (res.loglik_trace.size() >= 2) {
            const double prev = res.loglik_trace[res.loglik_trace.size() - 2];
            const double cur = res.loglik_trace.back();
            if (std::abs(cur - prev) <= tol * (1.0 + std::abs(cur))) {
                res.converged = true;
                break;
            }
        }
    }
    return res;
}

// Log-domain max-product decoding with backtrace; ties break toward the idle
// state.
inline StateVector viterbi(const ObservationWindow& window, const ModelParams& p) {
    const std::size_t d = window.size();
    if (d == 0) throw std::domain_error("viterbi: empty window");
    const double p1 = p.steady_state_p1();
    std::array<double, 2> log_prior = {std::log(1.0 - p1), std::log(p1)};
    std::array<std::array<double, 2>, 2> log_a;
    for (int g = 0; g < 2; ++g)
        for (int h = 0; h < 2; ++h) log_a[g][h] = std::log(p.transition(g, h));

    std::vector<std::array<double, 2>> omega(d);
    std::vector<std::array<int, 2>> back(d);
    for (int h = 0; h < 2; ++h)
        omega[0][h] = log_prior[h] + p.emission_logpdf(window.samples[0], h);
    for (std::size_t k = 1; k < d; ++k)
        for (int h = 0; h < 2; ++h) {
            const double from0 = omega[k - 1][0] + log_a[0][h];
            const double from1 = omega[k - 1][1] + log_a[1][h];
            const int g = from1 > from0 ? 1 : 0;
            back[k][h] = g;
            omega[k][h] =
                p.emission_logpdf(window.samples[k], h) + (g ? from1 : from0);
        }

    StateVector path(d);
    path[d - 1] = omega[d - 1][1] > omega[d - 1][0] ? 1 : 0;
    for (std::size_t k = d - 1; k-- > 0;) path[k] = static_cast<std::uint8_t>(back[k + 1][path[k + 1]]);
    return path;
}

// Inverts the idle-mean relation of the energy statistic to recover the
// per-sample noise power.
inline double estimate_noise_power(const ModelParams& p, int samples_per_interval) {
    if (samples_per_interval < 1)
        throw std::domain_error("estimate_noise_power: samples_per_interval must be >= 1");
    return p.mu0 / static_cast<double>(samples_per_interval);
}

struct EmMwsedResult {
    double statistic = 0.0;
    Hypothesis decision = Hypothesis::idle;
    StateVector states;
    ModelParams params;
    std::vector<double> loglik_trace;
    int em_iterations = 0;
    bool em_converged = false;
    bool fallback = false;  // degenerate fit; decided on the present sample only
};

struct EmSettings {
    double tol = 1e-6;
    int max_iter = 200;
};

// Full estimation-based detection for one (already consensus-averaged)
// window: k-means + grid initialization, EM, Viterbi decoding, then the
// matched-sample statistic against the threshold. Degenerate fits fall back
// to a plain energy decision on the present sample, flagged in the result.
inline EmMwsedResult em_mwsed_detect(const ObservationWindow& window, const EmSettings& em,
                                     WeightKind scheme, double lambda,
                                     const EmObserver& observer = {}) {
    EmMwsedResult res;
    try {
        ModelParams init = kmeans_init(window);
        const auto [a, b] = grid_init_transitions(window, init);
        init.alpha = a;
        init.beta = b;
        const EmResult fit = run_em(window, init, em.tol, em.max_iter, observer);
        res.params = fit.params;
        res.loglik_trace = fit.loglik_trace;
        res.em_iterations = fit.iterations;
        res.em_converged = fit.converged;
        res.states = viterbi(window, fit.params);
        res.statistic = mwsed_statistic(window, res.states, scheme);
    } catch (const degenerate_input_error&) {
        res.fallback = true;
    } catch (const degenerate_component_error&) {
        res.fallback = true;
    } catch (const numerical_error&) {
        res.fallback = true;
    }
    if (res.fallback) {
        res.statistic = window.samples.back();
        res.states.assign(window.size(), 0);
        res.states.back() = res.statistic >= lambda ? 1 : 0;
    }
    res.decision = decide(res.statistic, lambda);
    return res;
}

}  // namespace dcss
