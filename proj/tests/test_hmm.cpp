#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "dcss/channel.hpp"
#include "dcss/hmm.hpp"
#include "dcss/rng.hpp"

using dcss::ModelParams;
using dcss::ObservationWindow;
using dcss::RngStream;
using dcss::StateVector;

namespace {

ObservationWindow window_of(std::vector<double> xs) {
    ObservationWindow w;
    w.samples = std::move(xs);
    return w;
}

ModelParams random_params(RngStream& rng) {
    ModelParams p;
    p.mu0 = rng.uniform() * 10.0;
    p.mu1 = p.mu0 + 0.5 + rng.uniform() * 10.0;
    p.var0 = 0.5 + rng.uniform() * 5.0;
    p.var1 = 0.5 + rng.uniform() * 8.0;
    p.alpha = 0.05 + rng.uniform() * 0.9;
    p.beta = 0.05 + rng.uniform() * 0.9;
    return p;
}

ObservationWindow sample_from_model(const ModelParams& p, std::size_t d, RngStream& rng) {
    ObservationWindow w;
    StateVector s(d);
    s[0] = rng.bernoulli(p.steady_state_p1()) ? 1 : 0;
    for (std::size_t k = 1; k < d; ++k)
        s[k] = rng.bernoulli(p.transition(s[k - 1], 1)) ? 1 : 0;
    w.samples.resize(d);
    for (std::size_t k = 0; k < d; ++k)
        w.samples[k] = rng.normal(s[k] ? p.mu1 : p.mu0, std::sqrt(s[k] ? p.var1 : p.var0));
    w.truth = std::move(s);
    return w;
}

// Brute-force reference over all 2^D state sequences.
struct EnumResult {
    double loglik = 0.0;
    std::vector<std::array<double, 2>> gamma;
    std::vector<std::array<std::array<double, 2>, 2>> xi;  // [k][new][old]
    StateVector viterbi_path;
};

EnumResult enumerate_hmm(const ObservationWindow& w, const ModelParams& p) {
    const int d = static_cast<int>(w.size());
    REQUIRE(d <= 20);
    const long n = 1L << d;
    const double p1 = p.steady_state_p1();

    std::vector<double> logp(n);
    double max_lp = -std::numeric_limits<double>::infinity();
    long best = 0;
    for (long mask = 0; mask < n; ++mask) {
        double lp = std::log((mask & 1) ? p1 : 1.0 - p1) +
                    p.emission_logpdf(w.samples[0], mask & 1);
        for (int k = 1; k < d; ++k) {
            const int prev = (mask >> (k - 1)) & 1;
            const int cur = (mask >> k) & 1;
            lp += std::log(p.transition(prev, cur)) + p.emission_logpdf(w.samples[k], cur);
        }
        logp[mask] = lp;
        if (lp > max_lp) {
            max_lp = lp;
            best = mask;
        }
    }

    long double total = 0.0L;
    for (long mask = 0; mask < n; ++mask) total += expl(static_cast<long double>(logp[mask] - max_lp));

    EnumResult res;
    res.loglik = max_lp + static_cast<double>(logl(total));
    res.gamma.assign(d, {0.0, 0.0});
    if (d >= 2) res.xi.assign(d - 1, {});
    for (long mask = 0; mask < n; ++mask) {
        const long double weight = expl(static_cast<long double>(logp[mask] - max_lp)) / total;
        for (int k = 0; k < d; ++k) res.gamma[k][(mask >> k) & 1] += static_cast<double>(weight);
        for (int k = 0; k + 1 < d; ++k)
            res.xi[k][(mask >> (k + 1)) & 1][(mask >> k) & 1] += static_cast<double>(weight);
    }
    res.viterbi_path.resize(d);
    for (int k = 0; k < d; ++k) res.viterbi_path[k] = (best >> k) & 1;
    return res;
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("forward-backward and viterbi match enumeration", "[hmm]") {
    RngStream rng(101, 0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t d = 1 + rng.uniform_int(10);
        const ModelParams p = random_params(rng);
        const ObservationWindow w = sample_from_model(p, d, rng);

        const EnumResult ref = enumerate_hmm(w, p);
        auto fb = dcss::forward_pass(w, p);
        dcss::backward_pass(w, p, fb);
        const auto marg = dcss::posterior_marginals(fb, p);

        CHECK(close_rel(fb.loglik, ref.loglik, 1e-10));
        for (std::size_t k = 0; k < d; ++k)
            for (int h = 0; h < 2; ++h) CHECK(close_rel(marg.gamma[k][h], ref.gamma[k][h], 1e-10));
        for (std::size_t k = 0; k + 1 < d; ++k)
            for (int h = 0; h < 2; ++h)
                for (int g = 0; g < 2; ++g)
                    CHECK(close_rel(marg.xi[k][h][g], ref.xi[k][h][g], 1e-10));

        const StateVector path = dcss::viterbi(w, p);
        CHECK(path == ref.viterbi_path);
    }
}

TEST_CASE("posterior normalization and marginalization identities", "[hmm]") {
    RngStream rng(102, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams p = random_params(rng);
        const ObservationWindow w = sample_from_model(p, 40, rng);
        auto fb = dcss::forward_pass(w, p);
        dcss::backward_pass(w, p, fb);
        const auto marg = dcss::posterior_marginals(fb, p);
        for (std::size_t k = 0; k < w.size(); ++k)
            CHECK(marg.gamma[k][0] + marg.gamma[k][1] == Catch::Approx(1.0).margin(1e-10));
        for (std::size_t k = 0; k + 1 < w.size(); ++k) {
            double slice = 0.0;
            for (int h = 0; h < 2; ++h)
                for (int g = 0; g < 2; ++g) slice += marg.xi[k][h][g];
            CHECK(slice == Catch::Approx(1.0).margin(1e-10));
            for (int h = 0; h < 2; ++h)
                CHECK(marg.xi[k][h][0] + marg.xi[k][h][1] ==
                      Catch::Approx(marg.gamma[k + 1][h]).margin(1e-10));
            for (int g = 0; g < 2; ++g)
                CHECK(marg.xi[k][0][g] + marg.xi[k][1][g] ==
                      Catch::Approx(marg.gamma[k][g]).margin(1e-10));
        }
    }
}

TEST_CASE("single-step window marginal likelihood", "[hmm]") {
    ModelParams p;
    p.mu0 = 2.0;
    p.var0 = 1.5;
    p.mu1 = 6.0;
    p.var1 = 2.5;
    p.alpha = 0.3;
    p.beta = 0.2;
    const double x = 4.5;
    const auto fb = dcss::forward_pass(window_of({x}), p);
    const double p1 = p.steady_state_p1();
    const double expect = std::log((1.0 - p1) * std::exp(p.emission_logpdf(x, 0)) +
                                   p1 * std::exp(p.emission_logpdf(x, 1)));
    CHECK(fb.loglik == Catch::Approx(expect).epsilon(1e-12));

    auto fb2 = fb;
    dcss::backward_pass(window_of({x}), p, fb2);
    const auto marg = dcss::posterior_marginals(fb2, p);
    CHECK(marg.gamma[0][0] == Catch::Approx(fb.nu[0][0]).margin(1e-12));
    CHECK(marg.xi.empty());
}

TEST_CASE("uniform transitions reduce to an iid mixture", "[hmm]") {
    RngStream rng(103, 0);
    ModelParams p = random_params(rng);
    p.alpha = 0.5;
    p.beta = 0.5;
    const ObservationWindow w = sample_from_model(p, 60, rng);
    const auto fb = dcss::forward_pass(w, p);
    double expect = 0.0;
    for (double x : w.samples)
        expect += std::log(0.5 * std::exp(p.emission_logpdf(x, 0)) +
                           0.5 * std::exp(p.emission_logpdf(x, 1)));
    CHECK(fb.loglik == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("backward messages start at one", "[hmm]") {
    RngStream rng(104, 0);
    const ModelParams p = random_params(rng);
    const ObservationWindow w = sample_from_model(p, 25, rng);
    auto fb = dcss::forward_pass(w, p);
    dcss::backward_pass(w, p, fb);
    CHECK(fb.pi.back()[0] == 1.0);
    CHECK(fb.pi.back()[1] == 1.0);
}

TEST_CASE("scaled recursion agrees with an unscaled long-double reference", "[hmm]") {
    RngStream rng(105, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const ModelParams p = random_params(rng);
        const std::size_t d = 5 + rng.uniform_int(26);
        const ObservationWindow w = sample_from_model(p, d, rng);

        const double p1 = p.steady_state_p1();
        long double a0 = (1.0L - static_cast<long double>(p1)) *
                         expl(static_cast<long double>(p.emission_logpdf(w.samples[0], 0)));
        long double a1 = static_cast<long double>(p1) *
                         expl(static_cast<long double>(p.emission_logpdf(w.samples[0], 1)));
        for (std::size_t k = 1; k < d; ++k) {
            const long double e0 = expl(static_cast<long double>(p.emission_logpdf(w.samples[k], 0)));
            const long double e1 = expl(static_cast<long double>(p.emission_logpdf(w.samples[k], 1)));
            const long double n0 = e0 * (a0 * p.transition(0, 0) + a1 * p.transition(1, 0));
            const long double n1 = e1 * (a0 * p.transition(0, 1) + a1 * p.transition(1, 1));
            a0 = n0;
            a1 = n1;
        }
        const double reference = static_cast<double>(logl(a0 + a1));
        const double scaled = dcss::forward_pass(w, p).loglik;
        CHECK(close_rel(scaled, reference, 1e-9));
    }
}

TEST_CASE("kmeans separates well-separated clusters exactly", "[hmm]") {
    const auto p = dcss::kmeans_init(window_of({0.0, 0.0, 0.0, 10.0, 10.0, 10.0}));
    CHECK(p.mu0 == Catch::Approx(0.0).margin(1e-12));
    CHECK(p.mu1 == Catch::Approx(10.0).margin(1e-12));
    CHECK(p.mu0 <= p.mu1);
}

TEST_CASE("kmeans matches the exhaustive sorted-split oracle", "[hmm]") {
    RngStream rng(106, 0);
    ModelParams truth;
    truth.mu0 = 12.0;
    truth.var0 = 24.0;
    truth.mu1 = 30.0;
    truth.var1 = 48.0;
    truth.alpha = 0.1;
    truth.beta = 0.1;
    const ObservationWindow w = sample_from_model(truth, 150, rng);
    const auto fit = dcss::kmeans_init(w);

    // exhaustive exact 2-means: best split point of the sorted samples
    std::vector<double> xs = w.samples;
    std::sort(xs.begin(), xs.end());
    std::vector<double> prefix(xs.size() + 1, 0.0), prefix_sq(xs.size() + 1, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        prefix[i + 1] = prefix[i] + xs[i];
        prefix_sq[i + 1] = prefix_sq[i] + xs[i] * xs[i];
    }
    double best_sse = std::numeric_limits<double>::infinity();
    double best_m0 = 0.0, best_m1 = 0.0;
    for (std::size_t split = 1; split < xs.size(); ++split) {
        const double n0 = split, n1 = xs.size() - split;
        const double s0 = prefix[split], s1 = prefix.back() - prefix[split];
        const double q0 = prefix_sq[split], q1 = prefix_sq.back() - prefix_sq[split];
        const double sse = (q0 - s0 * s0 / n0) + (q1 - s1 * s1 / n1);
        if (sse < best_sse) {
            best_sse = sse;
            best_m0 = s0 / n0;
            best_m1 = s1 / n1;
        }
    }

    // Lloyd from min/max seeds lands on the exact optimum here
    CHECK(fit.mu0 == Catch::Approx(best_m0).epsilon(0.005));
    CHECK(fit.mu1 == Catch::Approx(best_m1).epsilon(0.005));
    double lloyd_sse = 0.0;
    for (double x : w.samples) {
        const double d0 = (x - fit.mu0) * (x - fit.mu0);
        const double d1 = (x - fit.mu1) * (x - fit.mu1);
        lloyd_sse += std::min(d0, d1);
    }
    CHECK(lloyd_sse <= best_sse * 1.001);
    // and the recovered means stay in the neighborhood of the truth
    CHECK(std::abs(fit.mu0 - truth.mu0) < 0.15 * truth.mu0);
    CHECK(std::abs(fit.mu1 - truth.mu1) < 0.15 * truth.mu1);
}

TEST_CASE("kmeans rejects degenerate input", "[hmm]") {
    CHECK_THROWS_AS(dcss::kmeans_init(window_of({3.0, 3.0, 3.0, 3.0})),
                    dcss::degenerate_input_error);
    CHECK_THROWS_AS(dcss::kmeans_init(window_of({3.0})), dcss::degenerate_input_error);
}

TEST_CASE("kmeans ordering holds on random input", "[hmm]") {
    RngStream rng(107, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs(30);
        for (auto& v : xs) v = rng.uniform() * 50.0;
        const auto p = dcss::kmeans_init(window_of(std::move(xs)));
        CHECK(p.mu0 <= p.mu1);
    }
}

TEST_CASE("transition grid search recovers the generating rates", "[hmm]") {
    RngStream rng(109, 0);
    ModelParams truth;
    truth.mu0 = 0.0;
    truth.var0 = 1.0;
    truth.mu1 = 12.0;
    truth.var1 = 1.5;
    truth.alpha = 0.1;
    truth.beta = 0.1;
    const ObservationWindow w = sample_from_model(truth, 150, rng);
    const auto [a, b] = dcss::grid_init_transitions(w, truth);
    CHECK(a == Catch::Approx(0.1));
    CHECK(b == Catch::Approx(0.1));
    CHECK(dcss::transition_grid().size() == 9);  // 9 x 9 = 81 evaluations

    // independent argmax over the same grid through the public forward pass
    double best = -std::numeric_limits<double>::infinity();
    double ba = 0, bb = 0;
    for (double ga : dcss::transition_grid())
        for (double gb : dcss::transition_grid()) {
            ModelParams p = truth;
            p.alpha = ga;
            p.beta = gb;
            const double ll = dcss::forward_pass(w, p).loglik;
            if (ll > best) {
                best = ll;
                ba = ga;
                bb = gb;
            }
        }
    CHECK(a == ba);
    CHECK(b == bb);
}

TEST_CASE("m_step with hard responsibilities is exact for the emissions", "[hmm]") {
    const std::vector<double> xs{1.0, 2.0, 9.0, 11.0, 1.5};
    const StateVector s{0, 0, 1, 1, 0};
    dcss::PosteriorMarginals m;
    m.gamma.resize(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k)
        m.gamma[k] = {s[k] == 0 ? 1.0 : 0.0, s[k] == 1 ? 1.0 : 0.0};
    m.xi.resize(xs.size() - 1);
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        m.xi[k] = {};
        m.xi[k][s[k + 1]][s[k]] = 1.0;
    }
    const auto p = dcss::m_step(window_of(xs), m);
    CHECK(p.mu0 == Catch::Approx(1.5));            // mean of {1, 2, 1.5}
    CHECK(p.mu1 == Catch::Approx(10.0));           // mean of {9, 11}
    CHECK(p.var0 == Catch::Approx((0.25 + 0.25 + 0.0) / 3.0));
    CHECK(p.var1 == Catch::Approx(1.0));
    // transitions track the empirical frequencies (0.5 both ways here) up to
    // the O(1/D) stationary-prior correction
    CHECK(p.alpha == Catch::Approx(0.5).margin(0.15));
    CHECK(p.beta == Catch::Approx(0.5).margin(0.15));
}

TEST_CASE("m_step transitions maximize the stationary-prior objective", "[hmm]") {
    // brute-force oracle: dense grid search over (alpha, beta) of the
    // transition + first-state terms of the expected log-likelihood
    RngStream rng(120, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const ModelParams p = random_params(rng);
        const ObservationWindow w = sample_from_model(p, 60, rng);
        auto fb = dcss::forward_pass(w, p);
        dcss::backward_pass(w, p, fb);
        const auto marg = dcss::posterior_marginals(fb, p);
        const auto next = dcss::m_step(w, marg, &p);

        double n01 = 0, n11 = 0, n10 = 0, n00 = 0;
        for (const auto& x : marg.xi) {
            n01 += x[0][1];
            n11 += x[1][1];
            n10 += x[1][0];
            n00 += x[0][0];
        }
        auto objective = [&](double a, double b) {
            return (n01 + marg.gamma[0][0]) * std::log(a) + n11 * std::log(1.0 - a) +
                   (n10 + marg.gamma[0][1]) * std::log(b) + n00 * std::log(1.0 - b) -
                   std::log(a + b);
        };
        double best = -std::numeric_limits<double>::infinity();
        for (int i = 1; i < 400; ++i)
            for (int j = 1; j < 400; ++j) {
                const double a = i / 400.0, b = j / 400.0;
                best = std::max(best, objective(a, b));
            }
        CHECK(objective(next.alpha, next.beta) >= best - 1e-6);
    }
}

TEST_CASE("transition estimates clamp at the boundary", "[hmm]") {
    // pairwise mass entirely on active-to-active transitions and an active
    // first step: the update for alpha has a zero numerator and lands on the
    // lower clamp, and beta on the upper one
    const std::vector<double> xs{10.0, 1.0, 10.0, 10.0};
    dcss::PosteriorMarginals m;
    m.gamma = {{0.0, 1.0}, {0.5, 0.5}, {0.0, 1.0}, {0.0, 1.0}};
    m.xi.resize(3);
    m.xi[0] = {};
    m.xi[0][1][1] = 1.0;
    m.xi[1] = {};
    m.xi[1][1][1] = 1.0;
    m.xi[2] = {};
    m.xi[2][1][1] = 1.0;
    const auto p = dcss::m_step(window_of(xs), m);
    CHECK(p.alpha == Catch::Approx(1e-4));          // zero numerator, clamped up
    CHECK(p.beta == Catch::Approx(1.0 - 1e-4));     // all mass toward active
}

TEST_CASE("m_step flags vanished components", "[hmm]") {
    dcss::PosteriorMarginals m;
    m.gamma = {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
    m.xi.resize(2);
    m.xi[0] = {};
    m.xi[0][0][0] = 1.0;
    m.xi[1] = {};
    m.xi[1][0][0] = 1.0;
    CHECK_THROWS_AS(dcss::m_step(window_of({1.0, 2.0, 3.0}), m),
                    dcss::degenerate_component_error);
}

TEST_CASE("m_step reorders components by mean", "[hmm]") {
    RngStream rng(109, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const ModelParams p = random_params(rng);
        const ObservationWindow w = sample_from_model(p, 80, rng);
        auto fb = dcss::forward_pass(w, p);
        dcss::backward_pass(w, p, fb);
        const auto next = dcss::m_step(w, dcss::posterior_marginals(fb, p));
        CHECK(next.mu0 <= next.mu1);
        CHECK(next.var0 > 0.0);
        CHECK(next.var1 > 0.0);
        CHECK(next.alpha >= 1e-4);
        CHECK(next.alpha <= 1.0 - 1e-4);
    }
}

TEST_CASE("EM log-likelihood never decreases", "[hmm][slow]") {
    RngStream rng(110, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams truth = random_params(rng);
        const ObservationWindow w = sample_from_model(truth, 150, rng);
        dcss::ModelParams init;
        try {
            init = dcss::kmeans_init(w);
        } catch (const dcss::degenerate_input_error&) {
            continue;
        }
        const auto [a, b] = dcss::grid_init_transitions(w, init);
        init.alpha = a;
        init.beta = b;
        const auto res = dcss::run_em(w, init, 1e-6, 200);
        for (std::size_t k = 1; k < res.loglik_trace.size(); ++k)
            CHECK(res.loglik_trace[k] >= res.loglik_trace[k - 1] - 1e-8);
    }
}

TEST_CASE("EM started at the truth stays put", "[hmm]") {
    RngStream rng(111, 0);
    ModelParams truth;
    truth.mu0 = 0.0;
    truth.var0 = 1.0;
    truth.mu1 = 20.0;
    truth.var1 = 1.0;
    truth.alpha = 0.1;
    truth.beta = 0.1;
    const ObservationWindow w = sample_from_model(truth, 150, rng);
    const auto res = dcss::run_em(w, truth, 1e-6, 200);
    CHECK(res.converged);
    CHECK(res.iterations <= 5);
}

TEST_CASE("zero-iteration EM returns the initializer unchanged", "[hmm]") {
    RngStream rng(112, 0);
    const ModelParams p = random_params(rng);
    const ObservationWindow w = sample_from_model(p, 30, rng);
    const auto res = dcss::run_em(w, p, 1e-6, 0);
    CHECK(res.loglik_trace.empty());
    CHECK(res.iterations == 0);
    CHECK(res.params.mu0 == p.mu0);
    CHECK(res.params.beta == p.beta);
}

TEST_CASE("EM recovers the transition rates from averaged windows", "[hmm][slow]") {
    // windows averaged over 11 independent sensors, mirroring converged
    // neighborhood averaging
    dcss::ChannelConfig cfg;
    cfg.samples_per_interval = 12;
    cfg.noise_power = 1.0;
    cfg.snr_db = -3.0;
    cfg.alpha = 0.1;
    cfg.beta = 0.1;
    const int n_su = 11, d = 150, trials = 200;
    std::vector<double> err_a, err_b, noise_err;
    for (int t = 0; t < trials; ++t) {
        RngStream rng_states(500 + t, 0);
        const StateVector s = dcss::simulate_pu_states(cfg, d, rng_states);
        ObservationWindow w;
        w.samples.assign(d, 0.0);
        for (int i = 0; i < n_su; ++i) {
            RngStream rng(500 + t, 1 + i);
            const auto wi = dcss::generate_window(cfg, s, rng);
            for (int k = 0; k < d; ++k) w.samples[k] += wi.samples[k] / n_su;
        }
        ModelParams init;
        try {
            init = dcss::kmeans_init(w);
        } catch (const dcss::degenerate_input_error&) {
            continue;
        }
        const auto [a, b] = dcss::grid_init_transitions(w, init);
        init.alpha = a;
        init.beta = b;
        try {
            const auto res = dcss::run_em(w, init, 1e-6, 200);
            err_a.push_back(std::abs(res.params.alpha - cfg.alpha));
            err_b.push_back(std::abs(res.params.beta - cfg.beta));
            noise_err.push_back(std::abs(
                dcss::estimate_noise_power(res.params, cfg.samples_per_interval) - cfg.noise_power));
        } catch (const dcss::degenerate_component_error&) {
        }
    }
    REQUIRE(err_a.size() > 150);
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    CHECK(median(err_a) <= 0.05);
    CHECK(median(err_b) <= 0.05);
    CHECK(median(noise_err) <= 0.1 * cfg.noise_power);
}

TEST_CASE("viterbi trivial cases", "[hmm]") {
    ModelParams p;
    p.mu0 = 0.0;
    p.var0 = 1.0;
    p.mu1 = 5.0;
    p.var1 = 1.0;
    p.alpha = 0.2;
    p.beta = 0.4;
    {
        const auto path = dcss::viterbi(window_of({4.8}), p);
        const double p1 = p.steady_state_p1();
        const int expect = std::log(p1) + p.emission_logpdf(4.8, 1) >
                                   std::log(1 - p1) + p.emission_logpdf(4.8, 0)
                               ? 1
                               : 0;
        CHECK(path[0] == expect);
    }
    {
        // indistinguishable emissions, sticky transitions: constant path
        ModelParams q = p;
        q.mu1 = q.mu0;
        q.var1 = q.var0;
        q.alpha = 0.01;
        q.beta = 0.01;
        RngStream rng(113, 0);
        std::vector<double> xs(40);
        for (auto& v : xs) v = rng.normal(0.0, 1.0);
        const auto path = dcss::viterbi(window_of(std::move(xs)), q);
        for (auto v : path) CHECK(v == path[0]);
    }
}

TEST_CASE("label swap yields the complementary viterbi path", "[hmm]") {
    RngStream rng(114, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams p = random_params(rng);
        const ObservationWindow w = sample_from_model(p, 30, rng);
        ModelParams swapped = p;
        std::swap(swapped.mu0, swapped.mu1);
        std::swap(swapped.var0, swapped.var1);
        std::swap(swapped.alpha, swapped.beta);
        const auto a = dcss::viterbi(w, p);
        const auto b = dcss::viterbi(w, swapped);
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == 1 - b[k]);
    }
}

TEST_CASE("noise power recovery from the idle mean", "[hmm]") {
    ModelParams p;
    p.mu0 = 12.0;
    CHECK(dcss::estimate_noise_power(p, 12) == Catch::Approx(1.0));
    p.mu0 = 24.0;
    CHECK(dcss::estimate_noise_power(p, 12) == Catch::Approx(2.0));
    CHECK_THROWS_AS(dcss::estimate_noise_power(p, 0), std::domain_error);
}

TEST_CASE("estimation pipeline reduces to the oracle on separated data", "[hmm]") {
    dcss::ChannelConfig cfg;
    cfg.samples_per_interval = 100;
    cfg.noise_power = 1.0;
    cfg.snr_db = 10.0;
    cfg.alpha = 0.1;
    cfg.beta = 0.1;
    RngStream rng_states(115, 0);
    const StateVector s = dcss::simulate_pu_states(cfg, 150, rng_states);
    RngStream rng(115, 1);
    const ObservationWindow w = dcss::generate_window(cfg, s, rng);

    const auto ed = dcss::ed_moments(cfg);
    const double lambda = 0.5 * (ed.mu0 + ed.mu1);
    const auto res = dcss::em_mwsed_detect(w, {}, dcss::WeightKind::uniform, lambda);
    REQUIRE_FALSE(res.fallback);
    CHECK(res.states == s);
    const double oracle = dcss::mwsed_statistic(w, s, dcss::WeightKind::uniform);
    CHECK(res.statistic == Catch::Approx(oracle));
    CHECK(res.decision == dcss::decide(oracle, lambda));
}

TEST_CASE("degenerate windows fall back to the present sample", "[hmm]") {
    ObservationWindow w = window_of({5.0, 5.0, 5.0, 5.0, 12.0});
    w.samples.assign(5, 7.0);  // all identical: k-means cannot split
    const auto res = dcss::em_mwsed_detect(w, {}, dcss::WeightKind::uniform, 6.0);
    CHECK(res.fallback);
    CHECK(res.statistic == Catch::Approx(7.0));
    CHECK(res.decision == dcss::Hypothesis::active);
}
