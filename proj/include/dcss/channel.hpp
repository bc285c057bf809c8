#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "dcss/errors.hpp"
#include "dcss/rng.hpp"
#include "dcss/stats.hpp"

namespace dcss {

// Primary-user state of one sensing interval: 0 = idle (H0), 1 = active (H1).
using StateVector = std::vector<std::uint8_t>;

// Physical parameters of the sensed channel and the primary-user Markov chain.
//   samples_per_interval  number of signal samples summed per energy statistic
//   noise_power           per-sample noise variance
//   snr_db                SU-level SNR in dB (aggregate over an interval)
//   alpha                 P(idle   at d | active at d-1)
//   beta                  P(active at d | idle   at d-1)
struct ChannelConfig {
    int samples_per_interval = 12;
    double noise_power = 1.0;
    double snr_db = -3.0;
    double alpha = 0.1;
    double beta = 0.1;

    double snr_linear() const { return std::pow(10.0, snr_db / 10.0); }

    void validate() const {
        if (samples_per_interval < 1) throw config_error("channel: samples_per_interval must be >= 1");
        if (!(noise_power > 0.0)) throw config_error("channel: noise_power must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("channel: alpha must be in (0,1)");
        if (!(beta > 0.0 && beta < 1.0)) throw config_error("channel: beta must be in (0,1)");
    }
};

// Length-D buffer of energy statistics; newest sample last. `truth` carries
// simulation ground-truth states when available.
struct ObservationWindow {
    std::vector<double> samples;
    std::optional<StateVector> truth;

    std::size_t size() const { return samples.size(); }
};

// Gaussian-approximation moments of the energy statistic under both
// hypotheses: mean/variance idle, mean/variance active.
struct EdMoments {
    double mu0 = 0.0;
    double var0 = 0.0;
    double mu1 = 0.0;
    double var1 = 0.0;
};

inline EdMoments ed_moments(const ChannelConfig& cfg) {
    const double l = static_cast<double>(cfg.samples_per_interval);
    const double s2 = cfg.noise_power;
    const double eta = cfg.snr_linear();
    return {l * s2, 2.0 * l * s2 * s2, (1.0 + eta) * l * s2, 2.0 * (1.0 + 2.0 * eta) * l * s2 * s2};
}

// (Pf, Pd) of a plain energy detector at threshold lambda, via the Gaussian
// approximation.
struct OperatingPoint {
    double pf = 0.0;
    double pd = 0.0;
    double threshold = 0.0;
};

inline OperatingPoint ed_operating_point(double lambda, const ChannelConfig& cfg) {
    const EdMoments m = ed_moments(cfg);
    return {q_function((lambda - m.mu0) / std::sqrt(m.var0)),
            q_function((lambda - m.mu1) / std::sqrt(m.var1)), lambda};
}

// Draws a PU state sequence of length d from the two-state chain. The first
// state follows the chain's stationary law Bernoulli(beta / (alpha + beta)).
// Accepts boundary transition probabilities (0 or 1) so absorbing and
// deterministic chains can be simulated directly.
inline StateVector simulate_pu_states(const ChannelConfig& cfg, std::size_t d, RngStream& rng) {
    if (d < 1) throw config_error("simulate_pu_states: window length must be >= 1");
    if (cfg.alpha < 0.0 || cfg.alpha > 1.0 || cfg.beta < 0.0 || cfg.beta > 1.0 ||
        cfg.alpha + cfg.beta <= 0.0)
        throw config_error("simulate_pu_states: invalid transition probabilities");
    StateVector s(d);
    s[0] = rng.bernoulli(cfg.beta / (cfg.alpha + cfg.beta)) ? 1 : 0;
    for (std::size_t k = 1; k < d; ++k) {
        const double p_active = s[k - 1] ? 1.0 - cfg.alpha : cfg.beta;
        s[k] = rng.bernoulli(p_active) ? 1 : 0;
    }
    return s;
}

// Draws one exact (non-approximated) energy statistic: a sum of L squared
// real Gaussian samples. Under H1 the constant signal amplitude satisfies
// a^2 = eta * noise_power, which reproduces the Gaussian-approximation
// moments (1+eta)L*sigma_n^2 and 2(1+2eta)L*sigma_n^4 exactly.
inline double generate_energy_sample(int state, const ChannelConfig& cfg, RngStream& rng) {
    const double sd = std::sqrt(cfg.noise_power);
    const double a = state ? std::sqrt(cfg.snr_linear() * cfg.noise_power) : 0.0;
    double sum = 0.0;
    for (int l = 0; l < cfg.samples_per_interval; ++l) {
        const double v = a + rng.normal(0.0, sd);
        sum += v * v;
    }
    return sum;
}

// Simulates a full observation window for one SU: one PU state per sensing
// interval, one energy statistic per interval.
inline ObservationWindow generate_window(const ChannelConfig& cfg, const StateVector& states,
                                         RngStream& rng) {
    ObservationWindow w;
    w.samples.reserve(states.size());
    for (std::uint8_t s : states) w.samples.push_back(generate_energy_sample(s, cfg, rng));
    w.truth = states;
    return w;
}

}  // namespace dcss
