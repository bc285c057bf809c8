#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dcss/channel.hpp"
#include "dcss/errors.hpp"
#include "dcss/stats.hpp"

namespace dcss {

enum class Hypothesis : int { idle = 0, active = 1 };

// Decision rule shared by every threshold detector: active iff the statistic
// reaches the threshold.
inline Hypothesis decide(double statistic, double lambda) {
    return statistic >= lambda ? Hypothesis::active : Hypothesis::idle;
}

enum class WeightKind { uniform, exponential };

// Normalized weights over `count` window positions ending at the newest
// sample. Exponential weights grow toward the present index; computed in a
// shifted form so long windows cannot overflow.
inline std::vector<double> make_weights(WeightKind kind, std::size_t count) {
    if (count == 0) throw std::domain_error("make_weights: empty selection");
    std::vector<double> w(count);
    if (kind == WeightKind::uniform) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(count));
        return w;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        w[k] = std::exp(static_cast<double>(k) - static_cast<double>(count - 1));
        sum += w[k];
    }
    for (double& x : w) x /= sum;
    return w;
}

// Weighted sum of the `n_samples` most recent window entries with
// exponential weights (newest sample weighted most).
inline double wsed_statistic(const ObservationWindow& window, std::size_t n_samples) {
    const std::size_t d = window.size();
    if (d == 0) throw std::domain_error("wsed_statistic: empty window");
    if (n_samples < 1 || n_samples > d)
        throw std::domain_error("wsed_statistic: n_samples out of range");
    const std::vector<double> w = make_weights(WeightKind::exponential, n_samples);
    double s = 0.0;
    for (std::size_t k = 0; k < n_samples; ++k) s += w[k] * window.samples[d - n_samples + k];
    return s;
}

// Window indices whose state matches the present state, oldest first. The
// present index always matches itself, so the selection is never empty.
inline std::vector<std::size_t> matched_indices(const StateVector& states) {
    if (states.empty()) throw std::domain_error("matched_indices: empty state vector");
    const std::uint8_t present = states.back();
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < states.size(); ++k)
        if (states[k] == present) idx.push_back(k);
    return idx;
}

// Scheme weights renormalized over a matched selection. For the exponential
// scheme the weight of selected window position p is proportional to e^p.
inline std::vector<double> selection_weights(WeightKind kind,
                                             const std::vector<std::size_t>& selected) {
    if (selected.empty()) throw std::domain_error("selection_weights: empty selection");
    std::vector<double> w(selected.size());
    if (kind == WeightKind::uniform) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(selected.size()));
        return w;
    }
    const double top = static_cast<double>(selected.back());
    double sum = 0.0;
    for (std::size_t k = 0; k < selected.size(); ++k) {
        w[k] = std::exp(static_cast<double>(selected[k]) - top);
        sum += w[k];
    }
    for (double& x : w) x /= sum;
    return w;
}

// Test statistic that aggregates only the window samples whose PU state
// matches the present one.
inline double mwsed_statistic(const ObservationWindow& window, const StateVector& states,
                              WeightKind scheme) {
    if (states.size() != window.size())
        throw std::domain_error("mwsed_statistic: state/window length mismatch");
    const std::vector<std::size_t> sel = matched_indices(states);
    const std::vector<double> w = selection_weights(scheme, sel);
    double t = 0.0;
    for (std::size_t k = 0; k < sel.size(); ++k) t += w[k] * window.samples[sel[k]];
    return t;
}

struct MwsedMoments {
    double m0 = 0.0;
    double v0sq = 0.0;
    double m1 = 0.0;
    double v1sq = 0.0;
};

// Gaussian-approximation moments of the matched-sample statistic for a given
// normalized weight vector: means are unchanged, variances shrink by the sum
// of squared weights.
inline MwsedMoments mwsed_moments(const std::vector<double>& weights, const ChannelConfig& cfg) {
    if (weights.empty()) throw std::domain_error("mwsed_moments: empty weights");
    double sum = 0.0, sum_sq = 0.0;
    for (double w : weights) {
        sum += w;
        sum_sq += w * w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::domain_error("mwsed_moments: weights must sum to 1");
    const EdMoments m = ed_moments(cfg);
    return {m.mu0, m.var0 * sum_sq, m.mu1, m.var1 * sum_sq};
}

inline OperatingPoint mwsed_operating_point(double lambda, const std::vector<double>& weights,
                                            const ChannelConfig& cfg) {
    const MwsedMoments m = mwsed_moments(weights, cfg);
    return {q_function((lambda - m.m0) / std::sqrt(m.v0sq)),
            q_function((lambda - m.m1) / std::sqrt(m.v1sq)), lambda};
}

// Threshold achieving a target false-alarm probability for a statistic with
// idle-hypothesis mean m0 and standard deviation v0.
inline double threshold_for_pf(double target_pf, double m0, double v0) {
    if (!(target_pf > 0.0 && target_pf < 1.0))
        throw std::domain_error("threshold_for_pf: target_pf must be in (0,1)");
    if (!(v0 > 0.0)) throw std::domain_error("threshold_for_pf: v0 must be positive");
    return m0 + v0 * q_inverse(target_pf);
}

// Uniform average of the whole window (present and past samples).
inline double ied_statistic(const ObservationWindow& window) {
    if (window.size() == 0) throw std::domain_error("ied_statistic: empty window");
    double s = 0.0;
    for (double x : window.samples) s += x;
    return s / static_cast<double>(window.size());
}

// Multi-slot rule: active only if each of the K most recent samples reaches
// the threshold, i.e. the minimum over those slots is the effective statistic.
inline double msed_statistic(const ObservationWindow& window, std::size_t k_slots) {
    const std::size_t d = window.size();
    if (k_slots < 1 || k_slots > d) throw std::domain_error("msed_statistic: K out of range");
    double m = window.samples[d - 1];
    for (std::size_t k = 2; k <= k_slots; ++k) m = std::min(m, window.samples[d - k]);
    return m;
}

inline Hypothesis msed_decide(const ObservationWindow& window, std::size_t k_slots,
                              double lambda) {
    return decide(msed_statistic(window, k_slots), lambda);
}

}  // namespace dcss
