#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcss/channel.hpp"
#include "dcss/config.hpp"
#include "dcss/detectors.hpp"
#include "dcss/errors.hpp"
#include "dcss/hmm.hpp"

namespace dcss {

enum class DetectorKind : int { ed = 0, wsed, ied, msed, mwsed_oracle, em_mwsed };
constexpr int detector_kind_count = 6;

struct DetectorSpec {
    DetectorKind kind = DetectorKind::ed;
    int wsed_past_samples = 3;                        // WSED: past samples on top of the present one
    int msed_slots = 2;                               // msED: number of recent slots compared
    WeightKind mwsed_scheme = WeightKind::uniform;    // oracle statistic weights
    WeightKind em_scheme = WeightKind::exponential;   // estimated-state statistic weights
};

inline std::string detector_name(DetectorKind k) {
    switch (k) {
        case DetectorKind::ed: return "ed";
        case DetectorKind::wsed: return "wsed";
        case DetectorKind::ied: return "ied";
        case DetectorKind::msed: return "msed";
        case DetectorKind::mwsed_oracle: return "mwsed";
        case DetectorKind::em_mwsed: return "em-mwsed";
    }
    return "?";
}

inline DetectorKind detector_from_name(const std::string& name) {
    for (int i = 0; i < detector_kind_count; ++i)
        if (detector_name(static_cast<DetectorKind>(i)) == name)
            return static_cast<DetectorKind>(i);
    throw config_error("unknown detector '" + name + "'");
}

inline WeightKind weight_kind_from_name(const std::string& name) {
    if (name == "uniform") return WeightKind::uniform;
    if (name == "exponential") return WeightKind::exponential;
    throw config_error("unknown weight scheme '" + name + "'");
}

// Everything one Monte Carlo experiment needs; a run is fully determined by
// (scenario, master_seed).
struct ScenarioConfig {
    std::string id = "scenario";
    int n_sus = 10;
    double connectivity = 0.2;
    ChannelConfig channel;
    int window_length = 150;
    std::vector<DetectorSpec> detectors;
    long long trials = 2000;
    long long calibration_trials = 0;  // 0: same as trials
    std::vector<double> pf_grid;
    std::uint64_t master_seed = 1;
    double consensus_tol = 0.01;
    int consensus_max_iter = 100000;
    EmSettings em;
    int workers = 1;

    // sweep axes for the surface / convergence / Pd-vs-SNR experiments
    std::vector<double> snr_list;
    std::vector<long long> l_list;
    std::vector<long long> dist_c_list = {4, 20, 90};
    double pd_target_pf = 0.1;

    long long effective_calibration_trials() const {
        return calibration_trials > 0 ? calibration_trials : trials;
    }

    const DetectorSpec* find(DetectorKind kind) const {
        for (const auto& d : detectors)
            if (d.kind == kind) return &d;
        return nullptr;
    }

    void validate() const {
        channel.validate();
        if (n_sus < 1) throw config_error("scenario: n_sus must be >= 1");
        if (n_sus > 1 && !(connectivity > 0.0 && connectivity <= 1.0))
            throw config_error("scenario: connectivity must be in (0,1]");
        if (window_length < 1) throw config_error("scenario: window length must be >= 1");
        if (trials < 1) throw config_error("scenario: trials must be >= 1");
        if (!(consensus_tol > 0.0)) throw config_error("scenario: consensus tol must be positive");
        if (consensus_max_iter < 1) throw config_error("scenario: consensus max_iter must be >= 1");
        if (workers < 1) throw config_error("scenario: workers must be >= 1");
        for (const auto& d : detectors) {
            if (d.kind == DetectorKind::wsed && d.wsed_past_samples + 1 > window_length)
                throw config_error("scenario: wsed past samples exceed the window");
            if (d.kind == DetectorKind::msed && d.msed_slots > window_length)
                throw config_error("scenario: msed slots exceed the window");
        }
        for (double pf : pf_grid)
            if (!(pf > 0.0 && pf < 1.0))
                throw config_error("scenario: pf grid values must be in (0,1)");
    }

    // Applies "key = value" entries on top of the current values.
    void apply(const KeyValueConfig& kv) {
        id = kv.get_string("scenario.id", id);
        n_sus = static_cast<int>(kv.get_int("network.n_sus", n_sus));
        connectivity = kv.get_double("network.connectivity", connectivity);
        channel.samples_per_interval =
            static_cast<int>(kv.get_int("channel.samples_per_interval", channel.samples_per_interval));
        channel.noise_power = kv.get_double("channel.noise_power", channel.noise_power);
        channel.snr_db = kv.get_double("channel.snr_db", channel.snr_db);
        channel.alpha = kv.get_double("channel.alpha", channel.alpha);
        channel.beta = kv.get_double("channel.beta", channel.beta);
        window_length = static_cast<int>(kv.get_int("window.length", window_length));
        trials = kv.get_int("trials", trials);
        calibration_trials = kv.get_int("calibration.trials", calibration_trials);
        master_seed = kv.get_u64("seed", master_seed);
        consensus_tol = kv.get_double("consensus.tol", consensus_tol);
        consensus_max_iter = static_cast<int>(kv.get_int("consensus.max_iter", consensus_max_iter));
        em.tol = kv.get_double("em.tol", em.tol);
        em.max_iter = static_cast<int>(kv.get_int("em.max_iter", em.max_iter));
        workers = static_cast<int>(kv.get_int("workers", workers));
        pf_grid = kv.get_double_list("roc.pf_grid", pf_grid);
        snr_list = kv.get_double_list("sweep.snr_list", snr_list);
        l_list = kv.get_int_list("sweep.l_list", l_list);
        dist_c_list = kv.get_int_list("dist.c_list", dist_c_list);
        pd_target_pf = kv.get_double("pd.target_pf", pd_target_pf);

        std::vector<std::string> names;
        for (const auto& d : detectors) names.push_back(detector_name(d.kind));
        names = kv.get_string_list("detectors", names);
        const int wsed_past = static_cast<int>(kv.get_int("wsed.past_samples", 3));
        const int msed_slots = static_cast<int>(kv.get_int("msed.slots", 2));
        const WeightKind mwsed_scheme =
            weight_kind_from_name(kv.get_string("mwsed.weights", "uniform"));
        const WeightKind em_scheme =
            weight_kind_from_name(kv.get_string("em_mwsed.weights", "exponential"));
        detectors.clear();
        for (const std::string& n : names) {
            DetectorSpec spec;
            spec.kind = detector_from_name(n);
            spec.wsed_past_samples = wsed_past;
            spec.msed_slots = msed_slots;
            spec.mwsed_scheme = mwsed_scheme;
            spec.em_scheme = em_scheme;
            detectors.push_back(spec);
        }
    }
};

// Default false-alarm grid for ROC sweeps; denser at the low end where the
// curves are steep.
inline std::vector<double> default_pf_grid() {
    return {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1,  0.15, 0.2,  0.25, 0.3, 0.35, 0.4,
            0.45,  0.5,   0.55,  0.6,  0.65, 0.7,  0.75, 0.8,  0.85, 0.9,  0.95, 0.99};
}

}  // namespace dcss
