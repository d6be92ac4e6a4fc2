#ifndef EMFLEET_SYNTH_HPP
#define EMFLEET_SYNTH_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emfleet/telemetry.hpp"

namespace emfleet {

struct GenerationConfig {
    std::string label;
    std::size_t population = 0;       // >= 2
    double mean_components = 1.0;
    double stdev_components = 0.0;    // >= 0
};

// Latent stress intensities of one workload, each in [0, 1].
struct StimulusProfile {
    double retention = 0.0;
    double write = 0.0;
    double read = 0.0;
};

struct WorkloadConfig {
    std::string id;
    StimulusProfile profile;
};

struct WorkloadClassConfig {
    std::string name;
    std::vector<WorkloadConfig> workloads;
};

// Half-open step bands amplified by each stress axis; disjoint by default.
struct StimulusBands {
    std::size_t write_lo = 0, write_hi = 0;
    std::size_t read_lo = 0, read_hi = 0;
    std::size_t retention_lo = 0, retention_hi = 0;
    double max_gain = 3.0;  // multiplier at intensity 1.0
};

struct InjectionConfig {
    enum class Mode { persistent, last_checkpoint };
    double fraction = 0.005;       // (0, 0.2]
    double boost = 8.0;            // > 1
    std::size_t window_lo = 0;     // [window_lo, window_hi) within [0, d)
    std::size_t window_hi = 0;
    Mode mode = Mode::persistent;
};

struct FleetConfig {
    std::uint64_t seed = 1;
    std::size_t d = 37;              // >= 2
    std::size_t checkpoints = 1;     // >= 1
    double base_rate = 50.0;         // mean step-0 activations per component per checkpoint
    double depth_decay = 0.35;       // per-step exponential rarity of deeper steps
    double dispersion = 10.0;        // negative-binomial size parameter, > 0
    std::vector<GenerationConfig> generations;
    std::vector<WorkloadClassConfig> workload_classes;
    StimulusBands bands;
    std::optional<InjectionConfig> injection;
};

struct InjectedSample {
    std::string sample_id;
    std::vector<std::size_t> steps;  // boosted step indices
    double boost = 1.0;
    bool persistent = true;
};

// Validation labels the real fleet lacks.
struct GroundTruth {
    std::vector<InjectedSample> injected;
    std::map<std::string, StimulusProfile> workload_intensities;  // by workload_id
};

// Throws ValidationError naming the offending field.
void validate(const FleetConfig& config);

// Per-step rate multiplier for one workload profile; 1.0 outside every band
// and for all-zero intensities.
double stimulus_multiplier(const StimulusBands& bands, const StimulusProfile& profile,
                           std::size_t step);

// Deterministic for a given config: per SSD, a Gaussian component count
// (rounded, clamped >= 1); per step, negative-binomial activation increments
// with mean base_rate * exp(-depth_decay * step) * stimulus * components,
// accumulated across checkpoints. Applies config.injection when present.
std::pair<FleetDataset, GroundTruth> generate_fleet(const FleetConfig& config);

// Selects ceil(fraction * #devices) devices uniformly (seeded) and multiplies
// their counts in [window_lo, window_hi) by boost: at every checkpoint in
// persistent mode, at the final checkpoint only in last_checkpoint mode.
std::pair<FleetDataset, GroundTruth> inject_extrinsic(const FleetDataset& dataset,
                                                      const InjectionConfig& injection,
                                                      std::uint64_t seed);

nlohmann::json to_json(const FleetConfig& config);
FleetConfig fleet_config_from_json(const nlohmann::json& doc);
FleetConfig load_fleet_config(const std::filesystem::path& path);

nlohmann::json to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const nlohmann::json& doc);

// Bundled presets. "table1" reproduces the profiled-population shape
// (906 + 4027 + 3378 SSDs, ~0.5M memory components, 4 workload classes,
// 3 checkpoints). "three-axis" is a 16-workload factorial design over the
// retention/write/read stress axes for representation-learning validation.
FleetConfig table1_preset(std::uint64_t seed = 1);
FleetConfig three_axis_preset(std::uint64_t seed = 1);
std::optional<FleetConfig> preset_by_name(const std::string& name, std::uint64_t seed);

}  // namespace emfleet

#endif  // EMFLEET_SYNTH_HPP
