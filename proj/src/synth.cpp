#include "emfleet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "emfleet/errors.hpp"
#include "emfleet/rng.hpp"

namespace emfleet {

using nlohmann::json;

namespace {

// Stream tags keep the per-purpose substreams of one master seed apart.
enum StreamTag : std::uint64_t {
    kTagAssign = 0x61,
    kTagCounts = 0x62,
    kTagInject = 0x63,
};

std::int64_t draw_negative_binomial(CounterRng& rng, double mean, double dispersion) {
    if (mean <= 0.0) return 0;
    // Gamma-Poisson mixture: overdispersed counts with var = mean + mean^2/r.
    std::gamma_distribution<double> gamma(dispersion, mean / dispersion);
    const double lambda = gamma(rng);
    if (lambda <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> poisson(lambda);
    return poisson(rng);
}

void check(bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw ValidationError("config field '" + field + "': " + why);
}

void check_band(std::size_t lo, std::size_t hi, std::size_t d, const std::string& field) {
    check(lo <= hi, field, "band start exceeds band end");
    check(hi <= d, field, "band end exceeds step count d");
}

void check_intensity(double v, const std::string& field) {
    check(v >= 0.0 && v <= 1.0, field, "intensity must be in [0, 1]");
}

}  // namespace

void validate(const FleetConfig& config) {
    check(config.d >= 2, "d", "need at least 2 EM steps");
    check(config.checkpoints >= 1, "checkpoints", "need at least 1 checkpoint");
    check(config.base_rate > 0.0, "base_rate", "must be positive");
    check(config.depth_decay >= 0.0, "depth_decay", "must be non-negative");
    check(config.dispersion > 0.0, "dispersion", "must be positive");
    check(!config.generations.empty(), "generations", "need at least one generation");
    std::set<std::string> labels;
    for (const GenerationConfig& g : config.generations) {
        check(!g.label.empty(), "generations.label", "must be non-empty");
        check(labels.insert(g.label).second, "generations.label",
              "duplicate label '" + g.label + "'");
        check(g.population >= 2, "generations.population",
              "'" + g.label + "' must have population >= 2");
        check(g.mean_components >= 1.0, "generations.mean_components",
              "'" + g.label + "' must be >= 1");
        check(g.stdev_components >= 0.0, "generations.stdev_components",
              "'" + g.label + "' must be >= 0");
    }
    check(!config.workload_classes.empty(), "workload_classes", "need at least one class");
    std::set<std::string> ids;
    for (const WorkloadClassConfig& c : config.workload_classes) {
        check(!c.name.empty(), "workload_classes.name", "must be non-empty");
        check(!c.workloads.empty(), "workload_classes.workloads",
              "class '" + c.name + "' needs at least one workload");
        for (const WorkloadConfig& w : c.workloads) {
            check(!w.id.empty(), "workloads.id", "must be non-empty");
            check(ids.insert(w.id).second, "workloads.id", "duplicate id '" + w.id + "'");
            check_intensity(w.profile.retention, "workloads.retention");
            check_intensity(w.profile.write, "workloads.write");
            check_intensity(w.profile.read, "workloads.read");
        }
    }
    check_band(config.bands.write_lo, config.bands.write_hi, config.d, "stimulus.write_band");
    check_band(config.bands.read_lo, config.bands.read_hi, config.d, "stimulus.read_band");
    check_band(config.bands.retention_lo, config.bands.retention_hi, config.d,
               "stimulus.retention_band");
    check(config.bands.max_gain >= 1.0, "stimulus.max_gain", "must be >= 1");
    if (config.injection) {
        const InjectionConfig& inj = *config.injection;
        check(inj.fraction > 0.0 && inj.fraction <= 0.2, "injection.fraction",
              "must be in (0, 0.2]");
        check(inj.boost > 1.0, "injection.boost", "must be > 1");
        check(inj.window_lo < inj.window_hi, "injection.window", "window must be non-empty");
        check(inj.window_hi <= config.d, "injection.window", "window end exceeds d");
    }
}

double stimulus_multiplier(const StimulusBands& bands, const StimulusProfile& profile,
                           std::size_t step) {
    double m = 1.0;
    const double gain = bands.max_gain - 1.0;
    if (step >= bands.write_lo && step < bands.write_hi) m *= 1.0 + profile.write * gain;
    if (step >= bands.read_lo && step < bands.read_hi) m *= 1.0 + profile.read * gain;
    if (step >= bands.retention_lo && step < bands.retention_hi)
        m *= 1.0 + profile.retention * gain;
    return m;
}

std::pair<FleetDataset, GroundTruth> generate_fleet(const FleetConfig& config) {
    validate(config);

    // Flat workload list for the uniform (class, workload) assignment.
    struct Slot {
        const WorkloadClassConfig* cls;
        const WorkloadConfig* wl;
    };
    std::vector<Slot> slots;
    for (const WorkloadClassConfig& c : config.workload_classes)
        for (const WorkloadConfig& w : c.workloads) slots.push_back({&c, &w});

    GroundTruth truth;
    for (const Slot& s : slots) truth.workload_intensities[s.wl->id] = s.wl->profile;

    std::vector<SampleRecord> records;
    for (std::size_t gi = 0; gi < config.generations.size(); ++gi) {
        const GenerationConfig& gen = config.generations[gi];
        for (std::size_t i = 0; i < gen.population; ++i) {
            CounterRng assign{config.seed, kTagAssign, gi, i};
            std::int64_t components = 1;
            if (gen.stdev_components > 0.0) {
                std::normal_distribution<double> normal(gen.mean_components,
                                                       gen.stdev_components);
                components = std::max<std::int64_t>(1, std::llround(normal(assign)));
            } else {
                components = std::max<std::int64_t>(1, std::llround(gen.mean_components));
            }
            const Slot& slot = slots[assign() % slots.size()];

            char idbuf[64];
            std::snprintf(idbuf, sizeof(idbuf), "%s-%05zu", gen.label.c_str(), i);

            std::vector<std::int64_t> cumulative(config.d, 0);
            for (std::size_t cp = 0; cp < config.checkpoints; ++cp) {
                for (std::size_t j = 0; j < config.d; ++j) {
                    const double mean = config.base_rate *
                                        std::exp(-config.depth_decay * static_cast<double>(j)) *
                                        stimulus_multiplier(config.bands, slot.wl->profile, j) *
                                        static_cast<double>(components);
                    CounterRng stream{config.seed, kTagCounts, gi, i, j, cp};
                    cumulative[j] += draw_negative_binomial(stream, mean, config.dispersion);
                }
                SampleRecord r;
                r.sample_id = idbuf;
                r.generation = gen.label;
                r.workload_class = slot.cls->name;
                r.workload_id = slot.wl->id;
                r.checkpoint = static_cast<std::int64_t>(cp);
                r.component_count = components;
                r.steps = cumulative;
                records.push_back(std::move(r));
            }
        }
    }

    const json config_doc = to_json(config);
    FleetDataset dataset = make_dataset(
        std::move(records),
        {{"generator", "emfleet-synth/1"},
         {"seed", std::to_string(config.seed)},
         {"config", config_doc.dump()}});

    if (config.injection) {
        auto [injected_ds, injected_truth] =
            inject_extrinsic(dataset, *config.injection, config.seed);
        injected_truth.workload_intensities = truth.workload_intensities;
        return {std::move(injected_ds), std::move(injected_truth)};
    }
    return {std::move(dataset), std::move(truth)};
}

std::pair<FleetDataset, GroundTruth> inject_extrinsic(const FleetDataset& dataset,
                                                      const InjectionConfig& injection,
                                                      std::uint64_t seed) {
    if (!(injection.fraction > 0.0 && injection.fraction <= 0.2))
        throw ValidationError("injection fraction must be in (0, 0.2]");
    if (!(injection.boost > 1.0)) throw ValidationError("injection boost must be > 1");
    if (injection.window_lo >= injection.window_hi || injection.window_hi > dataset.d)
        throw ValidationError("injection window outside [0, d)");

    // Devices in first-appearance order, then a seeded partial shuffle.
    std::vector<std::string> ids;
    std::set<std::string> seen;
    std::int64_t last_checkpoint = 0;
    for (const SampleRecord& r : dataset.records) {
        if (seen.insert(r.sample_id).second) ids.push_back(r.sample_id);
        last_checkpoint = std::max(last_checkpoint, r.checkpoint);
    }
    const std::size_t count = static_cast<std::size_t>(
        std::ceil(injection.fraction * static_cast<double>(ids.size())));
    CounterRng rng{seed, kTagInject};
    for (std::size_t i = 0; i < count && i + 1 < ids.size(); ++i)
        std::swap(ids[i], ids[i + rng() % (ids.size() - i)]);
    const std::set<std::string> chosen(ids.begin(), ids.begin() + count);

    std::vector<std::size_t> window;
    for (std::size_t j = injection.window_lo; j < injection.window_hi; ++j)
        window.push_back(j);
    const bool persistent = injection.mode == InjectionConfig::Mode::persistent;

    std::vector<SampleRecord> records = dataset.records;
    for (SampleRecord& r : records) {
        if (!chosen.count(r.sample_id)) continue;
        if (!persistent && r.checkpoint != last_checkpoint) continue;
        for (const std::size_t j : window)
            r.steps[j] = std::llround(static_cast<double>(r.steps[j]) * injection.boost);
    }

    GroundTruth truth;
    for (const std::string& id : chosen)
        truth.injected.push_back({id, window, injection.boost, persistent});
    std::sort(truth.injected.begin(), truth.injected.end(),
              [](const InjectedSample& a, const InjectedSample& b) {
                  return a.sample_id < b.sample_id;
              });

    std::map<std::string, std::string> provenance = dataset.provenance;
    provenance["injection"] =
        json{{"fraction", injection.fraction},
             {"boost", injection.boost},
             {"window", {injection.window_lo, injection.window_hi}},
             {"mode", persistent ? "persistent" : "last_checkpoint"}}
            .dump();
    return {make_dataset(std::move(records), std::move(provenance)), std::move(truth)};
}

json to_json(const FleetConfig& config) {
    json doc;
    doc["schema_version"] = 1;
    doc["seed"] = config.seed;
    doc["d"] = config.d;
    doc["checkpoints"] = config.checkpoints;
    doc["base_rate"] = config.base_rate;
    doc["depth_decay"] = config.depth_decay;
    doc["dispersion"] = config.dispersion;
    json gens = json::array();
    for (const GenerationConfig& g : config.generations)
        gens.push_back({{"label", g.label},
                        {"population", g.population},
                        {"mean_components", g.mean_components},
                        {"stdev_components", g.stdev_components}});
    doc["generations"] = std::move(gens);
    json classes = json::array();
    for (const WorkloadClassConfig& c : config.workload_classes) {
        json wls = json::array();
        for (const WorkloadConfig& w : c.workloads)
            wls.push_back({{"id", w.id},
                           {"retention", w.profile.retention},
                           {"write", w.profile.write},
                           {"read", w.profile.read}});
        classes.push_back({{"name", c.name}, {"workloads", std::move(wls)}});
    }
    doc["workload_classes"] = std::move(classes);
    doc["stimulus"] = {{"write_band", {config.bands.write_lo, config.bands.write_hi}},
                       {"read_band", {config.bands.read_lo, config.bands.read_hi}},
                       {"retention_band",
                        {config.bands.retention_lo, config.bands.retention_hi}},
                       {"max_gain", config.bands.max_gain}};
    if (config.injection) {
        const InjectionConfig& inj = *config.injection;
        doc["injection"] = {
            {"fraction", inj.fraction},
            {"boost", inj.boost},
            {"window", {inj.window_lo, inj.window_hi}},
            {"mode",
             inj.mode == InjectionConfig::Mode::persistent ? "persistent" : "last_checkpoint"}};
    }
    return doc;
}

namespace {

template <typename T>
T get_field(const json& doc, const std::string& field) {
    if (!doc.contains(field)) throw ValidationError("config field '" + field + "': missing");
    try {
        return doc.at(field).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("config field '" + field + "': wrong type");
    }
}

std::pair<std::size_t, std::size_t> get_band(const json& doc, const std::string& field) {
    const auto v = get_field<std::vector<std::size_t>>(doc, field);
    if (v.size() != 2) throw ValidationError("config field '" + field + "': expected [lo, hi]");
    return {v[0], v[1]};
}

}  // namespace

FleetConfig fleet_config_from_json(const json& doc) {
    FleetConfig config;
    config.seed = get_field<std::uint64_t>(doc, "seed");
    config.d = get_field<std::size_t>(doc, "d");
    config.checkpoints = get_field<std::size_t>(doc, "checkpoints");
    config.base_rate = get_field<double>(doc, "base_rate");
    config.depth_decay = get_field<double>(doc, "depth_decay");
    config.dispersion = get_field<double>(doc, "dispersion");
    for (const json& g : get_field<json>(doc, "generations")) {
        GenerationConfig gen;
        gen.label = get_field<std::string>(g, "label");
        gen.population = get_field<std::size_t>(g, "population");
        gen.mean_components = get_field<double>(g, "mean_components");
        gen.stdev_components = get_field<double>(g, "stdev_components");
        config.generations.push_back(std::move(gen));
    }
    for (const json& c : get_field<json>(doc, "workload_classes")) {
        WorkloadClassConfig cls;
        cls.name = get_field<std::string>(c, "name");
        for (const json& w : get_field<json>(c, "workloads")) {
            WorkloadConfig wl;
            wl.id = get_field<std::string>(w, "id");
            wl.profile.retention = get_field<double>(w, "retention");
            wl.profile.write = get_field<double>(w, "write");
            wl.profile.read = get_field<double>(w, "read");
            cls.workloads.push_back(std::move(wl));
        }
        config.workload_classes.push_back(std::move(cls));
    }
    const json stim = get_field<json>(doc, "stimulus");
    std::tie(config.bands.write_lo, config.bands.write_hi) = get_band(stim, "write_band");
    std::tie(config.bands.read_lo, config.bands.read_hi) = get_band(stim, "read_band");
    std::tie(config.bands.retention_lo, config.bands.retention_hi) =
        get_band(stim, "retention_band");
    config.bands.max_gain = get_field<double>(stim, "max_gain");
    if (doc.contains("injection")) {
        const json inj = doc.at("injection");
        InjectionConfig ic;
        ic.fraction = get_field<double>(inj, "fraction");
        ic.boost = get_field<double>(inj, "boost");
        std::tie(ic.window_lo, ic.window_hi) = get_band(inj, "window");
        const std::string mode = get_field<std::string>(inj, "mode");
        if (mode == "persistent") {
            ic.mode = InjectionConfig::Mode::persistent;
        } else if (mode == "last_checkpoint") {
            ic.mode = InjectionConfig::Mode::last_checkpoint;
        } else {
            throw ValidationError("config field 'injection.mode': unknown mode '" + mode + "'");
        }
        config.injection = ic;
    }
    validate(config);
    return config;
}

FleetConfig load_fleet_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError("config " + path.string() + ": " + e.what());
    }
    return fleet_config_from_json(doc);
}

json to_json(const GroundTruth& truth) {
    json doc;
    json injected = json::array();
    for (const InjectedSample& s : truth.injected)
        injected.push_back({{"sample_id", s.sample_id},
                            {"steps", s.steps},
                            {"boost", s.boost},
                            {"persistent", s.persistent}});
    doc["injected"] = std::move(injected);
    json intensities;
    for (const auto& [id, profile] : truth.workload_intensities)
        intensities[id] = {{"retention", profile.retention},
                           {"write", profile.write},
                           {"read", profile.read}};
    doc["workload_intensities"] = std::move(intensities);
    return doc;
}

GroundTruth ground_truth_from_json(const json& doc) {
    try {
        GroundTruth truth;
        for (const json& s : doc.at("injected")) {
            InjectedSample sample;
            sample.sample_id = s.at("sample_id").get<std::string>();
            sample.steps = s.at("steps").get<std::vector<std::size_t>>();
            sample.boost = s.at("boost").get<double>();
            sample.persistent = s.at("persistent").get<bool>();
            truth.injected.push_back(std::move(sample));
        }
        for (const auto& [id, p] : doc.at("workload_intensities").items())
            truth.workload_intensities[id] = {p.at("retention").get<double>(),
                                              p.at("write").get<double>(),
                                              p.at("read").get<double>()};
        return truth;
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad ground-truth document: ") + e.what());
    }
}

FleetConfig table1_preset(std::uint64_t seed) {
    FleetConfig c;
    c.seed = seed;
    c.d = 37;
    c.checkpoints = 3;
    c.base_rate = 50.0;
    c.depth_decay = 0.15;
    c.dispersion = 10.0;
    // Tight component-count spread: a population is scored as one class, so
    // large global-scale variation would swamp genuinely anomalous devices.
    c.generations = {{"SSD-A", 906, 64.0, 3.0},
                     {"SSD-B", 4027, 60.0, 3.0},
                     {"SSD-C", 3378, 60.0, 3.0}};
    // Workloads within one class run near-identical stress mixes (they are
    // variants of the same profiling recipe); classes differ strongly from
    // each other. Each class forms its own scoring population, so only the
    // small within-class deltas touch the outlier statistics.
    c.workload_classes = {
        {"synthetic-jedec",
         {{"jedec-endurance", {0.60, 0.40, 0.20}},
          {"jedec-retention", {0.62, 0.40, 0.18}},
          {"jedec-mixed", {0.58, 0.42, 0.20}}}},
        {"emulation-ycsb",
         {{"ycsb-a", {0.10, 0.30, 0.70}},
          {"ycsb-b", {0.10, 0.28, 0.72}},
          {"ycsb-c", {0.08, 0.30, 0.68}}}},
        {"proprietary-stress",
         {{"stress-write", {0.40, 0.80, 0.20}},
          {"stress-retention", {0.42, 0.78, 0.20}},
          {"stress-thermal", {0.40, 0.82, 0.22}}}},
        {"mixed-production",
         {{"prod-oltp", {0.30, 0.30, 0.40}},
          {"prod-analytics", {0.28, 0.30, 0.42}},
          {"prod-archive", {0.30, 0.32, 0.38}}}}};
    // Steps 31..36 stay stimulus-neutral; the deep-step injection window
    // lives there so workload stimulus never masks an injected signature.
    c.bands = {0, 11, 11, 23, 23, 31, 3.0};
    return c;
}

FleetConfig three_axis_preset(std::uint64_t seed) {
    FleetConfig c;
    c.seed = seed;
    c.d = 37;
    c.checkpoints = 1;
    c.base_rate = 50.0;
    c.depth_decay = 0.15;
    c.dispersion = 10.0;
    c.generations = {{"SSD-X", 1600, 60.0, 8.0}};
    // 2-level full factorial over (retention, write, read), two replicate
    // workloads per cell: 16 groups with pairwise-orthogonal stress axes.
    WorkloadClassConfig cls;
    cls.name = "stress-matrix";
    for (const int r : {0, 1})
        for (const int w : {0, 1})
            for (const int rd : {0, 1})
                for (const char rep : {'a', 'b'}) {
                    char id[32];
                    std::snprintf(id, sizeof(id), "mix-r%dw%dd%d-%c", r, w, rd, rep);
                    cls.workloads.push_back(
                        {id, {static_cast<double>(r), static_cast<double>(w),
                              static_cast<double>(rd)}});
                }
    c.workload_classes = {std::move(cls)};
    // Bands of distinct widths partition all 37 steps, so each axis maps to
    // a separable block of the feature matrix.
    c.bands = {0, 11, 11, 23, 23, 37, 3.0};
    return c;
}

std::optional<FleetConfig> preset_by_name(const std::string& name, std::uint64_t seed) {
    if (name == "table1") return table1_preset(seed);
    if (name == "three-axis") return three_axis_preset(seed);
    return std::nullopt;
}

}  // namespace emfleet
