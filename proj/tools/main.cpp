// emfleet: fleet telemetry simulation, outlier scoring, per-step
// explanation, checkpoint consistency and workload embedding, wired as one
// deterministic pipeline. Every subcommand writes a manifest.json next to
// its outputs; all randomness flows from the explicit seed.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emfleet/ecod.hpp"
#include "emfleet/errors.hpp"
#include "emfleet/represent.hpp"
#include "emfleet/scoring.hpp"
#include "emfleet/synth.hpp"
#include "emfleet/telemetry.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace emfleet;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

class ManifestWriter {
public:
    ManifestWriter(std::string command, fs::path out_dir)
        : command_(std::move(command)),
          out_dir_(std::move(out_dir)),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(out_dir_);
    }

    void set_seed(std::uint64_t seed) { seed_ = seed; }
    void add_input(const std::string& key, const std::string& value) { inputs_[key] = value; }
    void add_output(const fs::path& path) { outputs_.push_back(path.filename().string()); }

    void write() const {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        json doc;
        doc["command"] = command_;
        doc["config_hash"] = fnv1a(json(inputs_).dump());
        doc["inputs"] = inputs_;
        std::vector<std::string> outputs = outputs_;
        std::sort(outputs.begin(), outputs.end());
        doc["outputs"] = outputs;
        doc["seed"] = seed_;
        doc["tool_version"] = kToolVersion;
        doc["wall_time_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
        write_text(out_dir_ / "manifest.json", doc.dump(2) + "\n");
    }

private:
    std::string command_;
    fs::path out_dir_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
    std::uint64_t seed_ = 0;
    std::chrono::steady_clock::time_point start_;
};

std::string sanitize(const std::string& name) {
    std::string out = name;
    for (char& c : out)
        if (c == '/' || c == '\\' || c == ' ') c = '_';
    return out;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const std::string& config_path, const std::string& preset,
                 std::optional<std::uint64_t> seed, const std::string& out_dir,
                 const std::string& format_name) {
    FleetConfig config;
    if (!preset.empty()) {
        auto p = preset_by_name(preset, seed.value_or(1));
        if (!p) throw ValidationError("unknown preset '" + preset + "'");
        config = *p;
    } else if (!config_path.empty()) {
        config = load_fleet_config(config_path);
    } else {
        throw ValidationError("simulate needs --config or --preset");
    }
    if (seed) config.seed = *seed;
    validate(config);

    ManifestWriter manifest("simulate", out_dir);
    manifest.set_seed(config.seed);
    manifest.add_input("config", to_json(config).dump());
    manifest.add_input("format", format_name);

    const Format format = format_from_string(format_name);
    auto [dataset, truth] = generate_fleet(config);

    const fs::path dataset_path =
        fs::path(out_dir) / ("dataset." + std::string(format == Format::jsonl ? "jsonl" : "csv"));
    save_dataset(dataset, dataset_path, format);
    manifest.add_output(dataset_path);

    const fs::path truth_path = fs::path(out_dir) / "ground_truth.json";
    write_text(truth_path, to_json(truth).dump(2) + "\n");
    manifest.add_output(truth_path);

    manifest.write();
    std::cout << "wrote " << dataset.n() << " records (d=" << dataset.d << ") to "
              << dataset_path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// score

int cmd_score(const std::string& dataset_path, const std::string& format_name,
              std::optional<double> contamination, std::optional<double> absolute,
              const std::vector<double>& percentiles, std::size_t bins,
              const std::string& model_path, bool emit_models, const std::string& out_dir) {
    if (contamination && absolute)
        throw ValidationError("--contamination and --absolute are mutually exclusive");
    const Threshold threshold = absolute ? Threshold::absolute(*absolute)
                                         : Threshold::contamination(contamination.value_or(0.01));

    ManifestWriter manifest("score", out_dir);
    manifest.add_input("dataset", dataset_path);
    manifest.add_input("format", format_name);
    manifest.add_input("threshold",
                       (absolute ? "absolute=" + fmt_g(*absolute)
                                 : "contamination=" + fmt_g(contamination.value_or(0.01))));
    manifest.add_input("percentiles", json(percentiles).dump());
    manifest.add_input("bins", std::to_string(bins));

    std::optional<EcodModel> frozen;
    if (!model_path.empty()) {
        std::ifstream in(model_path);
        if (!in) throw IoError("cannot open model " + model_path);
        json doc;
        try {
            in >> doc;
        } catch (const json::parse_error& e) {
            throw ParseError("model " + model_path + ": " + e.what());
        }
        frozen = EcodModel::from_json(doc);
        manifest.add_input("model", model_path);
    }

    const FleetDataset dataset = load_dataset(dataset_path, format_from_string(format_name));
    const auto parts = partition_by_class_checkpoint(dataset);
    for (const auto& [key, part] : parts) {
        const auto& [cls, checkpoint] = key;
        const ScoredPopulation scored =
            score_class(part, threshold, percentiles, frozen ? &*frozen : nullptr);
        const std::string stem = sanitize(cls) + "__cp" + std::to_string(checkpoint);

        const fs::path scored_path = fs::path(out_dir) / ("scored__" + stem + ".json");
        write_text(scored_path, to_json(scored).dump() + "\n");
        manifest.add_output(scored_path);

        const fs::path hist_path = fs::path(out_dir) / ("hist__" + stem + ".csv");
        write_text(hist_path, histogram_csv(score_histogram(scored, bins)));
        manifest.add_output(hist_path);

        const fs::path pct_path = fs::path(out_dir) / ("percentiles__" + stem + ".csv");
        write_text(pct_path, percentile_table_csv(scored));
        manifest.add_output(pct_path);

        if (emit_models && !frozen) {
            const fs::path model_out = fs::path(out_dir) / ("model__" + stem + ".json");
            write_text(model_out, EcodModel::fit(part).to_json().dump() + "\n");
            manifest.add_output(model_out);
        }
    }
    manifest.write();
    std::cout << "scored " << parts.size() << " (class, checkpoint) populations\n";
    return 0;
}

// ---------------------------------------------------------------------------
// explain / consistency helpers

std::vector<ScoredPopulation> load_scored_dir(const std::string& dir) {
    std::vector<fs::path> files;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("scored__", 0) == 0 && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw LookupError("no scored__*.json files in " + dir);
    std::vector<ScoredPopulation> out;
    for (const fs::path& p : files) {
        std::ifstream in(p);
        json doc;
        try {
            in >> doc;
        } catch (const json::parse_error& e) {
            throw ParseError(p.string() + ": " + e.what());
        }
        out.push_back(scored_population_from_json(doc));
    }
    return out;
}

bool contains_sample(const ScoredPopulation& scored, const std::string& id) {
    for (const SampleScore& s : scored.scores)
        if (s.sample_id == id) return true;
    return false;
}

std::string explain_text(const ExtrinsicReport& rep, const ScoredPopulation& scored) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "sample:     %s\n", rep.sample_id.c_str());
    out += line;
    std::snprintf(line, sizeof(line), "class:      %s    checkpoint: %lld\n",
                  scored.workload_class.c_str(),
                  static_cast<long long>(scored.checkpoint));
    out += line;
    std::snprintf(line, sizeof(line), "aggregate:  %.12g    rank: %zu/%zu    flagged: %s\n",
                  rep.aggregate, rep.rank, scored.n(), rep.flagged ? "yes" : "no");
    out += line;
    out += "causal_steps:";
    for (const std::size_t j : rep.causal_steps) out += " " + std::to_string(j);
    out += "\n\n";
    out += "  step          left         right          auto";
    for (const double p : rep.percentiles) {
        std::snprintf(line, sizeof(line), "  %11s", ("p" + fmt_g(100.0 * p)).c_str());
        out += line;
    }
    out += "  causal\n";
    for (std::size_t j = 0; j < rep.dims.size(); ++j) {
        const DimensionScore& d = rep.dims[j];
        std::snprintf(line, sizeof(line), "  %4zu  %12.6g  %12.6g  %12.6g", j, d.left, d.right,
                      d.auto_score);
        out += line;
        for (std::size_t p = 0; p < rep.percentiles.size(); ++p) {
            std::snprintf(line, sizeof(line), "  %11.6g", rep.percentile_table[p][j]);
            out += line;
        }
        const bool causal = std::find(rep.causal_steps.begin(), rep.causal_steps.end(), j) !=
                            rep.causal_steps.end();
        out += causal ? "       *\n" : "\n";
    }
    return out;
}

int cmd_explain(const std::string& scored_dir, const std::string& sample_id,
                std::optional<std::int64_t> checkpoint, const std::string& out_dir) {
    const std::vector<ScoredPopulation> populations = load_scored_dir(scored_dir);
    const ScoredPopulation* best = nullptr;
    for (const ScoredPopulation& scored : populations) {
        if (!contains_sample(scored, sample_id)) continue;
        if (checkpoint && scored.checkpoint != *checkpoint) continue;
        if (!best || scored.checkpoint > best->checkpoint) best = &scored;
    }
    if (!best)
        throw LookupError("sample '" + sample_id + "' not found in " + scored_dir +
                          (checkpoint ? " at checkpoint " + std::to_string(*checkpoint) : ""));

    const ExtrinsicReport rep = explain_sample(*best, sample_id);
    const std::string text = explain_text(rep, *best);
    std::cout << text;

    ManifestWriter manifest("explain", out_dir);
    manifest.add_input("scored", scored_dir);
    manifest.add_input("sample", sample_id);
    const std::string stem = "explain__" + sanitize(sample_id) + "__" +
                             sanitize(best->workload_class) + "__cp" +
                             std::to_string(best->checkpoint);
    const fs::path json_path = fs::path(out_dir) / (stem + ".json");
    write_text(json_path, to_json(rep).dump(2) + "\n");
    manifest.add_output(json_path);
    const fs::path text_path = fs::path(out_dir) / (stem + ".txt");
    write_text(text_path, text);
    manifest.add_output(text_path);
    manifest.write();
    return 0;
}

int cmd_consistency(const std::string& scored_dir, const std::string& sample_id,
                    const std::string& out_dir) {
    const std::vector<ScoredPopulation> populations = load_scored_dir(scored_dir);
    // The sample's class, then every checkpoint of that class.
    const ScoredPopulation* home = nullptr;
    for (const ScoredPopulation& scored : populations)
        if (contains_sample(scored, sample_id)) home = &scored;
    if (!home) throw LookupError("sample '" + sample_id + "' not found in " + scored_dir);
    std::vector<const ScoredPopulation*> checkpoints;
    for (const ScoredPopulation& scored : populations)
        if (scored.workload_class == home->workload_class) checkpoints.push_back(&scored);

    const ConsistencyReport rep = checkpoint_consistency(checkpoints, sample_id);
    std::cout << "sample:     " << rep.sample_id << "\n";
    std::cout << "consistent: " << (rep.consistent ? "true" : "false") << "\n";
    for (const CheckpointEntry& e : rep.entries)
        std::cout << "  checkpoint " << e.checkpoint << ": score=" << fmt_g(e.score)
                  << " rank=" << e.rank << " flagged=" << (e.flagged ? "yes" : "no") << "\n";

    ManifestWriter manifest("consistency", out_dir);
    manifest.add_input("scored", scored_dir);
    manifest.add_input("sample", sample_id);
    const fs::path json_path =
        fs::path(out_dir) / ("consistency__" + sanitize(sample_id) + ".json");
    write_text(json_path, to_json(rep).dump(2) + "\n");
    manifest.add_output(json_path);
    manifest.write();
    return 0;
}

// ---------------------------------------------------------------------------
// embed

int cmd_embed(const std::string& dataset_path, const std::string& format_name,
              std::optional<std::int64_t> checkpoint, const std::string& group_by_name,
              std::size_t k, bool scale, bool per_generation, const std::string& truth_path,
              const std::string& out_dir) {
    const FleetDataset dataset = load_dataset(dataset_path, format_from_string(format_name));
    std::int64_t cp = 0;
    if (checkpoint) {
        cp = *checkpoint;
    } else {
        for (const SampleRecord& r : dataset.records) cp = std::max(cp, r.checkpoint);
    }

    ManifestWriter manifest("embed", out_dir);
    manifest.add_input("dataset", dataset_path);
    manifest.add_input("format", format_name);
    manifest.add_input("checkpoint", std::to_string(cp));
    manifest.add_input("group_by", group_by_name);
    manifest.add_input("k", std::to_string(k));
    manifest.add_input("scale", scale ? "true" : "false");

    const GroupBy group_by = group_by_from_string(group_by_name);
    const WorkloadFeatureMatrix matrix = build_feature_matrix(dataset, cp, group_by);

    const fs::path matrix_path = fs::path(out_dir) / "feature_matrix.csv";
    write_text(matrix_path, feature_matrix_csv(matrix));
    manifest.add_output(matrix_path);

    const PcaModel pca = pca_fit(matrix.values, scale);
    const fs::path scree_path = fs::path(out_dir) / "scree.csv";
    write_text(scree_path, scree_csv(scree(pca)));
    manifest.add_output(scree_path);

    const Matrix coords = embed(pca, matrix.values, k);
    const fs::path embed_path = fs::path(out_dir) / "embedding.csv";
    write_text(embed_path, embedding_csv(matrix, coords));
    manifest.add_output(embed_path);

    if (per_generation) {
        std::set<std::string> generations;
        for (const GroupInfo& g : matrix.groups) generations.insert(g.generation);
        for (const std::string& gen : generations) {
            WorkloadFeatureMatrix sub;
            for (std::size_t i = 0; i < matrix.groups.size(); ++i)
                if (matrix.groups[i].generation == gen) {
                    sub.groups.push_back(matrix.groups[i]);
                    sub.values.push_back(matrix.values[i]);
                }
            if (sub.values.size() < 2) continue;
            const PcaModel sub_pca = pca_fit(sub.values, scale);
            const fs::path sub_scree = fs::path(out_dir) / ("scree__" + sanitize(gen) + ".csv");
            write_text(sub_scree, scree_csv(scree(sub_pca)));
            manifest.add_output(sub_scree);
            const std::size_t sub_k = std::min(k, sub_pca.components.size());
            const fs::path sub_embed =
                fs::path(out_dir) / ("embedding__" + sanitize(gen) + ".csv");
            write_text(sub_embed, embedding_csv(sub, embed(sub_pca, sub.values, sub_k)));
            manifest.add_output(sub_embed);
        }
    }

    if (!truth_path.empty()) {
        std::ifstream in(truth_path);
        if (!in) throw IoError("cannot open ground truth " + truth_path);
        json doc;
        try {
            in >> doc;
        } catch (const json::parse_error& e) {
            throw ParseError(truth_path + ": " + e.what());
        }
        const GroundTruth truth = ground_truth_from_json(doc);
        std::vector<double> retention, write, read;
        for (const GroupInfo& g : matrix.groups) {
            const auto it = truth.workload_intensities.find(g.workload_id);
            if (it == truth.workload_intensities.end())
                throw LookupError("no latent intensities for group '" + g.key +
                                  "' (workload '" + g.workload_id + "')");
            retention.push_back(it->second.retention);
            write.push_back(it->second.write);
            read.push_back(it->second.read);
        }
        const auto matches = axis_correlation(
            coords, {{"retention", retention}, {"write", write}, {"read", read}});
        const fs::path axis_path = fs::path(out_dir) / "axis_correlation.csv";
        write_text(axis_path, axis_table_csv(matches));
        manifest.add_output(axis_path);
        manifest.add_input("truth", truth_path);
    }

    manifest.write();
    std::cout << "embedded " << matrix.groups.size() << " workload groups (k=" << k << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interpretable error-management telemetry toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic fleet");
    std::string sim_config, sim_preset, sim_out = ".", sim_format = "jsonl";
    std::optional<std::uint64_t> sim_seed;
    simulate->add_option("--config", sim_config, "Fleet config JSON file");
    simulate->add_option("--preset", sim_preset, "Built-in preset (table1, three-axis)");
    simulate->add_option("--seed", sim_seed, "Override the config seed");
    simulate->add_option("--format", sim_format, "Dataset format (jsonl, csv)");
    simulate->add_option("--out", sim_out, "Output directory")->required();

    // score
    auto* score = app.add_subcommand("score", "Score per (workload class, checkpoint)");
    std::string score_dataset, score_format = "jsonl", score_model, score_out = ".";
    std::optional<double> score_contamination, score_absolute;
    std::vector<double> score_percentiles = {0.99, 0.999};
    std::size_t score_bins = 40;
    bool score_emit_models = false;
    score->add_option("--dataset", score_dataset, "Dataset path")->required();
    score->add_option("--format", score_format, "Dataset format (jsonl, csv)");
    score->add_option("--contamination", score_contamination,
                      "Flag the top fraction in (0, 0.5]");
    score->add_option("--absolute", score_absolute, "Flag aggregate >= threshold");
    score->add_option("--percentiles", score_percentiles, "Percentile list")->delimiter(',');
    score->add_option("--bins", score_bins, "Histogram bin count");
    score->add_option("--model", score_model, "Frozen model artifact (inductive scoring)");
    score->add_flag("--emit-models", score_emit_models, "Write fitted model artifacts");
    score->add_option("--out", score_out, "Output directory")->required();

    // explain
    auto* explain = app.add_subcommand("explain", "Per-step report for one sample");
    std::string explain_scored, explain_sample_id, explain_out = ".";
    std::optional<std::int64_t> explain_checkpoint;
    explain->add_option("--scored", explain_scored, "Directory of scored__*.json")->required();
    explain->add_option("--sample", explain_sample_id, "sample_id")->required();
    explain->add_option("--checkpoint", explain_checkpoint,
                        "Checkpoint (default: latest containing the sample)");
    explain->add_option("--out", explain_out, "Output directory")->required();

    // consistency
    auto* consistency = app.add_subcommand("consistency", "Cross-checkpoint flag consistency");
    std::string cons_scored, cons_sample_id, cons_out = ".";
    consistency->add_option("--scored", cons_scored, "Directory of scored__*.json")->required();
    consistency->add_option("--sample", cons_sample_id, "sample_id")->required();
    consistency->add_option("--out", cons_out, "Output directory")->required();

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Workload feature matrix, PCA and embedding");
    std::string embed_dataset, embed_format = "jsonl", embed_group_by = "workload-generation";
    std::string embed_truth, embed_out = ".";
    std::optional<std::int64_t> embed_checkpoint;
    std::size_t embed_k = 3;
    bool embed_no_scale = false, embed_per_generation = false;
    embed_cmd->add_option("--dataset", embed_dataset, "Dataset path")->required();
    embed_cmd->add_option("--format", embed_format, "Dataset format (jsonl, csv)");
    embed_cmd->add_option("--checkpoint", embed_checkpoint, "Checkpoint (default: last)");
    embed_cmd->add_option("--group-by", embed_group_by,
                          "workload, workload-generation or class");
    embed_cmd->add_option("--k", embed_k, "Embedding dimensions");
    embed_cmd->add_flag("--no-scale", embed_no_scale, "Disable unit-variance scaling");
    bool embed_scale_flag = false;
    embed_cmd->add_flag("--scale", embed_scale_flag, "Enable unit-variance scaling (default)");
    embed_cmd->add_flag("--per-generation", embed_per_generation,
                        "Also fit PCA per SSD generation");
    embed_cmd->add_option("--truth", embed_truth, "Ground-truth JSON for axis correlation");
    embed_cmd->add_option("--out", embed_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(sim_config, sim_preset, sim_seed, sim_out, sim_format);
        if (score->parsed())
            return cmd_score(score_dataset, score_format, score_contamination, score_absolute,
                             score_percentiles, score_bins, score_model, score_emit_models,
                             score_out);
        if (explain->parsed())
            return cmd_explain(explain_scored, explain_sample_id, explain_checkpoint,
                               explain_out);
        if (consistency->parsed())
            return cmd_consistency(cons_scored, cons_sample_id, cons_out);
        if (embed_cmd->parsed())
            return cmd_embed(embed_dataset, embed_format, embed_checkpoint, embed_group_by,
                             embed_k, !embed_no_scale, embed_per_generation, embed_truth,
                             embed_out);
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const LookupError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ConstraintError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
