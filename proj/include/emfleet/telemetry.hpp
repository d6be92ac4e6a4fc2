#ifndef EMFLEET_TELEMETRY_HPP
#define EMFLEET_TELEMETRY_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "emfleet/errors.hpp"

namespace emfleet {

// Activation count per error-management step. Entries are non-negative and
// every record in one dataset carries the same length d.
using EmStepVector = std::vector<std::int64_t>;

// One (device, checkpoint) telemetry observation. Per-component records use
// the same schema with component_count = 1 and a "ssd/die"-style sample_id.
struct SampleRecord {
    std::string sample_id;
    std::string generation;
    std::string workload_class;
    std::string workload_id;
    std::int64_t checkpoint = 0;
    std::int64_t component_count = 1;
    EmStepVector steps;

    bool operator==(const SampleRecord&) const = default;
};

struct FleetDataset {
    std::vector<SampleRecord> records;
    std::size_t d = 0;
    // Free-form audit metadata (seed, generator config hash, ingest source).
    // Not persisted by save_dataset; commands record it in their manifest.
    std::map<std::string, std::string> provenance;

    std::size_t n() const { return records.size(); }
};

enum class Format { jsonl, csv };

Format format_from_string(const std::string& name);
std::string to_string(Format format);

// Validates invariants (non-negative counts, uniform d, unique
// (sample_id, checkpoint), component_count >= 1) and assembles a dataset.
// Throws ValidationError (or DimensionError for ragged step vectors) naming
// the offending record.
FleetDataset make_dataset(std::vector<SampleRecord> records,
                          std::map<std::string, std::string> provenance = {});

// Throws ParseError with a line number, DimensionError naming the offending
// row, or ValidationError ("empty file", bad counts).
FleetDataset load_dataset(const std::filesystem::path& path, Format format);

// Byte-deterministic for identical input: stable field order and numeric
// formatting. CSV columns: sample_id, generation, workload_class,
// workload_id, checkpoint, component_count, step_0..step_{d-1}.
void save_dataset(const FleetDataset& dataset, const std::filesystem::path& path,
                  Format format);

// Partitions preserve record order; union of partitions equals the input.
std::map<std::string, FleetDataset> partition_by_class(const FleetDataset& dataset);

// Finer split used by per-checkpoint scoring. Key: (workload_class, checkpoint).
std::map<std::pair<std::string, std::int64_t>, FleetDataset>
partition_by_class_checkpoint(const FleetDataset& dataset);

}  // namespace emfleet

#endif  // EMFLEET_TELEMETRY_HPP
