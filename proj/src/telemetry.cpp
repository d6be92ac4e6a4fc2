#include "emfleet/telemetry.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace emfleet {

using nlohmann::json;

Format format_from_string(const std::string& name) {
    if (name == "jsonl") return Format::jsonl;
    if (name == "csv") return Format::csv;
    throw ValidationError("unknown dataset format: '" + name + "' (expected jsonl or csv)");
}

std::string to_string(Format format) {
    return format == Format::jsonl ? "jsonl" : "csv";
}

FleetDataset make_dataset(std::vector<SampleRecord> records,
                          std::map<std::string, std::string> provenance) {
    FleetDataset ds;
    ds.provenance = std::move(provenance);
    std::set<std::pair<std::string, std::int64_t>> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const SampleRecord& r = records[i];
        const std::string where = "record " + std::to_string(i) +
                                  (r.sample_id.empty() ? "" : " (sample_id=" + r.sample_id + ")");
        if (r.sample_id.empty())
            throw ValidationError(where + ": sample_id must be non-empty");
        if (r.checkpoint < 0)
            throw ValidationError(where + ": checkpoint must be >= 0");
        if (r.component_count < 1)
            throw ValidationError(where + ": component_count must be >= 1");
        for (std::size_t j = 0; j < r.steps.size(); ++j) {
            if (r.steps[j] < 0)
                throw ValidationError(where + ": step_" + std::to_string(j) +
                                      " is negative (" + std::to_string(r.steps[j]) + ")");
        }
        if (i == 0) {
            ds.d = r.steps.size();
        } else if (r.steps.size() != ds.d) {
            throw DimensionError(where + ": step vector length " +
                                 std::to_string(r.steps.size()) + " != dataset dimension " +
                                 std::to_string(ds.d));
        }
        if (!seen.insert({r.sample_id, r.checkpoint}).second)
            throw ValidationError(where + ": duplicate (sample_id, checkpoint)");
    }
    ds.records = std::move(records);
    return ds;
}

namespace {

SampleRecord record_from_json(const json& row, std::size_t line_no) {
    const std::string where = "line " + std::to_string(line_no);
    try {
        SampleRecord r;
        r.sample_id = row.at("sample_id").get<std::string>();
        r.generation = row.at("generation").get<std::string>();
        r.workload_class = row.at("workload_class").get<std::string>();
        r.workload_id = row.at("workload_id").get<std::string>();
        r.checkpoint = row.at("checkpoint").get<std::int64_t>();
        r.component_count = row.at("component_count").get<std::int64_t>();
        const json& steps = row.at("steps");
        if (!steps.is_array()) throw ParseError(where + ": steps must be an array");
        r.steps.reserve(steps.size());
        for (const json& v : steps) {
            if (!v.is_number_integer() && !v.is_number_unsigned())
                throw ParseError(where + ": steps entries must be integers");
            r.steps.push_back(v.get<std::int64_t>());
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
}

json record_to_json(const SampleRecord& r) {
    // nlohmann::json orders object keys lexicographically, which keeps the
    // emitted bytes stable across runs.
    json row;
    row["sample_id"] = r.sample_id;
    row["generation"] = r.generation;
    row["workload_class"] = r.workload_class;
    row["workload_id"] = r.workload_id;
    row["checkpoint"] = r.checkpoint;
    row["component_count"] = r.component_count;
    row["steps"] = r.steps;
    return row;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw ParseError(where + ": trailing characters in integer '" + s + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw ParseError(where + ": not an integer: '" + s + "'");
    } catch (const std::out_of_range&) {
        throw ParseError(where + ": integer out of range: '" + s + "'");
    }
}

FleetDataset load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<SampleRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        records.push_back(record_from_json(row, line_no));
    }
    if (records.empty()) throw ValidationError("empty dataset file: " + path.string());
    return make_dataset(std::move(records), {{"source", path.string()}});
}

FleetDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError("empty dataset file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> fixed = {"sample_id", "generation", "workload_class",
                                            "workload_id", "checkpoint", "component_count"};
    if (header.size() < fixed.size())
        throw ParseError("line 1: CSV header too short");
    for (std::size_t i = 0; i < fixed.size(); ++i)
        if (header[i] != fixed[i])
            throw ParseError("line 1: expected header column '" + fixed[i] + "', got '" +
                             header[i] + "'");
    const std::size_t d = header.size() - fixed.size();
    for (std::size_t j = 0; j < d; ++j)
        if (header[fixed.size() + j] != "step_" + std::to_string(j))
            throw ParseError("line 1: expected header column 'step_" + std::to_string(j) + "'");

    std::vector<SampleRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DimensionError(where + ": " + std::to_string(fields.size()) +
                                 " fields, header has " + std::to_string(header.size()));
        SampleRecord r;
        r.sample_id = fields[0];
        r.generation = fields[1];
        r.workload_class = fields[2];
        r.workload_id = fields[3];
        r.checkpoint = parse_int(fields[4], where);
        r.component_count = parse_int(fields[5], where);
        r.steps.reserve(d);
        for (std::size_t j = 0; j < d; ++j)
            r.steps.push_back(parse_int(fields[fixed.size() + j], where));
        records.push_back(std::move(r));
    }
    if (records.empty()) throw ValidationError("dataset file has no records: " + path.string());
    return make_dataset(std::move(records), {{"source", path.string()}});
}

}  // namespace

FleetDataset load_dataset(const std::filesystem::path& path, Format format) {
    if (!std::filesystem::exists(path))
        throw IoError("no such file: " + path.string());
    return format == Format::jsonl ? load_jsonl(path) : load_csv(path);
}

void save_dataset(const FleetDataset& dataset, const std::filesystem::path& path,
                  Format format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    if (format == Format::jsonl) {
        for (const SampleRecord& r : dataset.records)
            out << record_to_json(r).dump() << '\n';
    } else {
        out << "sample_id,generation,workload_class,workload_id,checkpoint,component_count";
        for (std::size_t j = 0; j < dataset.d; ++j) out << ",step_" << j;
        out << '\n';
        for (const SampleRecord& r : dataset.records) {
            out << r.sample_id << ',' << r.generation << ',' << r.workload_class << ','
                << r.workload_id << ',' << r.checkpoint << ',' << r.component_count;
            for (const std::int64_t v : r.steps) out << ',' << v;
            out << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::map<std::string, FleetDataset> partition_by_class(const FleetDataset& dataset) {
    std::map<std::string, FleetDataset> parts;
    for (const SampleRecord& r : dataset.records) {
        FleetDataset& part = parts[r.workload_class];
        part.d = dataset.d;
        part.provenance = dataset.provenance;
        part.records.push_back(r);
    }
    return parts;
}

std::map<std::pair<std::string, std::int64_t>, FleetDataset>
partition_by_class_checkpoint(const FleetDataset& dataset) {
    std::map<std::pair<std::string, std::int64_t>, FleetDataset> parts;
    for (const SampleRecord& r : dataset.records) {
        FleetDataset& part = parts[{r.workload_class, r.checkpoint}];
        part.d = dataset.d;
        part.provenance = dataset.provenance;
        part.records.push_back(r);
    }
    return parts;
}

}  // namespace emfleet
