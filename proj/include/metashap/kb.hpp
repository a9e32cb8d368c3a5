#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "metashap/metafeatures.hpp"
#include "metashap/space.hpp"

namespace metashap {

struct KBRecord {
    std::string dataset_id;
    std::string algorithm_id;
    Config config;
    double performance = 0.0;

    bool operator==(const KBRecord&) const = default;
};

/**
 * Evaluated pipelines plus the per-dataset meta-feature registry and the
 * per-algorithm search spaces. Treat as immutable once loaded.
 */
struct KnowledgeBase {
    std::vector<KBRecord> records;
    std::map<std::string, MetaFeatureVector> meta_registry;
    std::map<std::string, HyperparameterSpace> spaces;
    std::string metric = "accuracy";

    // Checks every record against the registry and spaces. The message names
    // the 1-based record position.
    void validate() const;

    const HyperparameterSpace& space(const std::string& algorithm_id) const;
    std::map<std::string, std::size_t> records_per_dataset(const std::string& algorithm_id) const;

    bool operator==(const KnowledgeBase&) const = default;
};

void validate_record(const KBRecord& record, const KnowledgeBase& kb);

// Bundle directory: records.jsonl, meta_features.csv, spaces.json.
KnowledgeBase load_kb(const std::filesystem::path& dir);
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& dir);

// Records of `algorithm_id` whose dataset is in `dataset_ids`, in stored order.
std::vector<KBRecord> query(const KnowledgeBase& kb, const std::string& algorithm_id,
                            const std::set<std::string>& dataset_ids);

nlohmann::json record_to_json(const KBRecord& record);
KBRecord record_from_json(const nlohmann::json& j);

std::string format_double(double v);

} // namespace metashap
