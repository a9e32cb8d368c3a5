#include "metashap/kb.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "metashap/dataset.hpp"
#include "metashap/error.hpp"

namespace metashap {

namespace {

constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kMetaFile = "meta_features.csv";
constexpr const char* kSpacesFile = "spaces.json";

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open '" + path.string() + "'");
    return in;
}

std::string header_value(const std::string& line, const std::string& key) {
    const auto pos = line.find(key + "=");
    if (pos == std::string::npos) return "";
    const auto start = pos + key.size() + 1;
    const auto end = line.find_first_of(" \t\r", start);
    return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

void read_meta_features(const std::filesystem::path& path, KnowledgeBase& kb) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.filename().string() + " line " + std::to_string(line_no) + ": ";
        if (line[0] == '#') {
            const auto schema = header_value(line, "schema");
            if (!schema.empty() && schema != kMetaFeatureSchemaVersion) {
                throw ValidationError(where + "unsupported schema '" + schema + "'");
            }
            const auto metric = header_value(line, "metric");
            if (!metric.empty()) kb.metric = metric;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (!have_header) {
            if (fields.size() != kMetaFeatureCount + 1 || fields[0] != "dataset_id") {
                throw ValidationError(where + "expected header 'dataset_id' + " +
                                      std::to_string(kMetaFeatureCount) + " meta-feature names");
            }
            for (std::size_t i = 0; i < kMetaFeatureCount; ++i) {
                if (fields[i + 1] != kMetaFeatureNames[i]) {
                    throw ValidationError(where + "unexpected column '" + fields[i + 1] + "', expected '" +
                                          std::string(kMetaFeatureNames[i]) + "'");
                }
            }
            have_header = true;
            continue;
        }
        if (fields.size() != kMetaFeatureCount + 1) {
            throw ValidationError(where + "expected " + std::to_string(kMetaFeatureCount + 1) + " fields");
        }
        MetaFeatureVector mf;
        for (std::size_t i = 0; i < kMetaFeatureCount; ++i) {
            const auto& cell = fields[i + 1];
            char* end = nullptr;
            mf[i] = std::strtod(cell.c_str(), &end);
            if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(mf[i])) {
                throw ValidationError(where + "non-numeric value '" + cell + "'");
            }
        }
        if (!kb.meta_registry.emplace(fields[0], mf).second) {
            throw ValidationError(where + "duplicate dataset_id '" + fields[0] + "'");
        }
    }
    if (!have_header) throw ValidationError(path.filename().string() + ": missing header row");
}

void read_spaces(const std::filesystem::path& path, KnowledgeBase& kb) {
    auto in = open_input(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.filename().string() + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError(path.filename().string() + ": expected an object");
    for (const auto& [algorithm, spec] : j.items()) {
        try {
            kb.spaces.emplace(algorithm, spec.get<HyperparameterSpace>());
        } catch (const ValidationError& e) {
            throw ValidationError(path.filename().string() + ", algorithm '" + algorithm + "': " + e.what());
        }
    }
}

void read_records(const std::filesystem::path& path, KnowledgeBase& kb) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.filename().string() + " line " + std::to_string(line_no) + ": ";
        try {
            auto record = record_from_json(nlohmann::json::parse(line));
            validate_record(record, kb);
            kb.records.push_back(std::move(record));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(where + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
    }
}

} // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void validate_record(const KBRecord& record, const KnowledgeBase& kb) {
    if (!kb.meta_registry.contains(record.dataset_id)) {
        throw ValidationError("unknown dataset_id '" + record.dataset_id + "'");
    }
    auto it = kb.spaces.find(record.algorithm_id);
    if (it == kb.spaces.end()) throw ValidationError("unknown algorithm_id '" + record.algorithm_id + "'");
    if (!(record.performance >= 0.0 && record.performance <= 1.0)) {
        throw ValidationError("performance " + format_double(record.performance) + " outside [0, 1]");
    }
    it->second.check_config(record.config);
}

void KnowledgeBase::validate() const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            validate_record(records[i], *this);
        } catch (const ValidationError& e) {
            throw ValidationError("record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
}

const HyperparameterSpace& KnowledgeBase::space(const std::string& algorithm_id) const {
    auto it = spaces.find(algorithm_id);
    if (it == spaces.end()) throw ValidationError("unknown algorithm_id '" + algorithm_id + "'");
    return it->second;
}

std::map<std::string, std::size_t> KnowledgeBase::records_per_dataset(const std::string& algorithm_id) const {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) {
        if (r.algorithm_id == algorithm_id) ++counts[r.dataset_id];
    }
    return counts;
}

nlohmann::json record_to_json(const KBRecord& record) {
    return nlohmann::json{{"dataset_id", record.dataset_id},
                          {"algorithm_id", record.algorithm_id},
                          {"config", config_to_json(record.config)},
                          {"performance", record.performance}};
}

KBRecord record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("record must be a JSON object");
    KBRecord r;
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.algorithm_id = j.at("algorithm_id").get<std::string>();
    r.config = config_from_json(j.at("config"));
    const auto& perf = j.at("performance");
    if (!perf.is_number()) throw ValidationError("performance must be a number");
    r.performance = perf.get<double>();
    return r;
}

KnowledgeBase load_kb(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw LoadError("KB bundle '" + dir.string() + "' is not a directory");
    KnowledgeBase kb;
    read_meta_features(dir / kMetaFile, kb);
    read_spaces(dir / kSpacesFile, kb);
    read_records(dir / kRecordsFile, kb);
    return kb;
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& dir) {
    kb.validate();
    std::filesystem::create_directories(dir);

    std::ofstream meta(dir / kMetaFile);
    if (!meta) throw Error("cannot write '" + (dir / kMetaFile).string() + "'");
    meta << "# schema=" << kMetaFeatureSchemaVersion << " metric=" << kb.metric << '\n';
    meta << "dataset_id";
    for (auto name : kMetaFeatureNames) meta << ',' << name;
    meta << '\n';
    for (const auto& [id, mf] : kb.meta_registry) {
        meta << csv_escape(id);
        for (double v : mf.values) meta << ',' << format_double(v);
        meta << '\n';
    }

    nlohmann::json spaces = nlohmann::json::object();
    for (const auto& [id, space] : kb.spaces) spaces[id] = space;
    std::ofstream spaces_out(dir / kSpacesFile);
    if (!spaces_out) throw Error("cannot write '" + (dir / kSpacesFile).string() + "'");
    spaces_out << spaces.dump(2) << '\n';

    std::ofstream records(dir / kRecordsFile);
    if (!records) throw Error("cannot write '" + (dir / kRecordsFile).string() + "'");
    for (const auto& r : kb.records) records << record_to_json(r).dump() << '\n';
}

std::vector<KBRecord> query(const KnowledgeBase& kb, const std::string& algorithm_id,
                            const std::set<std::string>& dataset_ids) {
    kb.space(algorithm_id);
    std::vector<KBRecord> out;
    if (dataset_ids.empty()) return out;
    for (const auto& r : kb.records) {
        if (r.algorithm_id == algorithm_id && dataset_ids.contains(r.dataset_id)) out.push_back(r);
    }
    return out;
}

} // namespace metashap
