#include "metashap/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "metashap/error.hpp"

namespace metashap {

namespace {

bool is_missing_token(const std::string& cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "?";
}

bool parse_number(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    char* end = nullptr;
    out = std::strtod(cell.c_str(), &end);
    return end == cell.c_str() + cell.size() && std::isfinite(out);
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

int TabularDataset::n_classes() const {
    int c = 0;
    for (int label : target) c = std::max(c, label + 1);
    return c;
}

void TabularDataset::validate() const {
    const auto n = n_rows();
    const auto p = n_features();
    if (n < 2) throw ValidationError("dataset needs at least 2 instances");
    if (p < 1) throw ValidationError("dataset needs at least 1 feature");
    if (target.size() != n) throw ValidationError("target length does not match feature rows");
    if (categorical_mask.size() != p) throw ValidationError("categorical mask length does not match feature columns");
    const int c = n_classes();
    if (c < 2) throw ValidationError("dataset needs at least 2 classes");
    std::vector<int> counts(static_cast<std::size_t>(c), 0);
    for (int label : target) {
        if (label < 0) throw ValidationError("negative class label");
        ++counts[static_cast<std::size_t>(label)];
    }
    for (int k = 0; k < c; ++k) {
        if (counts[static_cast<std::size_t>(k)] == 0) {
            throw ValidationError("class " + std::to_string(k) + " has no instances");
        }
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(trim(current));
            current.clear();
        } else if (ch != '\r') {
            current.push_back(ch);
        }
    }
    fields.push_back(trim(current));
    return fields;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

TabularDataset read_dataset_csv(const std::filesystem::path& path, const CsvReadOptions& options) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open dataset file '" + path.string() + "'");
    if (options.target_column.empty()) throw ValidationError("no target column given");

    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (trim(line).empty() || line[0] == '#') continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) throw ValidationError("dataset file '" + path.string() + "' has no header");

    const auto target_it = std::find(header.begin(), header.end(), options.target_column);
    if (target_it == header.end()) {
        throw ValidationError("target column '" + options.target_column + "' not found in '" +
                              path.string() + "'");
    }
    const auto target_col = static_cast<std::size_t>(target_it - header.begin());
    for (const auto& forced : options.categorical_columns) {
        if (std::find(header.begin(), header.end(), forced) == header.end()) {
            throw ValidationError("categorical column '" + forced + "' not found");
        }
    }

    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        rows.push_back(std::move(fields));
    }

    const std::size_t n = rows.size();
    const std::size_t p = header.size() - 1;
    TabularDataset ds;
    ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    ds.categorical_mask.assign(p, false);

    std::size_t out_col = 0;
    for (std::size_t col = 0; col < header.size(); ++col) {
        if (col == target_col) continue;
        ds.feature_names.push_back(header[col]);
        bool categorical = std::find(options.categorical_columns.begin(), options.categorical_columns.end(),
                                     header[col]) != options.categorical_columns.end();
        double value = 0.0;
        for (const auto& row : rows) {
            if (!is_missing_token(row[col]) && !parse_number(row[col], value)) {
                categorical = true;
                break;
            }
        }
        ds.categorical_mask[out_col] = categorical;
        if (categorical) {
            std::set<std::string> labels;
            for (const auto& row : rows) {
                if (!is_missing_token(row[col])) labels.insert(row[col]);
            }
            std::map<std::string, double> codes;
            double next = 0.0;
            for (const auto& l : labels) codes[l] = next++;
            for (std::size_t r = 0; r < n; ++r) {
                const auto& cell = rows[r][col];
                ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(out_col)) =
                    is_missing_token(cell) ? std::numeric_limits<double>::quiet_NaN() : codes[cell];
            }
        } else {
            for (std::size_t r = 0; r < n; ++r) {
                const auto& cell = rows[r][col];
                double v = std::numeric_limits<double>::quiet_NaN();
                if (!is_missing_token(cell)) parse_number(cell, v);
                ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(out_col)) = v;
            }
        }
        ++out_col;
    }

    bool all_numeric = true;
    std::vector<std::string> target_cells;
    target_cells.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& cell = rows[r][target_col];
        if (is_missing_token(cell)) {
            throw ValidationError("line " + std::to_string(r + 2) + ": missing target value");
        }
        double v = 0.0;
        all_numeric = all_numeric && parse_number(cell, v);
        target_cells.push_back(cell);
    }
    std::vector<std::string> unique_labels(target_cells.begin(), target_cells.end());
    std::sort(unique_labels.begin(), unique_labels.end(), [&](const std::string& a, const std::string& b) {
        if (all_numeric) return std::stod(a) < std::stod(b);
        return a < b;
    });
    unique_labels.erase(std::unique(unique_labels.begin(), unique_labels.end(),
                                    [&](const std::string& a, const std::string& b) {
                                        return all_numeric ? std::stod(a) == std::stod(b) : a == b;
                                    }),
                        unique_labels.end());
    ds.target.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        auto it = std::find_if(unique_labels.begin(), unique_labels.end(), [&](const std::string& l) {
            return all_numeric ? std::stod(l) == std::stod(target_cells[r]) : l == target_cells[r];
        });
        ds.target[r] = static_cast<int>(it - unique_labels.begin());
    }
    ds.validate();
    return ds;
}

void write_dataset_csv(const TabularDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write dataset file '" + path.string() + "'");
    out.precision(17);
    for (std::size_t j = 0; j < ds.n_features(); ++j) {
        const std::string name = j < ds.feature_names.size() ? ds.feature_names[j] : "f" + std::to_string(j);
        out << csv_escape(name) << ',';
    }
    out << "target\n";
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        for (std::size_t j = 0; j < ds.n_features(); ++j) {
            const double v = ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (std::isnan(v)) {
                out << "NA";
            } else if (ds.categorical_mask[j]) {
                char label[32];
                std::snprintf(label, sizeof(label), "c%05lld", static_cast<long long>(v));
                out << label;
            } else {
                out << v;
            }
            out << ',';
        }
        out << ds.target[i] << '\n';
    }
}

} // namespace metashap
