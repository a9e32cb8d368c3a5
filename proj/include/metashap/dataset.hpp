#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace metashap {

/**
 * Tabular classification dataset. Categorical columns hold ordinal codes;
 * missing cells are NaN.
 */
struct TabularDataset {
    Eigen::MatrixXd features;          // n x p
    std::vector<int> target;           // labels in [0, n_classes)
    std::vector<bool> categorical_mask;
    std::vector<std::string> feature_names;

    std::size_t n_rows() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }
    int n_classes() const;

    // n >= 2, p >= 1, c >= 2, every class present, shapes consistent.
    void validate() const;
};

struct CsvReadOptions {
    std::string target_column;
    std::vector<std::string> categorical_columns; // forced categorical in addition to auto-detected
};

// Reads a headered CSV. Columns containing any non-numeric, non-missing cell
// are categorical. Empty, "NA", "NaN", "?" cells are missing.
TabularDataset read_dataset_csv(const std::filesystem::path& path, const CsvReadOptions& options);

// Writes features and target (target column named "target"); categorical
// codes are written as zero-padded "c00012" labels so they are re-detected,
// and re-coded identically, on read when the codes are dense.
void write_dataset_csv(const TabularDataset& ds, const std::filesystem::path& path);

// Splits one CSV line honoring double quotes.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

} // namespace metashap
