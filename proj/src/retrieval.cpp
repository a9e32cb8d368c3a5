#include "metashap/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "metashap/error.hpp"

namespace metashap {

MetaFeatureVector NormalizationStats::apply(const MetaFeatureVector& v) const {
    MetaFeatureVector out;
    for (std::size_t d = 0; d < kMetaFeatureCount; ++d) {
        out[d] = stddev[d] > 0.0 ? (v[d] - mean[d]) / stddev[d] : 0.0;
    }
    return out;
}

NormalizedRegistry normalize(const MetaRegistry& registry) {
    if (registry.empty()) throw ValidationError("cannot normalize an empty meta-feature registry");
    NormalizedRegistry out;
    const auto n = static_cast<double>(registry.size());
    for (std::size_t d = 0; d < kMetaFeatureCount; ++d) {
        double mean = 0.0;
        for (const auto& [_, v] : registry) mean += v[d];
        mean /= n;
        double var = 0.0;
        for (const auto& [_, v] : registry) var += (v[d] - mean) * (v[d] - mean);
        const double sd = std::sqrt(var / n);
        out.stats.mean[d] = mean;
        out.stats.stddev[d] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 0.0;
    }
    for (const auto& [id, v] : registry) out.vectors.emplace(id, out.stats.apply(v));
    return out;
}

std::set<std::string> Neighborhood::ids() const {
    std::set<std::string> out;
    for (const auto& e : entries) out.insert(e.dataset_id);
    return out;
}

Neighborhood knn(const MetaFeatureVector& query, const MetaRegistry& registry, const NormalizationStats& stats,
                 int k_neighbors, const std::optional<std::string>& exclude_id) {
    if (k_neighbors < 1) throw ValidationError("k_neighbors must be >= 1");
    Neighborhood nbhd;
    nbhd.query = query;
    nbhd.k_neighbors = k_neighbors;
    const auto q = stats.apply(query);
    for (const auto& [id, v] : registry) {
        if (exclude_id && id == *exclude_id) continue;
        const auto z = stats.apply(v);
        double d2 = 0.0;
        for (std::size_t d = 0; d < kMetaFeatureCount; ++d) d2 += (z[d] - q[d]) * (z[d] - q[d]);
        nbhd.entries.push_back({id, std::sqrt(d2)});
    }
    if (nbhd.entries.empty()) throw ValidationError("meta-feature registry has no candidate datasets");
    std::sort(nbhd.entries.begin(), nbhd.entries.end(), [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.dataset_id < b.dataset_id);
    });
    if (nbhd.entries.size() > static_cast<std::size_t>(k_neighbors)) {
        nbhd.entries.resize(static_cast<std::size_t>(k_neighbors));
    }
    return nbhd;
}

MetaDataset build_meta_dataset(const KnowledgeBase& kb, const Neighborhood& nbhd, const std::string& algorithm_id) {
    MetaDataset md;
    md.space = kb.space(algorithm_id);
    md.source_dataset_ids = nbhd.ids();
    const auto records = query(kb, algorithm_id, md.source_dataset_ids);
    if (records.empty()) {
        throw ValidationError("no KB records for algorithm '" + algorithm_id + "' among the " +
                              std::to_string(md.source_dataset_ids.size()) +
                              " neighbor datasets; increase k_neighbors");
    }
    const auto k = md.space.size();
    md.X.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(k));
    md.y.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto encoded = encode(records[i].config, md.space);
        std::copy(encoded.begin(), encoded.end(), row_span(md.X, static_cast<Eigen::Index>(i)).begin());
        md.y.push_back(records[i].performance);
    }
    return md;
}

} // namespace metashap
