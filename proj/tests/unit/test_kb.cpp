#include <doctest.h>

#include <fstream>

#include "common/oracles.hpp"
#include "metashap/benchgen.hpp"
#include "metashap/error.hpp"
#include "metashap/kb.hpp"

using namespace metashap;

namespace {

KnowledgeBase singleton_kb() {
    KnowledgeBase kb;
    kb.spaces["alg1"] = HyperparameterSpace({ParamSpec::continuous("x", 0.0, 1.0, 0.5)});
    MetaFeatureVector mf;
    for (std::size_t i = 0; i < kMetaFeatureCount; ++i) mf[i] = 0.25 * static_cast<double>(i) + 1.0 / 3.0;
    kb.meta_registry["d1"] = mf;
    kb.records.push_back({"d1", "alg1", {{"x", 0.5}}, 0.9});
    return kb;
}

Benchmark small_bench() {
    BenchmarkOptions opts;
    opts.n_datasets = 10;
    opts.configs_per_dataset = 400;
    return generate_kb(opts);
}

} // namespace

TEST_CASE("empty bundle loads with zero counts") {
    const auto dir = oracle::scratch_dir("kb_empty");
    save_kb(KnowledgeBase{}, dir);
    const auto kb = load_kb(dir);
    CHECK(kb.records.empty());
    CHECK(kb.meta_registry.empty());
    CHECK(kb.spaces.empty());
}

TEST_CASE("singleton bundle round-trips") {
    const auto dir = oracle::scratch_dir("kb_single");
    const auto kb = singleton_kb();
    save_kb(kb, dir);
    const auto loaded = load_kb(dir);
    CHECK(loaded.records.size() == 1);
    CHECK(loaded == kb);
    CHECK(query(loaded, "alg1", {"d1"}) == loaded.records);
    CHECK(query(loaded, "alg1", {}).empty());
}

TEST_CASE("benchgen bundle: counts and round-trip") {
    const auto bench = small_bench();
    const auto dir = oracle::scratch_dir("kb_bench");
    save_kb(bench.kb, dir);
    const auto kb = load_kb(dir);
    CHECK(kb == bench.kb);
    CHECK(kb.records.size() == 4000);
    CHECK(kb.meta_registry.size() == 10);

    std::map<std::string, std::size_t> emitted;
    for (const auto& r : bench.kb.records) ++emitted[r.dataset_id];
    std::size_t total = 0;
    for (const auto& [id, n] : kb.records_per_dataset("xgboost")) {
        CHECK(n == emitted[id]);
        total += n;
    }
    CHECK(total == 4000);

    const std::set<std::string> three = {"ds001", "ds004", "ds007"};
    const auto hits = query(kb, "xgboost", three);
    std::size_t scan = 0;
    for (const auto& r : kb.records) scan += three.count(r.dataset_id);
    CHECK(hits.size() == scan);
    CHECK(hits.size() == emitted["ds001"] + emitted["ds004"] + emitted["ds007"]);
}

TEST_CASE("query is an order-preserving filter over a partition") {
    const auto bench = small_bench();
    const auto& kb = bench.kb;
    std::vector<std::set<std::string>> parts(3);
    std::size_t i = 0;
    for (const auto& [id, _] : kb.meta_registry) parts[i++ % 3].insert(id);
    std::size_t total = 0;
    for (const auto& part : parts) {
        const auto hits = query(kb, "xgboost", part);
        std::size_t pos = 0;
        for (const auto& h : hits) {
            while (pos < kb.records.size() && !(kb.records[pos] == h)) ++pos;
            REQUIRE(pos < kb.records.size());
            ++pos;
        }
        total += hits.size();
    }
    CHECK(total == kb.records.size());
    CHECK_THROWS_AS(query(kb, "svm", {"ds000"}), ValidationError);
}

TEST_CASE("load errors") {
    CHECK_THROWS_AS(load_kb("/nonexistent/metashap_kb"), LoadError);

    const auto dir = oracle::scratch_dir("kb_bad");
    auto kb = singleton_kb();
    save_kb(kb, dir);
    {
        std::ofstream out(dir / "records.jsonl", std::ios::app);
        out << R"({"dataset_id":"d9","algorithm_id":"alg1","config":{"x":0.5},"performance":0.5})" << '\n';
    }
    try {
        load_kb(dir);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("d9") != std::string::npos);
    }

    save_kb(kb, dir);
    {
        std::ofstream out(dir / "records.jsonl", std::ios::app);
        out << R"({"dataset_id":"d1","algorithm_id":"alg1","config":{"x":0.5},"performance":1.5})" << '\n';
    }
    CHECK_THROWS_AS(load_kb(dir), ValidationError);

    save_kb(kb, dir);
    {
        std::ofstream out(dir / "records.jsonl", std::ios::app);
        out << R"({"dataset_id":"d1","algorithm_id":"alg1","config":{"x":0.5,"y":1},"performance":0.5})" << '\n';
    }
    CHECK_THROWS_AS(load_kb(dir), ValidationError);
}

TEST_CASE("duplicate records are kept") {
    auto kb = singleton_kb();
    kb.records.push_back(kb.records.front());
    const auto dir = oracle::scratch_dir("kb_dup");
    save_kb(kb, dir);
    CHECK(load_kb(dir).records.size() == 2);
}
