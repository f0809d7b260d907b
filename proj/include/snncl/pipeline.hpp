#pragma once

#include <snncl/common.hpp>
#include <snncl/csv.hpp>
#include <snncl/encoding.hpp>
#include <snncl/store.hpp>
#include <snncl/synth.hpp>
#include <snncl/task.hpp>
#include <snncl/timeseries.hpp>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace snncl {

struct PrepareOptions {
    int window_len = 50;
    int train_stride = 10;  // normal-window extraction; attack regions use stride 1
    double ratio = 3.0;     // normal : attack
    double split = 0.8;     // train fraction
    std::uint64_t seed = 42;
};

// Shared tail of both prepare paths: stats from the normal streams, z-score
// everything, window, and assemble one task per attack label column.
inline TaskStore build_tasks(const std::vector<TimeSeries>& normal_streams,
                             const std::vector<TimeSeries>& attack_streams,
                             const SensorSchema& schema, const PrepareOptions& opt) {
    if (normal_streams.empty() || attack_streams.empty())
        throw InputError("build_tasks: need at least one normal and one attack stream");

    // pooled stats over all normal rows
    TimeSeries pooled;
    {
        std::int64_t rows = 0;
        for (const auto& s : normal_streams) rows += s.rows();
        pooled.values.resize(rows, normal_streams[0].dim());
        std::int64_t at = 0;
        for (const auto& s : normal_streams) {
            pooled.values.middleRows(at, s.rows()) = s.values;
            at += s.rows();
        }
    }
    const DatasetStats stats = compute_stats(pooled);

    TaskStore store;
    store.window_len = opt.window_len;
    store.schema = schema;
    store.stats = stats;

    static constexpr TaskId kIds[] = {TaskId::Boiler, TaskId::Turbine, TaskId::Water};
    static constexpr const char* kCols[] = {"attack_P1", "attack_P2", "attack_P3"};

    for (int k = 0; k < 3; ++k) {
        const int label_idx = schema.label_index(kCols[k]);

        std::vector<Window> normal_pool;
        for (const auto& s : normal_streams) {
            auto norm = normalize(s, stats);
            auto wins = extract_windows(norm, opt.window_len, opt.train_stride, label_idx);
            normal_pool.insert(normal_pool.end(), wins.begin(), wins.end());
        }
        std::vector<Window> attack_windows;
        for (const auto& s : attack_streams) {
            auto norm = normalize(s, stats);
            for (auto& w : extract_windows(norm, opt.window_len, 1, label_idx))
                if (w.label) attack_windows.push_back(std::move(w));
        }
        if (attack_windows.empty())
            throw InputError(std::string("no attack windows for ") + kCols[k]);

        store.tasks.push_back(build_task(kIds[k], kCols[k], normal_pool, attack_windows,
                                         opt.ratio, opt.split,
                                         derive_seed(opt.seed, "task-seed", std::uint64_t(k))));
    }
    store.manifest["seed"] = opt.seed;
    store.manifest["ratio"] = opt.ratio;
    store.manifest["split"] = opt.split;
    store.manifest["train_stride"] = opt.train_stride;
    return store;
}

// Thresholds for windows that were z-scored with `raw_stats`: every live
// column has unit variance there, so theta reduces to alpha; constant columns
// stay at zero and never spike.
inline EncoderConfig encoder_for_normalized(const DatasetStats& raw_stats, double alpha,
                                            EncodingMode mode) {
    EncoderConfig cfg;
    cfg.alpha = alpha;
    cfg.mode = mode;
    cfg.thresholds = VecD::Constant(raw_stats.dim(), alpha);
    for (int c = 0; c < raw_stats.dim(); ++c)
        if (raw_stats.std[c] < kDegenerateStd) cfg.thresholds[c] = 0.0;
    return cfg;
}

inline TaskStore prepare_synthetic(const SynthConfig& config, const PrepareOptions& opt) {
    auto gen = synth_generate(config, opt.seed);
    auto store = build_tasks({gen.train}, {gen.test}, gen.schema, opt);
    store.manifest["provenance"] = {{"generator", "synthetic"}, {"config", config.to_json()}};
    return store;
}

// HAI layout: train*.csv are all-normal, test*.csv carry labeled attacks.
inline TaskStore prepare_hai(const std::string& data_dir, const SensorSchema* schema_opt,
                             const PrepareOptions& opt, char delimiter = ',') {
    namespace fs = std::filesystem;
    if (!fs::is_directory(data_dir)) throw InputError("data directory not found: " + data_dir);
    std::vector<std::string> train_files, test_files;
    for (const auto& e : fs::directory_iterator(data_dir)) {
        if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
        const auto name = e.path().filename().string();
        if (name.rfind("train", 0) == 0) train_files.push_back(e.path().string());
        if (name.rfind("test", 0) == 0) test_files.push_back(e.path().string());
    }
    std::sort(train_files.begin(), train_files.end());
    std::sort(test_files.begin(), test_files.end());
    if (train_files.empty() || test_files.empty())
        throw InputError("expected train*.csv and test*.csv under " + data_dir);

    SensorSchema schema = schema_opt
                              ? *schema_opt
                              : SensorSchema::infer_from_header(
                                    read_csv_header(train_files[0], delimiter));

    std::vector<TimeSeries> normals, attacks;
    int file_id = 0;
    for (const auto& f : train_files) normals.push_back(load_csv(f, schema, delimiter, file_id++));
    for (const auto& f : test_files) attacks.push_back(load_csv(f, schema, delimiter, file_id++));

    auto store = build_tasks(normals, attacks, schema, opt);
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : train_files) files.push_back({{"file", f}, {"role", "train"}});
    for (const auto& f : test_files) files.push_back({{"file", f}, {"role", "test"}});
    store.manifest["provenance"] = {{"generator", "hai"}, {"files", files}};
    return store;
}

}  // namespace snncl
