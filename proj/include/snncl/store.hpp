#pragma once

#include <snncl/common.hpp>
#include <snncl/schema.hpp>
#include <snncl/task.hpp>
#include <snncl/timeseries.hpp>

#include <json.hpp>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace snncl {

// Windowed task store, one file per task.  Little-endian layout:
//
//   offset  size  field
//   0       8     magic "SNCLWST1"
//   8       4     u32 version (=1)
//   12      4     u32 window length L
//   16      4     u32 sensor dim D
//   20      8     u64 train window count
//   28      8     u64 test window count
//   36      ...   windows, train block then test block; each window is
//                 i32 file_id, i64 start, u8 label, f32[L*D] data row-major
//
// A JSON manifest alongside the .bin files records seed, ratios, stats and
// provenance.

inline constexpr char kWindowStoreMagic[8] = {'S', 'N', 'C', 'L', 'W', 'S', 'T', '1'};
inline constexpr std::uint32_t kWindowStoreVersion = 1;

static_assert(sizeof(float) == 4);

namespace detail {

template <class T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("unexpected end of file in binary container");
    return v;
}

inline void write_window_block(std::ofstream& out, const std::vector<Window>& wins) {
    for (const auto& w : wins) {
        write_pod(out, static_cast<std::int32_t>(w.file_id));
        write_pod(out, static_cast<std::int64_t>(w.start));
        write_pod(out, w.label);
        out.write(reinterpret_cast<const char*>(w.data.data()),
                  std::streamsize(sizeof(float)) * w.data.size());
    }
}

inline std::vector<Window> read_window_block(std::ifstream& in, std::uint64_t count,
                                             std::uint32_t l, std::uint32_t d) {
    std::vector<Window> wins;
    wins.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Window w;
        w.file_id = read_pod<std::int32_t>(in);
        w.start = read_pod<std::int64_t>(in);
        w.label = read_pod<std::uint8_t>(in);
        w.data.resize(l, d);
        in.read(reinterpret_cast<char*>(w.data.data()),
                std::streamsize(sizeof(float)) * w.data.size());
        if (!in) throw DataError("unexpected end of file in window payload");
        wins.push_back(std::move(w));
    }
    return wins;
}

}  // namespace detail

inline void save_task_windows(const std::string& path, const TaskData& task, int window_len,
                              int dim) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write task store: " + path);
    out.write(kWindowStoreMagic, 8);
    detail::write_pod(out, kWindowStoreVersion);
    detail::write_pod(out, static_cast<std::uint32_t>(window_len));
    detail::write_pod(out, static_cast<std::uint32_t>(dim));
    detail::write_pod(out, static_cast<std::uint64_t>(task.train.size()));
    detail::write_pod(out, static_cast<std::uint64_t>(task.test.size()));
    detail::write_window_block(out, task.train);
    detail::write_window_block(out, task.test);
    if (!out) throw InputError("write failed: " + path);
}

inline TaskData load_task_windows(const std::string& path, TaskId id,
                                  const std::string& attack_column) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open task store: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kWindowStoreMagic, 8) != 0)
        throw DataError("bad magic in task store: " + path);
    const auto version = detail::read_pod<std::uint32_t>(in);
    if (version != kWindowStoreVersion)
        throw DataError("unsupported task store version " + std::to_string(version));
    const auto l = detail::read_pod<std::uint32_t>(in);
    const auto d = detail::read_pod<std::uint32_t>(in);
    const auto n_train = detail::read_pod<std::uint64_t>(in);
    const auto n_test = detail::read_pod<std::uint64_t>(in);
    TaskData task;
    task.id = id;
    task.attack_column = attack_column;
    task.train = detail::read_window_block(in, n_train, l, d);
    task.test = detail::read_window_block(in, n_test, l, d);
    return task;
}

inline std::uint64_t file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file for fingerprint: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
    }
    return h;
}

// Everything a downstream command needs to rebuild the pipeline on a store.
struct TaskStore {
    int window_len = 50;
    std::vector<TaskData> tasks;
    SensorSchema schema;
    DatasetStats stats;  // training-stream stats used for normalization/thresholds
    nlohmann::json manifest;

    int dim() const { return schema.dim(); }
};

inline nlohmann::json stats_to_json(const DatasetStats& st) {
    auto vec = [](const VecD& v) {
        std::vector<double> out(v.data(), v.data() + v.size());
        return out;
    };
    return {{"mean", vec(st.mean)}, {"std", vec(st.std)}, {"min", vec(st.min)},
            {"max", vec(st.max)}};
}

inline DatasetStats stats_from_json(const nlohmann::json& j) {
    auto vec = [](const nlohmann::json& a) {
        auto v = a.get<std::vector<double>>();
        return Eigen::Map<const VecD>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
    };
    DatasetStats st;
    st.mean = vec(j.at("mean"));
    st.std = vec(j.at("std"));
    st.min = vec(j.at("min"));
    st.max = vec(j.at("max"));
    return st;
}

inline void save_task_store(const std::string& dir, const TaskStore& store) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest = store.manifest;
    manifest["version"] = kWindowStoreVersion;
    manifest["window_len"] = store.window_len;
    manifest["dim"] = store.dim();
    manifest["schema"] = store.schema.to_json();
    manifest["stats"] = stats_to_json(store.stats);
    nlohmann::json tasks = nlohmann::json::array();
    for (const auto& t : store.tasks) {
        const std::string file = "task_" + std::string(to_string(t.id)) + ".bin";
        save_task_windows((fs::path(dir) / file).string(), t, store.window_len, store.dim());
        tasks.push_back({{"name", to_string(t.id)},
                         {"attack_column", t.attack_column},
                         {"file", file},
                         {"n_train", t.train.size()},
                         {"n_test", t.test.size()},
                         {"fingerprint", file_fingerprint((fs::path(dir) / file).string())}});
    }
    manifest["tasks"] = tasks;
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << '\n';
}

inline TaskStore load_task_store(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw InputError("cannot open task store manifest: " + manifest_path.string());
    TaskStore store;
    in >> store.manifest;
    store.window_len = store.manifest.at("window_len").get<int>();
    store.schema = SensorSchema::from_json(store.manifest.at("schema"));
    store.stats = stats_from_json(store.manifest.at("stats"));
    static constexpr TaskId kIds[] = {TaskId::Boiler, TaskId::Turbine, TaskId::Water};
    std::size_t i = 0;
    for (const auto& t : store.manifest.at("tasks")) {
        const TaskId id = i < 3 ? kIds[i] : TaskId::Water;
        store.tasks.push_back(load_task_windows((fs::path(dir) / t.at("file").get<std::string>()).string(),
                                                id, t.at("attack_column").get<std::string>()));
        ++i;
    }
    return store;
}

}  // namespace snncl
