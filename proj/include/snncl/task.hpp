#pragma once

#include <snncl/common.hpp>
#include <snncl/timeseries.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace snncl {

enum class TaskId { Boiler, Turbine, Water };

inline const char* to_string(TaskId t) {
    switch (t) {
        case TaskId::Boiler: return "boiler";
        case TaskId::Turbine: return "turbine";
        case TaskId::Water: return "water";
    }
    return "?";
}

struct TaskData {
    TaskId id = TaskId::Boiler;
    std::string attack_column;
    std::vector<Window> train;
    std::vector<Window> test;
};

namespace detail {

// Partial Fisher-Yates: first k slots of a shuffled index permutation.
// Hand-rolled so sampling is identical across standard library versions.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        const std::size_t j = i + rng() % (n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(std::min(k, n));
    return idx;
}

}  // namespace detail

// Assemble a task pool at `ratio` normal windows per attack window, then split
// train/test per class.  Rounding keeps attack windows in the training split.
inline TaskData build_task(TaskId id, const std::string& attack_column,
                           const std::vector<Window>& normal_pool,
                           const std::vector<Window>& attack_windows, double ratio, double split,
                           std::uint64_t seed) {
    if (attack_windows.empty()) throw InputError("build_task: no attack windows");
    if (split <= 0.0 || split >= 1.0) throw InputError("build_task: split must be in (0,1)");

    const std::size_t n_attack = attack_windows.size();
    const auto n_normal = static_cast<std::size_t>(std::llround(ratio * double(n_attack)));
    if (normal_pool.size() < n_normal)
        throw InputError("build_task: need " + std::to_string(n_normal) + " normal windows, have " +
                         std::to_string(normal_pool.size()) + " (short by " +
                         std::to_string(n_normal - normal_pool.size()) + ")");

    std::mt19937_64 rng(derive_seed(seed, "build-task"));
    const auto picks = detail::sample_indices(normal_pool.size(), n_normal, rng);

    std::vector<Window> normals;
    normals.reserve(n_normal);
    for (auto i : picks) {
        if (normal_pool[i].label != 0)
            throw DataError("build_task: normal pool contains an attack-labeled window");
        normals.push_back(normal_pool[i]);
    }

    TaskData task;
    task.id = id;
    task.attack_column = attack_column;

    // attacks: round train count up; normals: round down
    const auto attack_train = static_cast<std::size_t>(std::ceil(split * double(n_attack)));
    const auto normal_train = static_cast<std::size_t>(std::floor(split * double(normals.size())));

    auto shuffled = [&](const std::vector<Window>& wins, const char* tag) {
        std::mt19937_64 r(derive_seed(seed, tag));
        auto order = detail::sample_indices(wins.size(), wins.size(), r);
        std::vector<Window> out;
        out.reserve(wins.size());
        for (auto i : order) out.push_back(wins[i]);
        return out;
    };
    const auto attacks_sh = shuffled(attack_windows, "split-attack");
    const auto normals_sh = shuffled(normals, "split-normal");

    for (std::size_t i = 0; i < attacks_sh.size(); ++i)
        (i < attack_train ? task.train : task.test).push_back(attacks_sh[i]);
    for (std::size_t i = 0; i < normals_sh.size(); ++i)
        (i < normal_train ? task.train : task.test).push_back(normals_sh[i]);
    return task;
}

}  // namespace snncl
