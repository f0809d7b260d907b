#pragma once

#include <snncl/common.hpp>
#include <snncl/metrics.hpp>
#include <snncl/svg.hpp>

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace snncl {

// One completed training run as found on disk (summary.json in a run dir).
struct RunSummary {
    std::string name;
    nlohmann::json summary;
};

inline std::vector<RunSummary> scan_runs(const std::string& dir) {
    namespace fs = std::filesystem;
    std::vector<RunSummary> runs;
    if (!fs::exists(dir)) return runs;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().filename() != "summary.json") continue;
        std::ifstream in(entry.path());
        RunSummary r;
        r.name = fs::relative(entry.path().parent_path(), dir).string();
        in >> r.summary;
        runs.push_back(std::move(r));
    }
    std::sort(runs.begin(), runs.end(),
              [](const RunSummary& a, const RunSummary& b) { return a.name < b.name; });
    return runs;
}

// Consolidate run summaries into CSV tables, a markdown digest, and SVG
// charts (F1 evolution per task; buffer sweep when present).  Missing
// artifacts are listed, not fatal.
inline void report_tables(const std::string& runs_dir, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto runs = scan_runs(runs_dir);

    std::vector<std::string> gaps;
    std::ofstream md(fs::path(out_dir) / "report.md");
    md << "# Run report\n\nScanned `" << runs_dir << "`: " << runs.size() << " run(s).\n\n";

    // strategy comparison table, sorted by avg F1
    struct Row {
        std::string name, strategy;
        std::vector<double> final_f1;
        double avg_f1 = 0, af = -1;
        bool af_applicable = false;
    };
    std::vector<Row> rows;
    for (const auto& r : runs) {
        Row row;
        row.name = r.name;
        row.strategy = r.summary.value("strategy", "?");
        if (r.summary.contains("task_matrix")) {
            const auto m = TaskMatrix::from_json(r.summary.at("task_matrix"));
            row.final_f1 = m.final_row();
            row.avg_f1 = m.average_final_f1();
            const auto af = average_forgetting(m);
            row.af_applicable = af.applicable;
            row.af = af.average;
        } else if (r.summary.contains("per_task_f1")) {
            row.final_f1 = r.summary.at("per_task_f1").get<std::vector<double>>();
            for (double v : row.final_f1) row.avg_f1 += v;
            if (!row.final_f1.empty()) row.avg_f1 /= double(row.final_f1.size());
        } else {
            gaps.push_back(r.name + ": no task_matrix or per_task_f1");
            continue;
        }
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.avg_f1 > b.avg_f1; });

    {
        std::ofstream csv(fs::path(out_dir) / "comparison.csv");
        csv << "run,strategy,avg_f1,average_forgetting,per_task_f1\n";
        md << "## Strategy comparison\n\n|run|strategy|Avg F1|AF|\n|---|---|---|---|\n";
        for (const auto& row : rows) {
            csv << row.name << ',' << row.strategy << ',' << row.avg_f1 << ',';
            if (row.af_applicable) csv << row.af;
            else csv << "n/a";
            csv << ",\"";
            for (std::size_t i = 0; i < row.final_f1.size(); ++i)
                csv << (i ? ";" : "") << row.final_f1[i];
            csv << "\"\n";
            md << '|' << row.name << '|' << row.strategy << '|' << row.avg_f1 << '|'
               << (row.af_applicable ? std::to_string(row.af) : std::string("n/a")) << "|\n";
        }
        md << '\n';
    }

    // forgetting curves: F1 of each task as training advances
    {
        std::ofstream csv(fs::path(out_dir) / "forgetting_curves.csv");
        csv << "run,strategy,task,after_task,f1\n";
        for (const auto& r : runs) {
            if (!r.summary.contains("task_matrix")) continue;
            const auto m = TaskMatrix::from_json(r.summary.at("task_matrix"));
            for (int k = 0; k < m.n_tasks; ++k)
                for (int j = k; j < m.n_tasks; ++j)
                    csv << r.name << ',' << r.summary.value("strategy", "?") << ',' << k + 1
                        << ',' << j + 1 << ',' << m.get(j, k) << '\n';
        }
    }

    // chart: task-1 F1 across training stages for every sequential run
    {
        LineChart chart;
        chart.title = "Task 1 F1 across sequential training";
        chart.x_label = "after training task";
        chart.y_label = "F1";
        for (const auto& r : runs) {
            if (!r.summary.contains("task_matrix")) continue;
            const auto m = TaskMatrix::from_json(r.summary.at("task_matrix"));
            if (m.n_tasks < 2) continue;
            std::vector<double> x, y;
            for (int j = 0; j < m.n_tasks; ++j) {
                x.push_back(j + 1);
                y.push_back(m.get(j, 0));
            }
            chart.add(r.summary.value("strategy", r.name), std::move(x), std::move(y));
        }
        if (!chart.series.empty())
            chart.write((fs::path(out_dir) / "f1_vs_task.svg").string());
        else
            gaps.push_back("no sequential runs for f1_vs_task.svg");
    }

    // buffer sweep chart when sweep summaries are present
    {
        LineChart chart;
        chart.title = "Replay buffer size sweep";
        chart.x_label = "buffer size (samples/task)";
        chart.y_label = "Avg F1";
        std::vector<double> x, y;
        for (const auto& r : runs) {
            if (!r.summary.contains("sweep_value") ||
                r.summary.value("sweep", "") != "buffer")
                continue;
            if (!r.summary.contains("task_matrix")) continue;
            const auto m = TaskMatrix::from_json(r.summary.at("task_matrix"));
            x.push_back(r.summary.at("sweep_value").get<double>());
            y.push_back(m.average_final_f1());
        }
        if (!x.empty()) {
            std::vector<std::size_t> order(x.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
            std::vector<double> xs, ys;
            for (auto i : order) {
                xs.push_back(x[i]);
                ys.push_back(y[i]);
            }
            chart.add("avg F1", xs, ys);
            chart.write((fs::path(out_dir) / "buffer_sweep.svg").string());
        }
    }

    if (!gaps.empty()) {
        md << "## Gaps\n\n";
        for (const auto& g : gaps) md << "- " << g << '\n';
    }
}

}  // namespace snncl
