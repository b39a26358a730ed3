#include "vroute/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "vroute/errors.hpp"

namespace vroute {

double chance_uniform(std::span<const Sample> samples) {
    if (samples.empty()) throw InvalidInput("chance_uniform: no samples");
    // Grouped by option count so a fixed-K set gives exactly 1.0 / K.
    std::map<std::size_t, std::size_t> by_k;
    for (const auto& s : samples) {
        if (s.response_options.empty()) throw IntegrityError("sample " + s.sample_id + " has no options");
        ++by_k[s.response_options.size()];
    }
    const auto n = static_cast<double>(samples.size());
    double sum = 0.0;
    for (const auto& [k, count] : by_k) sum += (static_cast<double>(count) / n) * (1.0 / static_cast<double>(k));
    return sum;
}

double chance_majority(std::span<const Sample> samples) {
    if (samples.empty()) throw InvalidInput("chance_majority: no samples");
    std::map<std::string, std::size_t> counts;
    std::size_t best = 0;
    for (const auto& s : samples) best = std::max(best, ++counts[s.gold_option()]);
    return static_cast<double>(best) / static_cast<double>(samples.size());
}

double average_baseline(const AccuracyTable& table, const std::string& dataset_id,
                        const std::vector<std::string>& models) {
    if (models.empty()) throw InvalidInput("average_baseline: no models");
    double sum = 0.0;
    for (const auto& m : models) sum += table.marginal(m, dataset_id);
    return sum / static_cast<double>(models.size());
}

int voting_predict(std::span<const int> predictions) {
    if (predictions.empty()) throw InvalidInput("voting_predict: no predictions");
    std::map<int, std::size_t> counts;
    for (int p : predictions) ++counts[p];
    int best = counts.begin()->first;
    std::size_t best_n = 0;
    for (const auto& [index, n] : counts)
        if (n > best_n) {
            best = index;
            best_n = n;
        }
    return best;
}

double voting_accuracy(const OutcomeGrid& grid, const std::string& dataset_id) {
    return grid.dataset_accuracy(grid.block(dataset_id), [](const auto&, const OutcomeGrid::Pair& p) {
        return voting_predict(p.predicted) == p.sample->gold_index;
    });
}

double oracle_accuracy(const AccuracyTable& table, const std::string& dataset_id,
                       const std::vector<std::string>& models) {
    if (models.empty()) throw InvalidInput("oracle_accuracy: no models");
    double best = 0.0;
    for (const auto& m : models) best = std::max(best, table.marginal(m, dataset_id));
    return best;
}

double upper_bound_accuracy(const OutcomeGrid& grid, const std::string& dataset_id) {
    return grid.dataset_accuracy(grid.block(dataset_id),
                                 [](const auto&, const OutcomeGrid::Pair& p) { return p.any_correct(); });
}

std::string to_string(ChanceMode m) { return m == ChanceMode::uniform ? "uniform" : "majority"; }

ChanceMode chance_mode_from_string(const std::string& text) {
    if (text == "uniform") return ChanceMode::uniform;
    if (text == "majority") return ChanceMode::majority;
    throw InvalidInput("unknown chance mode '" + text + "'");
}

const std::vector<std::string>& ComparisonReport::strategies() {
    static const std::vector<std::string> s{"chance", "average", "voting", "router", "oracle", "upper_bound"};
    return s;
}

const std::vector<std::string>& ComparisonReport::cost_row() {
    static const std::vector<std::string> c{"-", "O(1)", "O(N)", "O(1)", "O(N)", "O(N)"};
    return c;
}

namespace {

std::string fixed1(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 1);
    return std::string(buf, r.ptr);
}

void summarize(ComparisonReport& report) {
    report.average.clear();
    report.weighted_average.clear();
    for (const auto& s : ComparisonReport::strategies()) {
        std::map<std::string, double> values;
        std::map<std::string, std::size_t> sizes;
        bool complete = !report.rows.empty();
        for (const auto& row : report.rows) {
            auto it = row.percent.find(s);
            if (it == row.percent.end()) {
                complete = false;
                break;
            }
            values[row.dataset_id] = it->second;
            sizes[row.dataset_id] = row.size;
        }
        if (!complete) continue;
        double sum = 0.0;
        for (const auto& [id, v] : values) sum += v;
        report.average[s] = sum / static_cast<double>(values.size());
        report.weighted_average[s] = weighted_average(values, sizes);
    }
}

}  // namespace

std::string ComparisonReport::to_csv() const {
    std::ostringstream out;
    out << "dataset";
    for (const auto& s : strategies()) out << ',' << s;
    out << '\n';
    auto summary_line = [&](const std::string& label, const std::map<std::string, double>& values) {
        out << '"' << label << '"';
        for (const auto& s : strategies()) {
            auto it = values.find(s);
            out << ',' << (it == values.end() ? std::string("n/a") : fixed1(it->second));
        }
        out << '\n';
    };
    for (const auto& row : rows) {
        out << row.dataset_id;
        for (const auto& s : strategies()) {
            auto it = row.percent.find(s);
            if (it != row.percent.end()) out << ',' << fixed1(it->second);
            else out << ',' << (s == "router" && !row.router_error.empty() ? "failed" : "n/a");
        }
        out << '\n';
    }
    summary_line("Average", average);
    summary_line("Average (Weighted)", weighted_average);
    out << "\"Cost Over No. of Models\"";
    for (const auto& c : cost_row()) out << ',' << c;
    out << '\n';
    return out.str();
}

nlohmann::json ComparisonReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json r{{"dataset_id", row.dataset_id}, {"size", row.size}, {"percent", row.percent}};
        if (!row.router_error.empty()) r["router_error"] = row.router_error;
        rows_json.push_back(std::move(r));
    }
    nlohmann::json cost = nlohmann::json::object();
    for (std::size_t i = 0; i < strategies().size(); ++i) cost[strategies()[i]] = cost_row()[i];
    return {{"chance_mode", to_string(chance_mode)},
            {"strategies", strategies()},
            {"rows", rows_json},
            {"average", average},
            {"weighted_average", weighted_average},
            {"cost", cost}};
}

ComparisonReport ComparisonReport::from_json(const nlohmann::json& j) {
    ComparisonReport r;
    r.chance_mode = chance_mode_from_string(j.value("chance_mode", std::string("uniform")));
    for (const auto& row : j.at("rows")) {
        Row out;
        row.at("dataset_id").get_to(out.dataset_id);
        row.at("size").get_to(out.size);
        row.at("percent").get_to(out.percent);
        out.router_error = row.value("router_error", std::string());
        r.rows.push_back(std::move(out));
    }
    summarize(r);
    return r;
}

ComparisonReport build_comparison_report(const World& world, const OutcomeGrid& grid, const AccuracyTable& table,
                                         const std::map<std::string, double>& router_accuracy,
                                         const std::map<std::string, std::string>& router_failures,
                                         ChanceMode chance_mode) {
    ComparisonReport report;
    report.chance_mode = chance_mode;
    const auto& models = grid.models();
    for (const auto& block : grid.blocks()) {
        const auto& d = world.dataset(block.dataset_id);
        ComparisonReport::Row row;
        row.dataset_id = d.dataset_id;
        row.size = d.size();
        const double chance =
            chance_mode == ChanceMode::uniform ? chance_uniform(d.samples) : chance_majority(d.samples);
        row.percent["chance"] = 100.0 * chance;
        row.percent["average"] = 100.0 * average_baseline(table, d.dataset_id, models);
        row.percent["voting"] = 100.0 * voting_accuracy(grid, d.dataset_id);
        if (auto f = router_failures.find(d.dataset_id); f != router_failures.end()) {
            row.router_error = f->second;
        } else if (auto it = router_accuracy.find(d.dataset_id); it != router_accuracy.end()) {
            row.percent["router"] = 100.0 * it->second;
        }
        row.percent["oracle"] = 100.0 * oracle_accuracy(table, d.dataset_id, models);
        row.percent["upper_bound"] = 100.0 * upper_bound_accuracy(grid, d.dataset_id);
        report.rows.push_back(std::move(row));
    }
    summarize(report);
    return report;
}

}  // namespace vroute
