#include "vroute/core.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "vroute/errors.hpp"

namespace vroute {

std::string to_string(TaskKind kind) {
    return kind == TaskKind::recognition ? "recognition" : "reasoning";
}

TaskKind task_kind_from_string(const std::string& text) {
    if (text == "recognition") return TaskKind::recognition;
    if (text == "reasoning") return TaskKind::reasoning;
    throw InvalidInput("unknown task kind '" + text + "'");
}

void DatasetManifest::validate() const {
    std::set<std::string> seen;
    for (const Sample& s : samples) {
        if (s.dataset_id != dataset_id)
            throw IntegrityError("sample " + s.sample_id + " belongs to " + s.dataset_id + ", not " + dataset_id);
        if (!seen.insert(s.sample_id).second)
            throw IntegrityError("duplicate sample id " + s.sample_id + " in " + dataset_id);
        if (s.response_options.empty()) throw IntegrityError("sample " + s.sample_id + " has no response options");
        if (s.gold_index < 0 || static_cast<std::size_t>(s.gold_index) >= s.response_options.size())
            throw IntegrityError("sample " + s.sample_id + " has gold index out of range");
    }
}

void MetadataSummary::validate() const {
    if (height < 1 || width < 1 || channels < 1) throw InvalidInput("metadata dims must be >= 1");
    if (channel_means.size() != static_cast<std::size_t>(channels) ||
        channel_stds.size() != static_cast<std::size_t>(channels))
        throw InvalidInput("metadata channel statistics do not match channel count");
    for (double s : channel_stds)
        if (s < 0.0) throw InvalidInput("metadata std must be non-negative");
}

namespace {
std::string sample_key(const std::string& dataset_id, const std::string& sample_id) {
    std::string key;
    key.reserve(dataset_id.size() + sample_id.size() + 1);
    key.append(dataset_id).push_back('\x1f');
    key.append(sample_id);
    return key;
}
}  // namespace

SampleIndex::SampleIndex(std::span<const DatasetManifest> datasets) {
    for (const DatasetManifest& d : datasets)
        for (const Sample& s : d.samples) by_key_.emplace(sample_key(s.dataset_id, s.sample_id), &s);
}

const Sample* SampleIndex::find(const std::string& dataset_id, const std::string& sample_id) const {
    auto it = by_key_.find(sample_key(dataset_id, sample_id));
    return it == by_key_.end() ? nullptr : it->second;
}

const Sample& SampleIndex::at(const std::string& dataset_id, const std::string& sample_id) const {
    const Sample* s = find(dataset_id, sample_id);
    if (s == nullptr) throw IntegrityError("unknown sample " + dataset_id + "/" + sample_id);
    return *s;
}

void AccuracyTable::add(const ExecutionRecord& record) {
    AccuracyCell& cell = cells_[AccuracyKey{record.model_id, record.dataset_id, record.prompt_variant_id}];
    cell.total += 1;
    cell.correct += record.correct ? 1 : 0;
}

void AccuracyTable::merge(const AccuracyTable& other) {
    for (const auto& [key, cell] : other.cells_) cells_[key] += cell;
}

std::optional<double> AccuracyTable::find(const std::string& model_id, const std::string& dataset_id,
                                          const std::string& variant_id) const {
    auto it = cells_.find(AccuracyKey{model_id, dataset_id, variant_id});
    if (it == cells_.end()) return std::nullopt;
    return it->second.accuracy();
}

double AccuracyTable::accuracy(const std::string& model_id, const std::string& dataset_id,
                               const std::string& variant_id) const {
    auto value = find(model_id, dataset_id, variant_id);
    if (!value) throw IntegrityError("no accuracy for " + model_id + "/" + dataset_id + "/" + variant_id);
    return *value;
}

std::optional<double> AccuracyTable::find_marginal(const std::string& model_id, const std::string& dataset_id) const {
    auto it = cells_.lower_bound(AccuracyKey{model_id, dataset_id, ""});
    double sum = 0.0;
    std::size_t n = 0;
    for (; it != cells_.end() && it->first.model_id == model_id && it->first.dataset_id == dataset_id; ++it) {
        sum += it->second.accuracy();
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

double AccuracyTable::marginal(const std::string& model_id, const std::string& dataset_id) const {
    auto value = find_marginal(model_id, dataset_id);
    if (!value) throw IntegrityError("no accuracy for " + model_id + "/" + dataset_id);
    return *value;
}

std::vector<std::string> AccuracyTable::models() const {
    std::set<std::string> out;
    for (const auto& [key, cell] : cells_) out.insert(key.model_id);
    return {out.begin(), out.end()};
}

std::vector<std::string> AccuracyTable::datasets() const {
    std::set<std::string> out;
    for (const auto& [key, cell] : cells_) out.insert(key.dataset_id);
    return {out.begin(), out.end()};
}

std::string AccuracyTable::to_csv() const {
    std::ostringstream out;
    out << "model_id,dataset_id,prompt_variant_id,accuracy\n";
    char buf[64];
    for (const auto& [key, cell] : cells_) {
        auto res = std::to_chars(buf, buf + sizeof buf, cell.accuracy(), std::chars_format::fixed, 6);
        out << key.model_id << ',' << key.dataset_id << ',' << key.prompt_variant_id << ','
            << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
    }
    return out.str();
}

AccuracyTable aggregate_accuracy(std::span<const ExecutionRecord> records, const SampleIndex& samples) {
    if (records.empty()) throw InvalidInput("aggregate_accuracy needs at least one record");
    AccuracyTable table;
    for (const ExecutionRecord& r : records) {
        const Sample* s = samples.find(r.dataset_id, r.sample_id);
        if (s == nullptr) throw IntegrityError("record references unknown sample " + r.dataset_id + "/" + r.sample_id);
        if (r.predicted_index < 0 || static_cast<std::size_t>(r.predicted_index) >= s->response_options.size())
            throw IntegrityError("record for " + r.sample_id + " predicts an index outside the option range");
        if (r.correct != (r.predicted_index == s->gold_index))
            throw IntegrityError("record for " + r.sample_id + " has a correctness flag inconsistent with gold");
        table.add(r);
    }
    return table;
}

double weighted_average(const std::map<std::string, double>& per_dataset_values,
                        const std::map<std::string, std::size_t>& sizes) {
    if (per_dataset_values.size() != sizes.size()) throw InvalidInput("weighted_average: key sets differ");
    if (per_dataset_values.empty()) throw InvalidInput("weighted_average: no datasets");
    double num = 0.0;
    double den = 0.0;
    for (const auto& [id, value] : per_dataset_values) {
        auto it = sizes.find(id);
        if (it == sizes.end()) throw InvalidInput("weighted_average: no size for " + id);
        if (it->second == 0) throw InvalidInput("weighted_average: size of " + id + " is zero");
        num += value * static_cast<double>(it->second);
        den += static_cast<double>(it->second);
    }
    return num / den;
}

}  // namespace vroute
