#include "vroute/router_data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <tuple>

#include "json.hpp"
#include "vroute/errors.hpp"
#include "vroute/io.hpp"
#include "vroute/prompt.hpp"

namespace vroute {
namespace {

constexpr std::string_view kImg = "[img]";
constexpr std::string_view kPrompt = "[prompt]";
constexpr std::string_view kOptions = ";;;[";
constexpr std::string_view kSepModel = "[SEP]model::";
constexpr std::string_view kResponse = "[response]correct::";
constexpr std::string_view kAvg = ";;;avg_accuracy::";

void append_fixed(std::string& out, double value, int precision) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, precision);
    out.append(buf, r.ptr);
}

template <class T>
void append_tuple(std::string& out, const std::vector<T>& values, int precision) {
    out.push_back('(');
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(',');
        if constexpr (std::is_integral_v<T>) out += std::to_string(values[i]);
        else append_fixed(out, values[i], precision);
    }
    out.push_back(')');
}

class Cursor {
public:
    Cursor(std::string_view text, std::size_t base) : text_(text), base_(base) {}

    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == text_.size(); }
    std::string_view rest() const { return text_.substr(pos_); }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(base_ + pos_, msg); }

    void expect(std::string_view lit) {
        if (text_.substr(pos_, lit.size()) != lit) fail("expected '" + std::string(lit) + "'");
        pos_ += lit.size();
    }

    bool accept(std::string_view lit) {
        if (text_.substr(pos_, lit.size()) != lit) return false;
        pos_ += lit.size();
        return true;
    }

    template <class T>
    T number() {
        T value{};
        const char* first = text_.data() + pos_;
        const char* last = text_.data() + text_.size();
        if (first == last || *first == '-' || *first == '+') fail("expected a non-negative number");
        const auto r = std::from_chars(first, last, value);
        if (r.ec != std::errc{}) fail("expected a number");
        pos_ += static_cast<std::size_t>(r.ptr - first);
        return value;
    }

    template <class T>
    std::vector<T> tuple() {
        expect("(");
        std::vector<T> out;
        if (accept(")")) fail("empty tuple");
        for (;;) {
            out.push_back(number<T>());
            if (accept(")")) return out;
            expect(",");
        }
    }

private:
    std::string_view text_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

/// Parses "['a', 'b']" starting at `text[0] == '['`; nullopt unless it spans
/// the whole view.
std::optional<std::vector<std::string>> parse_option_list(std::string_view text) {
    if (text.empty() || text.front() != '[') return std::nullopt;
    std::vector<std::string> out;
    std::size_t i = 1;
    for (;;) {
        if (i >= text.size() || text[i] != '\'') return std::nullopt;
        ++i;
        std::string item;
        for (;;) {
            if (i >= text.size()) return std::nullopt;
            const char c = text[i++];
            if (c == '\'') break;
            if (c == '\\') {
                if (i >= text.size()) return std::nullopt;
                item.push_back(text[i++]);
            } else {
                item.push_back(c);
            }
        }
        out.push_back(std::move(item));
        if (i < text.size() && text[i] == ']') {
            return i + 1 == text.size() ? std::optional(std::move(out)) : std::nullopt;
        }
        if (text.substr(i, 2) != ", ") return std::nullopt;
        i += 2;
    }
}

ExampleFields parse_impl(std::string_view line, std::optional<SerializationFlags> flags) {
    if (line.empty()) throw ParseError(0, "empty line");
    const std::size_t sep = line.rfind(kSepModel);
    if (sep == std::string_view::npos) throw ParseError(line.size(), "missing '[SEP]model::' marker");

    ExampleFields f;
    Cursor tail(line.substr(sep + kSepModel.size()), sep + kSepModel.size());
    const std::size_t resp = tail.rest().find(kResponse);
    if (resp == std::string_view::npos) tail.fail("missing '[response]correct::' marker");
    f.model_id = std::string(tail.rest().substr(0, resp));
    if (!valid_model_id(f.model_id)) tail.fail("invalid model id '" + f.model_id + "'");
    tail.expect(f.model_id);
    tail.expect(kResponse);
    if (tail.accept("True")) f.correct = true;
    else if (tail.accept("False")) f.correct = false;
    else tail.fail("expected True or False");
    tail.expect(kAvg);
    const std::size_t avg_start = tail.pos();
    f.avg_accuracy = tail.number<double>();
    if (!tail.done()) tail.fail("trailing characters after avg_accuracy");
    if (tail.pos() - avg_start != 7) throw ParseError(sep + kSepModel.size() + avg_start, "avg_accuracy must have 5 decimals");
    if (f.avg_accuracy > 1.0) throw ParseError(sep + kSepModel.size() + avg_start, "avg_accuracy above 1");

    const std::string_view input = line.substr(0, sep);
    Cursor in(input, 0);
    const bool md = flags ? flags->include_metadata : input.starts_with(kImg);
    if (md) {
        in.expect(kImg);
        in.expect("dim::");
        const auto dims = in.tuple<int>();
        if (dims.size() != 3) in.fail("dim must have three entries");
        in.expect("ave::");
        MetadataSummary m;
        m.height = dims[0];
        m.width = dims[1];
        m.channels = dims[2];
        m.channel_means = in.tuple<double>();
        in.expect("std::");
        m.channel_stds = in.tuple<double>();
        try {
            m.validate();
        } catch (const Error& e) {
            in.fail(e.what());
        }
        f.metadata = std::move(m);
    }
    in.expect(kPrompt);
    const std::size_t body_start = in.pos();
    const std::string_view body = in.rest();

    const bool ro_required = flags && flags->include_response_options;
    const bool ro_allowed = !flags || flags->include_response_options;
    if (ro_allowed) {
        std::size_t k = body.rfind(kOptions);
        while (k != std::string_view::npos) {
            if (auto options = parse_option_list(body.substr(k + kOptions.size() - 1))) {
                f.prompt = std::string(body.substr(0, k));
                f.options = std::move(options);
                return f;
            }
            if (k == 0) break;
            k = body.rfind(kOptions, k - 1);
        }
        if (ro_required) throw ParseError(body_start + body.size(), "missing or malformed ';;;[...]' option list");
    }
    f.prompt = std::string(body);
    return f;
}

}  // namespace

std::string SerializationFlags::to_string() const {
    return std::string("md=") + (include_metadata ? "on" : "off") + ",ro=" + (include_response_options ? "on" : "off");
}

std::string SerializationFlags::tag() const {
    return std::string("md") + (include_metadata ? "1" : "0") + "_ro" + (include_response_options ? "1" : "0");
}

SerializationFlags SerializationFlags::parse(std::string_view text) {
    SerializationFlags f;
    std::set<std::string> seen;
    while (!text.empty()) {
        const auto comma = text.find(',');
        const std::string_view item = text.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw InvalidInput("flag '" + std::string(item) + "' is not key=value");
        const std::string key(item.substr(0, eq));
        const std::string value(item.substr(eq + 1));
        if (value != "on" && value != "off") throw InvalidInput("flag " + key + " must be on or off");
        if (key == "md") f.include_metadata = value == "on";
        else if (key == "ro") f.include_response_options = value == "on";
        else throw InvalidInput("unknown flag '" + key + "' (expected md or ro)");
        if (!seen.insert(key).second) throw InvalidInput("flag " + key + " given twice");
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return f;
}

std::vector<SerializationFlags> all_flag_combinations() {
    return {{true, true}, {true, false}, {false, true}, {false, false}};
}

std::string format_option_list(const std::vector<std::string>& options) {
    std::string out = "[";
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (i) out += ", ";
        out.push_back('\'');
        for (char c : options[i]) {
            if (c == '\'' || c == '\\') out.push_back('\\');
            out.push_back(c);
        }
        out.push_back('\'');
    }
    out.push_back(']');
    return out;
}

std::string serialize_input(const MetadataSummary* metadata, std::string_view prompt,
                            const std::vector<std::string>* options) {
    std::string out;
    if (metadata) {
        out += kImg;
        out += "dim::";
        append_tuple(out, std::vector<int>{metadata->height, metadata->width, metadata->channels}, 0);
        out += "ave::";
        append_tuple(out, metadata->channel_means, 1);
        out += "std::";
        append_tuple(out, metadata->channel_stds, 1);
    }
    out += kPrompt;
    out += prompt;
    if (options) {
        out += ";;;";
        out += format_option_list(*options);
    }
    return out;
}

std::string serialize_example(const ExampleFields& f) {
    if (!(f.avg_accuracy >= 0.0 && f.avg_accuracy <= 1.0)) throw InvalidInput("avg_accuracy must lie in [0, 1]");
    if (!valid_model_id(f.model_id)) throw InvalidInput("invalid model id '" + f.model_id + "'");
    std::string out = serialize_input(f.metadata ? &*f.metadata : nullptr, f.prompt, f.options ? &*f.options : nullptr);
    out += kSepModel;
    out += f.model_id;
    out += kResponse;
    out += f.correct ? "True" : "False";
    out += kAvg;
    append_fixed(out, f.avg_accuracy, 5);
    return out;
}

std::string serialize_example(const MetadataSummary& metadata, const std::string& prompt_text,
                              const std::vector<std::string>& options, const std::string& model_id, bool correct,
                              double avg_accuracy, const SerializationFlags& flags,
                              std::span<const std::string> model_pool) {
    if (std::find(model_pool.begin(), model_pool.end(), model_id) == model_pool.end())
        throw InvalidInput("model '" + model_id + "' is not in the registered pool");
    ExampleFields f;
    if (flags.include_metadata) f.metadata = metadata;
    f.prompt = prompt_text;
    if (flags.include_response_options) f.options = options;
    f.model_id = model_id;
    f.correct = correct;
    f.avg_accuracy = avg_accuracy;
    return serialize_example(f);
}

ExampleFields parse_example(std::string_view line, const SerializationFlags& flags) { return parse_impl(line, flags); }
ExampleFields parse_example(std::string_view line) { return parse_impl(line, std::nullopt); }

std::vector<ExecutionRecord> filter_valid_prompts(std::span<const ExecutionRecord> records, const World& world) {
    std::map<std::string, std::set<std::string>> invalid;  // dataset -> variant ids
    for (const auto& d : world.datasets) {
        const auto& config = world.config_for(d);
        auto& bad = invalid[d.dataset_id];
        for (const auto& v : prompt_variants(config))
            if (has_empty_question(config, v)) bad.insert(v.id);
    }
    std::vector<ExecutionRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        auto it = invalid.find(r.dataset_id);
        if (it != invalid.end() && it->second.contains(r.prompt_variant_id)) continue;
        out.push_back(r);
    }
    return out;
}

std::string select_best_model(const std::map<std::string, bool>& per_model_correct,
                              const std::map<std::string, double>& per_model_avg) {
    if (per_model_correct.empty()) throw InvalidInput("select_best_model: no models");
    if (per_model_correct.size() != per_model_avg.size() ||
        !std::equal(per_model_correct.begin(), per_model_correct.end(), per_model_avg.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; }))
        throw InvalidInput("select_best_model: correctness and average maps have different models");
    const bool any_correct =
        std::any_of(per_model_correct.begin(), per_model_correct.end(), [](const auto& kv) { return kv.second; });
    const std::string* best = nullptr;
    double best_avg = 0.0;
    // std::map iterates in ascending id order, so strict > keeps the smallest id on ties.
    for (const auto& [model, correct] : per_model_correct) {
        if (any_correct && !correct) continue;
        const double avg = per_model_avg.at(model);
        if (best == nullptr || avg > best_avg) {
            best = &model;
            best_avg = avg;
        }
    }
    return *best;
}

std::vector<RouterExample> build_router_dataset(std::span<const ExecutionRecord> records,
                                                const AccuracyTable& accuracy, const World& world,
                                                const SerializationFlags& flags, RouterDataStats* stats) {
    const auto valid = filter_valid_prompts(records, world);
    if (stats) {
        stats->records_in = records.size();
        stats->records_valid = valid.size();
    }

    // (dataset, sample, variant) -> model -> correct
    using PairKey = std::tuple<std::string, std::string, std::string>;
    std::map<PairKey, std::map<std::string, bool>> outcomes;
    for (const auto& r : valid) {
        if (!world.has_model(r.model_id)) throw InvalidInput("record references unregistered model " + r.model_id);
        auto& slot = outcomes[{r.dataset_id, r.sample_id, r.prompt_variant_id}];
        if (!slot.emplace(r.model_id, r.correct).second)
            throw IntegrityError("duplicate record for " + r.model_id + " on " + r.dataset_id + "/" + r.sample_id +
                                 "/" + r.prompt_variant_id);
    }

    std::vector<std::string> gaps;
    for (const auto& [key, models] : outcomes) {
        if (models.size() == world.model_pool.size()) continue;
        for (const auto& m : world.model_pool)
            if (!models.contains(m))
                gaps.push_back(std::get<0>(key) + "/" + std::get<1>(key) + "/" + std::get<2>(key) + ":" + m);
    }
    if (!gaps.empty())
        throw CoverageError(gaps, "missing outcomes for " + std::to_string(gaps.size()) +
                                      " (sample, variant, model) triples, first: " + gaps.front());

    std::vector<RouterExample> out;
    out.reserve(outcomes.size());
    for (const auto& d : world.datasets) {
        const auto& config = world.config_for(d);
        const auto variants = prompt_variants(config);
        for (const auto& s : d.samples) {
            for (const auto& v : variants) {
                auto it = outcomes.find({d.dataset_id, s.sample_id, v.id});
                if (it == outcomes.end()) continue;
                std::map<std::string, double> avgs;
                for (const auto& [model, correct] : it->second)
                    avgs[model] = accuracy.accuracy(model, d.dataset_id, v.id);
                const std::string label = select_best_model(it->second, avgs);
                const auto parts = closed_prompt_parts(s, config, v);
                const MetadataSummary& md = world.metadata_for(s);

                RouterExample ex;
                ex.serialized_input = serialize_input(flags.include_metadata ? &md : nullptr, parts.question,
                                                      flags.include_response_options ? &parts.options : nullptr);
                ex.label_model_id = label;
                ex.sample_id = s.sample_id;
                ex.dataset_id = d.dataset_id;
                ex.prompt_variant_id = v.id;
                ex.raw_line = serialize_example(md, parts.question, parts.options, label, it->second.at(label),
                                                accuracy.marginal(label, d.dataset_id), flags, world.model_pool);
                out.push_back(std::move(ex));
                outcomes.erase(it);
            }
        }
    }
    if (!outcomes.empty()) {
        const auto& [ds, sample, variant] = outcomes.begin()->first;
        throw IntegrityError("records reference unknown sample or variant " + ds + "/" + sample + "/" + variant);
    }
    if (stats) stats->examples = out.size();
    return out;
}

std::vector<RouterExample> build_router_dataset(const World& world, const SerializationFlags& flags,
                                                RouterDataStats* stats) {
    const auto valid = filter_valid_prompts(world.records, world);
    std::vector<DatasetManifest> manifests = world.datasets;
    const AccuracyTable table = aggregate_accuracy(valid, SampleIndex(manifests));
    return build_router_dataset(world.records, table, world, flags, stats);
}

void throw_split_too_small(std::size_t n) {
    throw InvalidInput("split_80_10_10 needs at least 10 examples, got " + std::to_string(n));
}

void write_router_corpus(const std::filesystem::path& path, std::span<const RouterExample> examples) {
    std::string text;
    std::vector<json> index;
    index.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& e = examples[i];
        text += e.raw_line;
        text += '\n';
        index.push_back(json{{"line", i},
                             {"sample_id", e.sample_id},
                             {"dataset_id", e.dataset_id},
                             {"prompt_variant_id", e.prompt_variant_id},
                             {"label", e.label_model_id},
                             {"input", e.serialized_input}});
    }
    write_text_file(path, text);
    write_jsonl(path.string() + ".index.jsonl", index);
}

std::vector<RouterExample> read_router_corpus(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    const auto index = read_jsonl(path.string() + ".index.jsonl");
    std::vector<RouterExample> out;
    std::size_t start = 0;
    for (const auto& row : index) {
        const auto nl = text.find('\n', start);
        if (nl == std::string::npos) throw IntegrityError(path.string() + " has fewer lines than its index");
        RouterExample e;
        e.raw_line = text.substr(start, nl - start);
        start = nl + 1;
        row.at("sample_id").get_to(e.sample_id);
        row.at("dataset_id").get_to(e.dataset_id);
        row.at("prompt_variant_id").get_to(e.prompt_variant_id);
        row.at("label").get_to(e.label_model_id);
        row.at("input").get_to(e.serialized_input);
        if (e.raw_line.compare(0, e.serialized_input.size(), e.serialized_input) != 0)
            throw IntegrityError(path.string() + ": line " + std::to_string(out.size()) + " does not match its index");
        out.push_back(std::move(e));
    }
    if (start != text.size()) throw IntegrityError(path.string() + " has more lines than its index");
    return out;
}

}  // namespace vroute
