#include "vroute/prompt.hpp"

#include <algorithm>
#include <cctype>

#include "vroute/errors.hpp"

namespace vroute {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool valid_key(std::string_view key) {
    return !key.empty() && std::all_of(key.begin(), key.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

PromptTag parse_tag(std::string_view body, std::size_t offset) {
    PromptTag tag;
    std::string_view key = body;
    if (auto bar = body.find('|'); bar != std::string_view::npos) {
        std::string_view args = body.substr(0, bar);
        key = body.substr(bar + 1);
        while (!args.empty()) {
            const auto comma = args.find(',');
            const std::string_view arg = trim(args.substr(0, comma));
            if (arg == "a_an") tag.a_an = true;
            else if (arg == "rename_classes") tag.rename_classes = true;
            else if (!arg.empty() || comma != std::string_view::npos)
                throw ParseError(offset, "unknown tag argument '" + std::string(arg) + "'");
            if (comma == std::string_view::npos) break;
            args.remove_prefix(comma + 1);
        }
    }
    key = trim(key);
    if (!valid_key(key)) throw ParseError(offset, "invalid tag key '" + std::string(key) + "'");
    tag.key = std::string(key);
    return tag;
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string_view text) {
    PromptTemplate out;
    out.text_ = std::string(text);
    std::string literal;
    auto flush = [&] {
        if (!literal.empty()) out.segments_.push_back({std::move(literal), std::nullopt});
        literal.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '{') {
            if (i + 1 < text.size() && text[i + 1] == '{') {
                literal.push_back('{');
                ++i;
                continue;
            }
            const auto close = text.find('}', i + 1);
            if (close == std::string_view::npos) throw ParseError(i, "unterminated tag");
            flush();
            out.segments_.push_back({"", parse_tag(text.substr(i + 1, close - i - 1), i)});
            i = close;
        } else if (c == '}') {
            if (i + 1 < text.size() && text[i + 1] == '}') {
                literal.push_back('}');
                ++i;
                continue;
            }
            throw ParseError(i, "unmatched '}'");
        } else {
            literal.push_back(c);
        }
    }
    flush();
    return out;
}

std::set<std::string> PromptTemplate::keys() const {
    std::set<std::string> out;
    for (const auto& seg : segments_)
        if (seg.tag) out.insert(seg.tag->key);
    return out;
}

void RenameMap::validate() const {
    for (const auto& [from, to] : entries)
        if (to.empty()) throw InvalidInput("rename of '" + from + "' is empty");
}

void DatasetPromptConfig::validate() const {
    if (question_forms.empty()) throw InvalidInput("prompt config " + config_id + " has no question forms");
    rename_map.validate();
    std::set<std::string> declared(context_keys.begin(), context_keys.end());
    declared.insert("class_name");
    auto check = [&](const PromptTemplate& t) {
        for (const auto& key : t.keys())
            if (!declared.contains(key))
                throw InvalidInput("prompt config " + config_id + " uses undeclared key '" + key + "'");
    };
    for (const auto& q : question_forms) check(q);
    for (const auto& o : option_forms) check(o);
    for (const auto& [phrase, article] : article_exceptions)
        if (article != "a" && article != "an") throw InvalidInput("article exception for '" + phrase + "' must be a/an");
}

std::string apply_rename(const std::string& name, const RenameMap& map) {
    auto it = map.entries.find(name);
    return it == map.entries.end() ? name : it->second;
}

std::string article_for(std::string_view noun_phrase, const std::map<std::string, std::string>& exceptions) {
    if (noun_phrase.empty()) throw InvalidInput("article_for: empty phrase");
    if (auto it = exceptions.find(std::string(noun_phrase)); it != exceptions.end()) return it->second;
    for (char c : noun_phrase) {
        if (!std::isalpha(static_cast<unsigned char>(c))) continue;
        switch (std::tolower(static_cast<unsigned char>(c))) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
            default: return "a";
        }
    }
    return "a";
}

std::string render(const PromptTemplate& tmpl, const Sample& sample, const DatasetPromptConfig& config,
                   const std::optional<std::string>& class_value) {
    std::string out;
    for (const auto& seg : tmpl.segments()) {
        if (!seg.tag) {
            out += seg.literal;
            continue;
        }
        const PromptTag& tag = *seg.tag;
        std::string value;
        if (tag.key == "class_name") {
            if (!class_value) throw RenderError(tag.key, "template '" + tmpl.text() + "' needs a class value");
            value = *class_value;
        } else {
            auto it = sample.context.find(tag.key);
            if (it == sample.context.end())
                throw RenderError(tag.key, "sample " + sample.sample_id + " has no context key '" + tag.key + "'");
            value = it->second;
        }
        if (tag.rename_classes) value = apply_rename(value, config.rename_map);
        if (tag.a_an) value = article_for(value, config.article_exceptions) + " " + value;
        out += value;
    }
    return out;
}

std::vector<PromptVariant> prompt_variants(const DatasetPromptConfig& config) {
    std::vector<PromptVariant> out;
    out.reserve(config.variant_count());
    for (std::size_t q = 0; q < config.question_forms.size(); ++q) {
        if (config.option_forms.empty()) {
            out.push_back({"q" + std::to_string(q) + "o0", q, std::nullopt});
            continue;
        }
        for (std::size_t o = 0; o < config.option_forms.size(); ++o)
            out.push_back({"q" + std::to_string(q) + "o" + std::to_string(o), q, o});
    }
    return out;
}

const PromptVariant& find_variant(const std::vector<PromptVariant>& variants, const std::string& id) {
    for (const auto& v : variants)
        if (v.id == id) return v;
    throw InvalidInput("unknown prompt variant '" + id + "'");
}

ClosedPromptParts closed_prompt_parts(const Sample& sample, const DatasetPromptConfig& config,
                                      const PromptVariant& variant) {
    if (variant.question_index >= config.question_forms.size() ||
        (variant.option_index && *variant.option_index >= config.option_forms.size()))
        throw InvalidInput("variant " + variant.id + " does not belong to config " + config.config_id);
    ClosedPromptParts parts;
    parts.question = render(config.question_forms[variant.question_index], sample, config);
    parts.options.reserve(sample.response_options.size());
    for (const auto& option : sample.response_options) {
        if (variant.option_index)
            parts.options.push_back(render(config.option_forms[*variant.option_index], sample, config, option));
        else
            parts.options.push_back(option);
    }
    return parts;
}

std::vector<std::string> closed_prompt_set(const Sample& sample, const DatasetPromptConfig& config,
                                           const PromptVariant& variant) {
    ClosedPromptParts parts = closed_prompt_parts(sample, config, variant);
    std::vector<std::string> out;
    out.reserve(parts.options.size());
    for (auto& option : parts.options) out.push_back(parts.question + option);
    return out;
}

bool has_empty_question(const DatasetPromptConfig& config, const PromptVariant& variant) {
    return config.question_forms.at(variant.question_index).empty();
}

}  // namespace vroute
