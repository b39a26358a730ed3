#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vroute/core.hpp"

namespace vroute {

/// A `{[arg[,arg]]|key}` substitution. `key` is `class_name` or a
/// dataset-provided context field.
struct PromptTag {
    bool a_an = false;
    bool rename_classes = false;
    std::string key;
    bool operator==(const PromptTag&) const = default;
};

/// Literal text or a tag; exactly one is meaningful per segment.
struct TemplateSegment {
    std::string literal;
    std::optional<PromptTag> tag;
    bool operator==(const TemplateSegment&) const = default;
};

class PromptTemplate {
public:
    PromptTemplate() = default;

    /// Parses a template string. `{{` and `}}` are literal braces. Throws
    /// ParseError for unterminated tags, unknown args or empty keys.
    static PromptTemplate parse(std::string_view text);

    const std::string& text() const noexcept { return text_; }
    const std::vector<TemplateSegment>& segments() const noexcept { return segments_; }
    std::set<std::string> keys() const;
    bool uses_class_name() const { return keys().contains("class_name"); }
    bool empty() const noexcept { return text_.empty(); }

    bool operator==(const PromptTemplate& other) const { return text_ == other.text_; }

private:
    std::string text_;
    std::vector<TemplateSegment> segments_;
};

struct RenameMap {
    std::map<std::string, std::string> entries;
    void validate() const;
    bool operator==(const RenameMap&) const = default;
};

struct DatasetPromptConfig {
    std::string config_id;
    std::vector<PromptTemplate> question_forms;
    /// Empty: options are taken verbatim from each sample.
    std::vector<PromptTemplate> option_forms;
    RenameMap rename_map;
    std::vector<std::string> class_names;
    /// Dataset-provided context keys templates may reference.
    std::vector<std::string> context_keys;
    /// Per-phrase overrides for article selection, e.g. {"hour": "an"}.
    std::map<std::string, std::string> article_exceptions;

    void validate() const;
    std::size_t variant_count() const noexcept {
        return question_forms.size() * (option_forms.empty() ? 1 : option_forms.size());
    }
    bool operator==(const DatasetPromptConfig&) const = default;
};

struct PromptVariant {
    std::string id;
    std::size_t question_index = 0;
    std::optional<std::size_t> option_index;  // nullopt: verbatim options
    bool operator==(const PromptVariant&) const = default;
};

std::string apply_rename(const std::string& name, const RenameMap& map);

/// "an" when the first alphabetic character is a vowel, otherwise "a".
/// Exceptions are matched on the whole phrase first.
std::string article_for(std::string_view noun_phrase,
                        const std::map<std::string, std::string>& exceptions = {});

/// Replaces tags left to right. Rename is applied before the article when a
/// tag carries both args.
std::string render(const PromptTemplate& tmpl, const Sample& sample, const DatasetPromptConfig& config,
                   const std::optional<std::string>& class_value = std::nullopt);

/// Cartesian product of question and option forms, ids "q<i>o<j>".
std::vector<PromptVariant> prompt_variants(const DatasetPromptConfig& config);

const PromptVariant& find_variant(const std::vector<PromptVariant>& variants, const std::string& id);

/// The rendered question and per-option texts of one variant.
struct ClosedPromptParts {
    std::string question;
    std::vector<std::string> options;
};

ClosedPromptParts closed_prompt_parts(const Sample& sample, const DatasetPromptConfig& config,
                                      const PromptVariant& variant);

/// One prompt per response option, in option order: question + option text.
std::vector<std::string> closed_prompt_set(const Sample& sample, const DatasetPromptConfig& config,
                                           const PromptVariant& variant);

/// True when the variant's question form is the empty string.
bool has_empty_question(const DatasetPromptConfig& config, const PromptVariant& variant);

/// Prompt sets shipped for the ten benchmark datasets, keyed by config id.
const std::map<std::string, DatasetPromptConfig>& builtin_prompt_configs();

}  // namespace vroute
