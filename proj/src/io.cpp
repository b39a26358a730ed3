#include "vroute/io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include "vroute/errors.hpp"
#include "vroute/image.hpp"

namespace vroute {

void to_json(json& j, const Sample& s) {
    j = json{{"sample_id", s.sample_id},
             {"dataset_id", s.dataset_id},
             {"image_ref", s.image_ref},
             {"context", s.context},
             {"response_options", s.response_options},
             {"gold_index", s.gold_index}};
}

void from_json(const json& j, Sample& s) {
    j.at("sample_id").get_to(s.sample_id);
    j.at("dataset_id").get_to(s.dataset_id);
    j.at("image_ref").get_to(s.image_ref);
    s.context = j.value("context", std::map<std::string, std::string>{});
    j.at("response_options").get_to(s.response_options);
    j.at("gold_index").get_to(s.gold_index);
}

void to_json(json& j, const MetadataSummary& m) {
    j = json{{"dims", {m.height, m.width, m.channels}},
             {"channel_means", m.channel_means},
             {"channel_stds", m.channel_stds}};
}

void from_json(const json& j, MetadataSummary& m) {
    const auto& dims = j.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw InvalidInput("metadata dims must be [H, W, C]");
    m.height = dims[0].get<int>();
    m.width = dims[1].get<int>();
    m.channels = dims[2].get<int>();
    j.at("channel_means").get_to(m.channel_means);
    j.at("channel_stds").get_to(m.channel_stds);
    m.validate();
}

void to_json(json& j, const ExecutionRecord& r) {
    j = json{{"sample_id", r.sample_id},
             {"dataset_id", r.dataset_id},
             {"model_id", r.model_id},
             {"prompt_variant_id", r.prompt_variant_id},
             {"predicted_index", r.predicted_index},
             {"correct", r.correct}};
}

void from_json(const json& j, ExecutionRecord& r) {
    j.at("sample_id").get_to(r.sample_id);
    j.at("dataset_id").get_to(r.dataset_id);
    j.at("model_id").get_to(r.model_id);
    j.at("prompt_variant_id").get_to(r.prompt_variant_id);
    j.at("predicted_index").get_to(r.predicted_index);
    j.at("correct").get_to(r.correct);
}

void to_json(json& j, const DatasetPromptConfig& c) {
    auto texts = [](const std::vector<PromptTemplate>& forms) {
        std::vector<std::string> out;
        for (const auto& f : forms) out.push_back(f.text());
        return out;
    };
    j = json{{"config_id", c.config_id},
             {"question_forms", texts(c.question_forms)},
             {"option_forms", texts(c.option_forms)},
             {"rename_map", c.rename_map.entries},
             {"class_names", c.class_names},
             {"context_keys", c.context_keys},
             {"article_exceptions", c.article_exceptions}};
}

void from_json(const json& j, DatasetPromptConfig& c) {
    j.at("config_id").get_to(c.config_id);
    c.question_forms.clear();
    c.option_forms.clear();
    for (const auto& t : j.at("question_forms")) c.question_forms.push_back(PromptTemplate::parse(t.get<std::string>()));
    for (const auto& t : j.value("option_forms", json::array()))
        c.option_forms.push_back(PromptTemplate::parse(t.get<std::string>()));
    c.rename_map.entries = j.value("rename_map", std::map<std::string, std::string>{});
    c.class_names = j.value("class_names", std::vector<std::string>{});
    c.context_keys = j.value("context_keys", std::vector<std::string>{});
    c.article_exceptions = j.value("article_exceptions", std::map<std::string, std::string>{});
    c.validate();
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::string text;
    for (const auto& row : rows) {
        text += row.dump();
        text += '\n';
    }
    write_text_file(path, text);
}

std::vector<ExecutionRecord> read_records(const std::filesystem::path& path) {
    std::vector<ExecutionRecord> out;
    for (const auto& row : read_jsonl(path)) out.push_back(row.get<ExecutionRecord>());
    return out;
}

void write_records(const std::filesystem::path& path, const std::vector<ExecutionRecord>& records) {
    std::vector<json> rows;
    rows.reserve(records.size());
    for (const auto& r : records) rows.emplace_back(r);
    write_jsonl(path, rows);
}

std::map<std::string, DatasetPromptConfig> read_prompt_configs(const std::filesystem::path& path) {
    const json doc = json::parse(read_text_file(path));
    std::map<std::string, DatasetPromptConfig> out;
    const json& list = doc.is_object() ? doc.at("configs") : doc;
    for (const auto& c : list) {
        auto config = c.get<DatasetPromptConfig>();
        out.emplace(config.config_id, std::move(config));
    }
    return out;
}

void write_prompt_configs(const std::filesystem::path& path, const std::map<std::string, DatasetPromptConfig>& configs) {
    json list = json::array();
    for (const auto& [id, c] : configs) list.push_back(c);
    write_text_file(path, json{{"configs", list}}.dump(2) + "\n");
}

World load_world(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("world directory not found: " + dir.string());
    World world;
    world.model_pool = json::parse(read_text_file(dir / "models.json")).at("models").get<std::vector<std::string>>();

    std::map<std::string, std::size_t> index;
    for (const auto& row : read_jsonl(dir / "datasets.jsonl")) {
        DatasetManifest d;
        row.at("dataset_id").get_to(d.dataset_id);
        d.task_kind = task_kind_from_string(row.value("task_kind", std::string("recognition")));
        d.prompt_config_ref = row.value("prompt_config_ref", d.dataset_id);
        index[d.dataset_id] = world.datasets.size();
        world.datasets.push_back(std::move(d));
    }
    for (const auto& row : read_jsonl(dir / "samples.jsonl")) {
        auto s = row.get<Sample>();
        auto it = index.find(s.dataset_id);
        if (it == index.end()) throw IntegrityError("sample " + s.sample_id + " references unknown dataset " + s.dataset_id);
        world.datasets[it->second].samples.push_back(std::move(s));
    }
    if (fs::exists(dir / "prompt_configs.json")) world.prompt_configs = read_prompt_configs(dir / "prompt_configs.json");
    if (fs::exists(dir / "metadata.jsonl")) {
        for (const auto& row : read_jsonl(dir / "metadata.jsonl"))
            world.metadata.emplace(row.at("image_ref").get<std::string>(), row.get<MetadataSummary>());
    }
    for (const auto& d : world.datasets) {
        for (const auto& s : d.samples) {
            if (world.metadata.contains(s.image_ref)) continue;
            const fs::path image_path = dir / s.image_ref;
            if (fs::exists(image_path)) world.metadata.emplace(s.image_ref, summarize_image(read_pnm(image_path)));
        }
    }
    if (fs::exists(dir / "records.jsonl")) world.records = read_records(dir / "records.jsonl");
    return world;
}

void save_world(const World& world, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "models.json", json{{"models", world.model_pool}}.dump(2) + "\n");
    std::vector<json> datasets, samples, metadata;
    for (const auto& d : world.datasets) {
        datasets.push_back(json{{"dataset_id", d.dataset_id},
                                {"task_kind", to_string(d.task_kind)},
                                {"prompt_config_ref", d.prompt_config_ref},
                                {"size", d.size()}});
        for (const auto& s : d.samples) samples.emplace_back(s);
    }
    for (const auto& [ref, m] : world.metadata) {
        json row = m;
        row["image_ref"] = ref;
        metadata.push_back(std::move(row));
    }
    write_jsonl(dir / "datasets.jsonl", datasets);
    write_jsonl(dir / "samples.jsonl", samples);
    write_jsonl(dir / "metadata.jsonl", metadata);
    write_prompt_configs(dir / "prompt_configs.json", world.prompt_configs);
    write_records(dir / "records.jsonl", world.records);
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("crypto", "SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_text_file(path)); }

}  // namespace vroute
