#include "vroute/mock_backends.hpp"

#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "vroute/errors.hpp"
#include "vroute/random.hpp"

namespace vroute {

std::string to_string(MockKind k) {
    switch (k) {
        case MockKind::oracle: return "oracle";
        case MockKind::constant: return "constant";
        case MockKind::random: return "random";
    }
    return "?";
}

MockKind mock_kind_from_string(const std::string& text) {
    if (text == "oracle") return MockKind::oracle;
    if (text == "constant") return MockKind::constant;
    if (text == "random") return MockKind::random;
    throw InvalidInput("unknown mock backend kind '" + text + "'");
}

namespace {

class OracleBackend final : public Backend {
public:
    OracleBackend(ModelFamily family, const World& world) : family_(family) {
        for (const auto& d : world.datasets) {
            const auto& config = world.config_for(d);
            const auto variants = prompt_variants(config);
            for (const auto& s : d.samples) {
                for (const auto& v : variants) {
                    const auto prompts = closed_prompt_set(s, config, v);
                    for (const auto& p : prompts) vocab_.try_emplace(p, vocab_.size());
                    gold_[s.image_ref].insert(prompts[static_cast<std::size_t>(s.gold_index)]);
                }
            }
        }
    }

    BackendCapabilities capabilities() const override {
        return {"mock-oracle", family_, family_ == ModelFamily::contrastive ? vocab_.size() : 0, true, "full"};
    }

    std::vector<double> embed_image(const std::string& image_ref) override {
        std::vector<double> v(vocab_.size(), 0.0);
        if (auto it = gold_.find(image_ref); it != gold_.end())
            for (const auto& p : it->second) v[vocab_.at(p)] = 1.0;
        return v;
    }

    Matrix embed_texts(const std::vector<std::string>& prompts) override {
        Matrix m(prompts.size(), vocab_.size());
        for (std::size_t i = 0; i < prompts.size(); ++i)
            if (auto it = vocab_.find(prompts[i]); it != vocab_.end()) m.row(i)[it->second] = 1.0;
        return m;
    }

    std::vector<std::vector<double>> logprobs(const std::string& image_ref,
                                              const std::vector<std::string>& prompts) override {
        const auto it = gold_.find(image_ref);
        std::vector<std::vector<double>> out;
        for (const auto& p : prompts) {
            const bool gold = it != gold_.end() && it->second.contains(p);
            out.push_back({gold ? -0.1 : -5.0});
        }
        return out;
    }

private:
    ModelFamily family_;
    std::unordered_map<std::string, std::size_t> vocab_;
    std::unordered_map<std::string, std::set<std::string>> gold_;
};

class ConstantBackend final : public Backend {
public:
    ConstantBackend(ModelFamily family, std::size_t dim) : family_(family), dim_(dim) {}

    BackendCapabilities capabilities() const override {
        return {"mock-constant", family_, family_ == ModelFamily::contrastive ? dim_ : 0, true, "full"};
    }
    std::vector<double> embed_image(const std::string&) override { return std::vector<double>(dim_, 1.0); }
    Matrix embed_texts(const std::vector<std::string>& prompts) override {
        Matrix m(prompts.size(), dim_);
        std::fill(m.data.begin(), m.data.end(), 1.0);
        return m;
    }
    std::vector<std::vector<double>> logprobs(const std::string&, const std::vector<std::string>& prompts) override {
        return std::vector<std::vector<double>>(prompts.size(), std::vector<double>{-1.0});
    }

private:
    ModelFamily family_;
    std::size_t dim_;
};

class RandomBackend final : public Backend {
public:
    RandomBackend(ModelFamily family, std::uint64_t seed, std::size_t dim) : family_(family), seed_(seed), dim_(dim) {}

    BackendCapabilities capabilities() const override {
        return {"mock-random", family_, family_ == ModelFamily::contrastive ? dim_ : 0, true, "full"};
    }

    std::vector<double> embed_image(const std::string& image_ref) override {
        return gaussian(stable_hash(image_ref, seed_ ^ 0x1));
    }

    Matrix embed_texts(const std::vector<std::string>& prompts) override {
        Matrix m(prompts.size(), dim_);
        for (std::size_t i = 0; i < prompts.size(); ++i) {
            const auto v = gaussian(stable_hash(prompts[i], seed_ ^ 0x2));
            std::copy(v.begin(), v.end(), m.row(i));
        }
        return m;
    }

    std::vector<std::vector<double>> logprobs(const std::string& image_ref,
                                              const std::vector<std::string>& prompts) override {
        std::vector<std::vector<double>> out;
        const std::uint64_t image_key = stable_hash(image_ref, seed_ ^ 0x3);
        for (const auto& p : prompts) {
            Rng rng(hash_combine(image_key, stable_hash(p)));
            std::vector<double> tokens;
            std::size_t count = 0;
            bool in_word = false;
            for (char c : p) {
                const bool space = c == ' ' || c == '\t' || c == '\n';
                if (!space && !in_word) ++count;
                in_word = !space;
            }
            count = std::max<std::size_t>(count, 1);
            for (std::size_t t = 0; t < count; ++t) tokens.push_back(std::log(1.0 - rng.uniform()));
            out.push_back(std::move(tokens));
        }
        return out;
    }

private:
    std::vector<double> gaussian(std::uint64_t key) const {
        Rng rng(key);
        std::vector<double> v(dim_);
        for (auto& x : v) x = rng.normal();
        return v;
    }

    ModelFamily family_;
    std::uint64_t seed_;
    std::size_t dim_;
};

}  // namespace

std::unique_ptr<Backend> make_mock_backend(const MockSpec& spec, const World* world) {
    switch (spec.kind) {
        case MockKind::oracle:
            if (world == nullptr) throw InvalidInput("the oracle mock backend needs a world");
            return std::make_unique<OracleBackend>(spec.family, *world);
        case MockKind::constant:
            if (spec.dim == 0) throw InvalidInput("mock backend dim must be positive");
            return std::make_unique<ConstantBackend>(spec.family, spec.dim);
        case MockKind::random:
            if (spec.dim == 0) throw InvalidInput("mock backend dim must be positive");
            return std::make_unique<RandomBackend>(spec.family, spec.seed, spec.dim);
    }
    throw InvalidInput("unknown mock backend");
}

}  // namespace vroute
