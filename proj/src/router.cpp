#include "vroute/router.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include "vroute/errors.hpp"
#include "vroute/io.hpp"
#include "vroute/kernels.hpp"
#include "vroute/prompt.hpp"
#include "vroute/random.hpp"
#include "vroute/scoring.hpp"

namespace vroute {

void FeaturizeConfig::validate() const {
    if (min_order < 1 || max_order < min_order) throw InvalidInput("n-gram orders must satisfy 1 <= min <= max");
    if (hash_bits < 1 || hash_bits > 30) throw InvalidInput("hash_bits must be in [1, 30]");
}

std::vector<std::string> char_ngrams(std::string_view text, std::size_t order) {
    std::vector<std::string> out;
    if (order == 0 || text.size() < order) return out;
    out.reserve(text.size() - order + 1);
    for (std::size_t i = 0; i + order <= text.size(); ++i) out.emplace_back(text.substr(i, order));
    return out;
}

SparseVector featurize(std::string_view text, const FeaturizeConfig& config) {
    std::string lowered;
    if (config.lowercase) {
        lowered.assign(text);
        for (auto& c : lowered)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        text = lowered;
    }
    const std::uint64_t mask = config.dim() - 1;
    std::vector<std::pair<std::uint32_t, double>> hits;
    for (std::size_t order = config.min_order; order <= config.max_order; ++order) {
        for (std::size_t i = 0; i + order <= text.size(); ++i) {
            const std::uint64_t h = stable_hash(text.substr(i, order));
            hits.emplace_back(static_cast<std::uint32_t>(h & mask), (h >> 63) ? -1.0 : 1.0);
        }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseVector out;
    for (std::size_t i = 0; i < hits.size();) {
        std::size_t j = i;
        double v = 0.0;
        for (; j < hits.size() && hits[j].first == hits[i].first; ++j) v += hits[j].second;
        if (v != 0.0) {
            out.index.push_back(hits[i].first);
            out.value.push_back(v);
        }
        i = j;
    }
    return out;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be positive");
    if (batch_size == 0 || max_iterations == 0 || eval_every == 0)
        throw InvalidInput("batch_size, max_iterations and eval_every must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0))
        throw InvalidInput("Adam parameters out of range");
}

LinearHashedNgram::LinearHashedNgram(std::size_t dim, std::size_t num_classes)
    : dim_(dim), k_(num_classes), w_(dim * num_classes, 0.0), b_(num_classes, 0.0) {
    if (dim == 0 || num_classes == 0) throw InvalidInput("learner needs a positive dimension and class count");
}

std::unique_ptr<Learner> LinearHashedNgram::clone() const {
    auto out = std::make_unique<LinearHashedNgram>(dim_, k_);
    out->w_ = w_;
    out->b_ = b_;
    return out;
}

void LinearHashedNgram::logits(const SparseVector& x, std::span<double> out) const {
    if (out.size() != k_) throw InvalidInput("logits buffer has the wrong size");
    std::copy(b_.begin(), b_.end(), out.begin());
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < x.nnz(); ++i) {
        if (x.index[i] >= dim_) throw InvalidInput("feature index outside the learner dimension");
        k.axpy(x.value[i], w_.data() + static_cast<std::size_t>(x.index[i]) * k_, out.data(), k_);
    }
}

double LinearHashedNgram::accumulate(std::span<const SparseVector* const> xs, std::span<const int> ys,
                                     Gradient* grad) const {
    if (xs.empty() || xs.size() != ys.size()) throw InvalidInput("batch features and labels differ in size");
    const double scale = 1.0 / static_cast<double>(xs.size());
    std::vector<double> z(k_);
    double total = 0.0;
    if (grad) grad->bias.assign(k_, 0.0);
    for (std::size_t n = 0; n < xs.size(); ++n) {
        const int y = ys[n];
        if (y < 0 || static_cast<std::size_t>(y) >= k_) throw InvalidInput("label index out of range");
        logits(*xs[n], z);
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) denom += std::exp(v - zmax);
        const double lse = zmax + std::log(denom);
        total += lse - z[static_cast<std::size_t>(y)];
        if (!grad) continue;
        for (std::size_t c = 0; c < k_; ++c) z[c] = (std::exp(z[c] - lse) - (static_cast<int>(c) == y ? 1.0 : 0.0)) * scale;
        for (std::size_t c = 0; c < k_; ++c) grad->bias[c] += z[c];
        const auto& kt = kernels::active();
        for (std::size_t i = 0; i < xs[n]->nnz(); ++i) {
            auto& row = grad->rows[xs[n]->index[i]];
            if (row.empty()) row.assign(k_, 0.0);
            kt.axpy(xs[n]->value[i], z.data(), row.data(), k_);
        }
    }
    return total * scale;
}

double LinearHashedNgram::loss(std::span<const SparseVector* const> xs, std::span<const int> ys) const {
    return accumulate(xs, ys, nullptr);
}

LinearHashedNgram::Gradient LinearHashedNgram::gradient(std::span<const SparseVector* const> xs,
                                                         std::span<const int> ys) const {
    Gradient g;
    accumulate(xs, ys, &g);
    return g;
}

double LinearHashedNgram::step(std::span<const SparseVector* const> xs, std::span<const int> ys,
                               const TrainConfig& config) {
    if (m_.empty()) {
        m_.assign(w_.size(), 0.0);
        v_.assign(w_.size(), 0.0);
        bm_.assign(k_, 0.0);
        bv_.assign(k_, 0.0);
    }
    Gradient g;
    const double loss_value = accumulate(xs, ys, &g);
    ++steps_;
    const double t = static_cast<double>(steps_);
    kernels::AdamParams p{config.learning_rate * std::sqrt(1.0 - std::pow(config.beta2, t)) /
                              (1.0 - std::pow(config.beta1, t)),
                          config.beta1, config.beta2, config.epsilon};
    const auto& kt = kernels::active();
    for (const auto& [bucket, row] : g.rows) {
        const std::size_t off = static_cast<std::size_t>(bucket) * k_;
        kt.adam_step(w_.data() + off, m_.data() + off, v_.data() + off, row.data(), k_, p);
    }
    kt.adam_step(b_.data(), bm_.data(), bv_.data(), g.bias.data(), k_, p);
    return loss_value;
}

namespace {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_str(std::string& out, std::string_view s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Reader {
public:
    explicit Reader(std::string_view& in, std::size_t total) : in_(in), total_(total) {}

    std::string_view take(std::size_t n) {
        if (in_.size() < n) throw ParseError(total_ - in_.size(), "router file is truncated");
        auto out = in_.substr(0, n);
        in_.remove_prefix(n);
        return out;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
        return v;
    }
    std::uint64_t u64() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() { return std::string(take(u32())); }
    std::size_t offset() const { return total_ - in_.size(); }

private:
    std::string_view& in_;
    std::size_t total_;
};

constexpr std::string_view kMagic = "VRTRMODL";
constexpr std::uint32_t kVersion = 1;

}  // namespace

void LinearHashedNgram::write(std::string& out) const {
    put_u64(out, dim_);
    put_u64(out, k_);
    for (double b : b_) put_f64(out, b);
    std::vector<std::uint32_t> rows;
    for (std::size_t r = 0; r < dim_; ++r) {
        const double* row = w_.data() + r * k_;
        if (std::any_of(row, row + k_, [](double x) { return x != 0.0; })) rows.push_back(static_cast<std::uint32_t>(r));
    }
    put_u64(out, rows.size());
    for (auto r : rows) {
        put_u32(out, r);
        for (std::size_t c = 0; c < k_; ++c) put_f64(out, w_[static_cast<std::size_t>(r) * k_ + c]);
    }
}

std::unique_ptr<LinearHashedNgram> LinearHashedNgram::read(std::string_view& in) {
    Reader r(in, in.size());
    const std::uint64_t dim = r.u64();
    const std::uint64_t k = r.u64();
    if (dim == 0 || dim > (std::uint64_t{1} << 30) || k == 0 || k > 1'000'000)
        throw ParseError(0, "implausible learner shape");
    auto out = std::make_unique<LinearHashedNgram>(dim, k);
    for (auto& b : out->b_) b = r.f64();
    const std::uint64_t rows = r.u64();
    if (rows > dim) throw ParseError(r.offset(), "more weight rows than buckets");
    for (std::uint64_t i = 0; i < rows; ++i) {
        const std::uint32_t bucket = r.u32();
        if (bucket >= dim) throw ParseError(r.offset(), "weight row outside the learner dimension");
        for (std::size_t c = 0; c < k; ++c) out->w_[static_cast<std::size_t>(bucket) * k + c] = r.f64();
    }
    return out;
}

RouterModel::RouterModel(const RouterModel& other)
    : model_vocabulary(other.model_vocabulary),
      featurize(other.featurize),
      flags(other.flags),
      train(other.train),
      learner(other.learner ? other.learner->clone() : nullptr),
      best_iteration(other.best_iteration),
      best_validation_accuracy(other.best_validation_accuracy) {}

RouterModel& RouterModel::operator=(const RouterModel& other) {
    if (this != &other) *this = RouterModel(other);
    return *this;
}

std::size_t RouterModel::predict_index(std::string_view serialized_input) const {
    if (!learner) throw InvalidInput("router has no trained learner");
    if (model_vocabulary.size() == 1) return 0;
    std::vector<double> z(learner->num_classes());
    learner->logits(vroute::featurize(serialized_input, featurize), z);
    return static_cast<std::size_t>(argmax_lowest(z));
}

RouterModel train_router(std::span<const RouterExample> train, std::span<const RouterExample> validate,
                         const TrainConfig& config, const SerializationFlags& flags, std::span<const std::string> pool,
                         const FeaturizeConfig& featurize) {
    config.validate();
    featurize.validate();
    if (train.empty()) throw InvalidInput("train_router: training set is empty");

    RouterModel model;
    model.featurize = featurize;
    model.flags = flags;
    model.train = config;
    if (!pool.empty()) {
        model.model_vocabulary.assign(pool.begin(), pool.end());
    } else {
        std::set<std::string> labels;
        for (const auto& e : train) labels.insert(e.label_model_id);
        model.model_vocabulary.assign(labels.begin(), labels.end());
    }
    std::map<std::string, int> class_of;
    for (std::size_t i = 0; i < model.model_vocabulary.size(); ++i) class_of[model.model_vocabulary[i]] = static_cast<int>(i);

    auto encode = [&](std::span<const RouterExample> examples, std::vector<SparseVector>& xs, std::vector<int>& ys) {
        xs.reserve(examples.size());
        ys.reserve(examples.size());
        for (const auto& e : examples) {
            auto it = class_of.find(e.label_model_id);
            if (it == class_of.end()) throw InvalidInput("label '" + e.label_model_id + "' is not in the model pool");
            xs.push_back(vroute::featurize(e.serialized_input, featurize));
            ys.push_back(it->second);
        }
    };
    std::vector<SparseVector> train_x, val_x;
    std::vector<int> train_y, val_y;
    encode(train, train_x, train_y);
    encode(validate, val_x, val_y);

    auto learner = std::make_unique<LinearHashedNgram>(featurize.dim(), model.model_vocabulary.size());
    auto val_accuracy = [&](const Learner& l) {
        std::vector<double> z(l.num_classes());
        std::size_t hit = 0;
        for (std::size_t i = 0; i < val_x.size(); ++i) {
            l.logits(val_x[i], z);
            hit += argmax_lowest(z) == val_y[i] ? 1 : 0;
        }
        return static_cast<double>(hit) / static_cast<double>(val_x.size());
    };

    Rng rng(config.seed);
    std::vector<std::size_t> order(train_x.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    std::size_t cursor = 0;
    std::vector<const SparseVector*> bx(config.batch_size);
    std::vector<int> by(config.batch_size);
    std::unique_ptr<Learner> best;

    for (std::size_t t = 1; t <= config.max_iterations; ++t) {
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            if (cursor == order.size()) {
                rng.shuffle(std::span<std::size_t>(order));
                cursor = 0;
            }
            bx[b] = &train_x[order[cursor]];
            by[b] = train_y[order[cursor]];
            ++cursor;
        }
        learner->step(bx, by, config);
        if (!val_x.empty() && (t % config.eval_every == 0 || t == config.max_iterations)) {
            const double acc = val_accuracy(*learner);
            if (acc > model.best_validation_accuracy) {
                model.best_validation_accuracy = acc;
                model.best_iteration = t;
                best = learner->clone();
            }
        }
    }
    if (best) {
        model.learner = std::move(best);
    } else {
        spdlog::warn("train_router: no validation examples, keeping final-iteration parameters");
        model.best_iteration = config.max_iterations;
        model.learner = learner->clone();
    }
    return model;
}

double label_accuracy(const RouterModel& router, std::span<const RouterExample> examples) {
    if (examples.empty()) throw InvalidInput("label_accuracy: no examples");
    std::size_t hit = 0;
    for (const auto& e : examples) hit += router.predict(e.serialized_input) == e.label_model_id ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(examples.size());
}

std::string route(const RouterModel& router, const Sample&, const MetadataSummary& metadata,
                  const std::string& prompt_text, const std::vector<std::string>& options) {
    const std::string input =
        serialize_input(router.flags.include_metadata ? &metadata : nullptr, prompt_text,
                        router.flags.include_response_options ? &options : nullptr);
    return router.predict(input);
}

std::string_view strip_to_input(std::string_view line) {
    const auto sep = line.rfind("[SEP]model::");
    return sep == std::string_view::npos ? line : line.substr(0, sep);
}

RouterEvaluation evaluate_router(const RouterModel& router, const OutcomeGrid& grid, const World& world) {
    RouterEvaluation out;
    std::vector<std::size_t> vocab_to_grid;
    for (const auto& m : router.model_vocabulary) {
        auto it = std::find(grid.models().begin(), grid.models().end(), m);
        vocab_to_grid.push_back(it == grid.models().end() ? SIZE_MAX : static_cast<std::size_t>(it - grid.models().begin()));
    }
    for (const auto& block : grid.blocks()) {
        const auto& config = world.config_for(block.dataset_id);
        const auto variants = prompt_variants(config);
        auto& counts = out.routed[block.dataset_id];
        out.per_dataset[block.dataset_id] = grid.dataset_accuracy(block, [&](const auto&, const OutcomeGrid::Pair& p) {
            const auto parts = closed_prompt_parts(*p.sample, config, find_variant(variants, p.variant_id));
            const std::string input = serialize_input(
                router.flags.include_metadata ? &world.metadata_for(*p.sample) : nullptr, parts.question,
                router.flags.include_response_options ? &parts.options : nullptr);
            const std::size_t k = router.predict_index(input);
            counts[router.model_vocabulary[k]] += 1;
            if (vocab_to_grid[k] == SIZE_MAX)
                throw CoverageError({router.model_vocabulary[k]},
                                    "router picked " + router.model_vocabulary[k] + " which has no recorded outcomes");
            return p.correct[vocab_to_grid[k]] != 0;
        });
    }
    return out;
}

std::string encode_router(const RouterModel& router) {
    if (!router.learner) throw InvalidInput("cannot save an untrained router");
    std::string out(kMagic);
    put_u32(out, kVersion);
    put_u32(out, router.featurize.min_order);
    put_u32(out, router.featurize.max_order);
    put_u32(out, router.featurize.hash_bits);
    put_u8(out, router.featurize.lowercase ? 1 : 0);
    put_u8(out, router.flags.include_metadata ? 1 : 0);
    put_u8(out, router.flags.include_response_options ? 1 : 0);
    put_f64(out, router.train.learning_rate);
    put_u64(out, router.train.batch_size);
    put_u64(out, router.train.max_iterations);
    put_u64(out, router.train.eval_every);
    put_u64(out, router.train.seed);
    put_f64(out, router.train.beta1);
    put_f64(out, router.train.beta2);
    put_f64(out, router.train.epsilon);
    put_u64(out, router.best_iteration);
    put_f64(out, router.best_validation_accuracy);
    put_u32(out, static_cast<std::uint32_t>(router.model_vocabulary.size()));
    for (const auto& m : router.model_vocabulary) put_str(out, m);
    put_str(out, router.learner->kind());
    router.learner->write(out);
    return out;
}

RouterModel decode_router(std::string_view bytes) {
    const std::size_t total = bytes.size();
    std::string_view in = bytes;
    Reader r(in, total);
    if (r.take(kMagic.size()) != kMagic) throw ParseError(0, "not a router file");
    const std::uint32_t version = r.u32();
    if (version != kVersion) throw ParseError(kMagic.size(), "unsupported router file version " + std::to_string(version));
    RouterModel m;
    m.featurize.min_order = r.u32();
    m.featurize.max_order = r.u32();
    m.featurize.hash_bits = r.u32();
    m.featurize.lowercase = r.u8() != 0;
    m.featurize.validate();
    m.flags.include_metadata = r.u8() != 0;
    m.flags.include_response_options = r.u8() != 0;
    m.train.learning_rate = r.f64();
    m.train.batch_size = r.u64();
    m.train.max_iterations = r.u64();
    m.train.eval_every = r.u64();
    m.train.seed = r.u64();
    m.train.beta1 = r.f64();
    m.train.beta2 = r.f64();
    m.train.epsilon = r.f64();
    m.best_iteration = r.u64();
    m.best_validation_accuracy = r.f64();
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) m.model_vocabulary.push_back(r.str());
    const std::string kind = r.str();
    if (kind != "linear_hashed_ngram") throw ParseError(r.offset(), "unknown learner kind '" + kind + "'");
    const std::size_t learner_at = r.offset();
    auto learner = LinearHashedNgram::read(in);
    if (!in.empty()) throw ParseError(total - in.size(), "trailing bytes after learner");
    if (learner->num_classes() != m.model_vocabulary.size() || learner->dim() != m.featurize.dim())
        throw ParseError(learner_at, "learner shape does not match the vocabulary and featurization");
    m.learner = std::move(learner);
    return m;
}

void save_router(const RouterModel& router, const std::filesystem::path& path) {
    write_text_file(path, encode_router(router));
}

RouterModel load_router(const std::filesystem::path& path) { return decode_router(read_text_file(path)); }

}  // namespace vroute
