#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mapmeta/features.hpp"

namespace mapmeta {

struct LinkerConfig {
    int input_dim = 55;
    int hidden_dim = 64;
    int embed_dim = 32;  // encoder output width
    double margin = 0.2;
    double lambda = 1.0;  // weight of the triplet term
    double learning_rate = 0.05;
    int epochs = 300;
    int batch_size = 0;  // 0 = one batch per sheet
    int negatives_per_anchor = 3;
    uint64_t seed = 1;
    double tau_text = 0.5;
};

// Pairwise linkage model: a shared two-layer tanh encoder and a logistic
// head over [e_i, e_j, |e_i - e_j|]. The head input is ordered, so
// p(i,j) and p(j,i) may differ; the downstream graph is directed.
class LinkerModel {
public:
    LinkerModel() = default;

    explicit LinkerModel(const LinkerConfig& cfg) : cfg_(cfg) {
        w1_.assign(static_cast<size_t>(cfg.hidden_dim) * cfg.input_dim, 0.0);
        b1_.assign(cfg.hidden_dim, 0.0);
        w2_.assign(static_cast<size_t>(cfg.embed_dim) * cfg.hidden_dim, 0.0);
        b2_.assign(cfg.embed_dim, 0.0);
        wh_.assign(static_cast<size_t>(3) * cfg.embed_dim, 0.0);
        bh_ = 0.0;
        Rng rng(cfg.seed);
        init_layer(rng, w1_, cfg.input_dim);
        init_layer(rng, w2_, cfg.hidden_dim);
        init_layer(rng, wh_, 3 * cfg.embed_dim);
    }

    const LinkerConfig& config() const { return cfg_; }
    LinkerConfig& config() { return cfg_; }

    struct EncodeCache {
        std::vector<double> input;
        std::vector<double> a1;
        std::vector<double> e;
    };

    std::vector<double> encode(std::span<const double> r) const {
        EncodeCache cache;
        encode(r, cache);
        return cache.e;
    }

    void encode(std::span<const double> r, EncodeCache& cache) const {
        if (static_cast<int>(r.size()) != cfg_.input_dim)
            throw contract_error("feature dimension " + std::to_string(r.size()) +
                                 " does not match model input " + std::to_string(cfg_.input_dim));
        cache.input.assign(r.begin(), r.end());
        cache.a1.assign(cfg_.hidden_dim, 0.0);
        for (int h = 0; h < cfg_.hidden_dim; ++h) {
            double z = b1_[h];
            const double* row = &w1_[static_cast<size_t>(h) * cfg_.input_dim];
            for (int i = 0; i < cfg_.input_dim; ++i) z += row[i] * r[i];
            cache.a1[h] = std::tanh(z);
        }
        cache.e.assign(cfg_.embed_dim, 0.0);
        for (int o = 0; o < cfg_.embed_dim; ++o) {
            double z = b2_[o];
            const double* row = &w2_[static_cast<size_t>(o) * cfg_.hidden_dim];
            for (int h = 0; h < cfg_.hidden_dim; ++h) z += row[h] * cache.a1[h];
            cache.e[o] = std::tanh(z);
        }
    }

    double forward_pair(std::span<const double> ri, std::span<const double> rj) const {
        if (ri.size() != rj.size()) throw contract_error("forward_pair: dimension mismatch");
        EncodeCache ci, cj;
        encode(ri, ci);
        encode(rj, cj);
        return head(ci.e, cj.e);
    }

    double head(const std::vector<double>& ei, const std::vector<double>& ej) const {
        double u = bh_;
        int d = cfg_.embed_dim;
        for (int k = 0; k < d; ++k) {
            u += wh_[k] * ei[k];
            u += wh_[d + k] * ej[k];
            u += wh_[2 * d + k] * std::abs(ei[k] - ej[k]);
        }
        return sigmoid(u);
    }

    // Flat parameter order: W1, b1, W2, b2, wh, bh.
    std::vector<double> parameters() const {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (auto* v : {&w1_, &b1_, &w2_, &b2_, &wh_}) p.insert(p.end(), v->begin(), v->end());
        p.push_back(bh_);
        return p;
    }

    void set_parameters(std::span<const double> p) {
        if (p.size() != parameter_count()) throw contract_error("parameter count mismatch");
        size_t off = 0;
        for (auto* v : {&w1_, &b1_, &w2_, &b2_, &wh_}) {
            std::copy(p.begin() + off, p.begin() + off + v->size(), v->begin());
            off += v->size();
        }
        bh_ = p[off];
    }

    size_t parameter_count() const {
        return w1_.size() + b1_.size() + w2_.size() + b2_.size() + wh_.size() + 1;
    }

    static double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

private:
    void init_layer(Rng& rng, std::vector<double>& w, int fan_in) {
        double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& x : w) x = rng_normal(rng) * s;
    }

    friend struct LinkerGradients;
    friend class LinkerTrainer;

    LinkerConfig cfg_;
    std::vector<double> w1_, b1_, w2_, b2_, wh_;
    double bh_ = 0.0;
};

// --- losses ---------------------------------------------------------------

// Mean binary cross-entropy; predictions are clamped to [eps, 1-eps].
inline double bce_loss(std::span<const double> preds, std::span<const int> labels,
                       double eps = 1e-7) {
    if (preds.empty()) throw contract_error("bce_loss: empty input");
    if (preds.size() != labels.size()) throw contract_error("bce_loss: length mismatch");
    double total = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        double p = std::clamp(preds[i], eps, 1.0 - eps);
        total += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(preds.size());
}

// Hinged triplet loss, summed over triplets (no mean).
inline double triplet_loss(std::span<const std::vector<double>> anchors,
                           std::span<const std::vector<double>> positives,
                           std::span<const std::vector<double>> negatives, double margin) {
    if (anchors.size() != positives.size() || anchors.size() != negatives.size())
        throw contract_error("triplet_loss: count mismatch");
    double total = 0.0;
    for (size_t i = 0; i < anchors.size(); ++i) {
        if (anchors[i].size() != positives[i].size() || anchors[i].size() != negatives[i].size())
            throw contract_error("triplet_loss: dimension mismatch");
        double dp = 0.0, dn = 0.0;
        for (size_t k = 0; k < anchors[i].size(); ++k) {
            double a = anchors[i][k];
            dp += (a - positives[i][k]) * (a - positives[i][k]);
            dn += (a - negatives[i][k]) * (a - negatives[i][k]);
        }
        total += std::max(0.0, dp - dn + margin);
    }
    return total;
}

// --- batch sampling ---------------------------------------------------------

struct PairSample {
    int anchor = 0;
    int other = 0;
    int label = 0;
};

struct TripletSample {
    int anchor = 0;
    int positive = 0;
    int negative = 0;
};

struct SheetBatch {
    std::vector<PairSample> pairs;
    std::vector<TripletSample> triplets;
};

namespace detail {

inline std::vector<int> group_index_of_regions(const MapSheet& sheet) {
    // regions outside every ground-truth group act as singleton groups
    std::vector<int> gidx(sheet.regions.size(), -1);
    for (size_t g = 0; g < sheet.gt_groups.size(); ++g)
        for (const auto& id : sheet.gt_groups[g]) {
            int i = sheet.index_of(id);
            if (i < 0) throw validation_error("group references unknown region id '" + id + "'");
            gidx[i] = static_cast<int>(g);
        }
    int next = static_cast<int>(sheet.gt_groups.size());
    for (auto& g : gidx)
        if (g < 0) g = next++;
    return gidx;
}

inline double median_font_height(const MapSheet& sheet) {
    std::vector<double> h;
    h.reserve(sheet.regions.size());
    for (const auto& r : sheet.regions) h.push_back(r.height);
    std::sort(h.begin(), h.end());
    size_t n = h.size();
    return n % 2 ? h[n / 2] : 0.5 * (h[n / 2 - 1] + h[n / 2]);
}

}  // namespace detail

// Per anchor in a multi-word group: one positive pair with a random
// co-member and k negative pairs; negatives are biased toward spatial
// neighbors (weight 1/(1 + pixel distance / median font height)), which
// is where the hard cases live. Each negative also yields one triplet
// reusing the (anchor, positive) pair.
inline SheetBatch sample_batches(const MapSheet& sheet, Rng& rng, int negatives_per_anchor) {
    auto gidx = detail::group_index_of_regions(sheet);
    bool trainable = false;
    for (const auto& g : sheet.gt_groups)
        if (g.size() >= 2) trainable = true;
    if (!trainable)
        throw validation_error("sheet '" + sheet.sheet_id +
                               "' has no multi-word ground-truth group; it cannot be trained on");

    double med_h = detail::median_font_height(sheet);
    if (med_h <= 0) med_h = 1.0;

    SheetBatch batch;
    int n = static_cast<int>(sheet.regions.size());
    for (int a = 0; a < n; ++a) {
        // co-members of the anchor's group
        std::vector<int> members;
        for (int j = 0; j < n; ++j)
            if (j != a && gidx[j] == gidx[a]) members.push_back(j);
        if (members.empty()) continue;

        int pos = members[rng_index(rng, members.size())];
        batch.pairs.push_back({a, pos, 1});

        std::vector<int> pool;
        std::vector<double> weights;
        for (int j = 0; j < n; ++j) {
            if (gidx[j] == gidx[a]) continue;
            pool.push_back(j);
            double d = (sheet.regions[j].center - sheet.regions[a].center).norm();
            weights.push_back(1.0 / (1.0 + d / med_h));
        }
        if (pool.empty()) continue;
        for (int k = 0; k < negatives_per_anchor; ++k) {
            int neg = pool[rng_weighted(rng, weights)];
            batch.pairs.push_back({a, neg, 0});
            batch.triplets.push_back({a, pos, neg});
        }
    }
    return batch;
}

// --- training ---------------------------------------------------------------

struct TrainingSheet {
    MapSheet sheet;
    std::vector<FeatureVector> features;
};

struct LinkerGradients {
    std::vector<double> w1, b1, w2, b2, wh;
    double bh = 0.0;

    explicit LinkerGradients(const LinkerModel& m)
        : w1(m.w1_.size(), 0.0),
          b1(m.b1_.size(), 0.0),
          w2(m.w2_.size(), 0.0),
          b2(m.b2_.size(), 0.0),
          wh(m.wh_.size(), 0.0) {}

    std::vector<double> flat() const {
        std::vector<double> p;
        for (auto* v : {&w1, &b1, &w2, &b2, &wh}) p.insert(p.end(), v->begin(), v->end());
        p.push_back(bh);
        return p;
    }
};

class LinkerTrainer {
public:
    // Combined batch objective: mean BCE over pairs plus lambda times the
    // summed triplet loss over encoder embeddings. Gradients are hand
    // derived; `grads` may be null when only the loss is wanted.
    static double batch_loss(const LinkerModel& m, const std::vector<FeatureVector>& feats,
                             const SheetBatch& batch, LinkerGradients* grads) {
        const auto& cfg = m.config();
        int d = cfg.embed_dim;
        double loss = 0.0;

        std::vector<LinkerModel::EncodeCache> caches(feats.size());
        std::vector<char> encoded(feats.size(), 0);
        auto cache_of = [&](int idx) -> LinkerModel::EncodeCache& {
            if (!encoded[idx]) {
                m.encode(feats[idx], caches[idx]);
                encoded[idx] = 1;
            }
            return caches[idx];
        };
        // embedding-space gradient accumulator, one slot per region
        std::vector<std::vector<double>> de(feats.size());
        auto de_of = [&](int idx) -> std::vector<double>& {
            if (de[idx].empty()) de[idx].assign(d, 0.0);
            return de[idx];
        };

        if (!batch.pairs.empty()) {
            double inv_n = 1.0 / static_cast<double>(batch.pairs.size());
            double bce = 0.0;
            for (const auto& pr : batch.pairs) {
                auto& ci = cache_of(pr.anchor);
                auto& cj = cache_of(pr.other);
                double u = m.bh_;
                for (int k = 0; k < d; ++k) {
                    u += m.wh_[k] * ci.e[k] + m.wh_[d + k] * cj.e[k] +
                         m.wh_[2 * d + k] * std::abs(ci.e[k] - cj.e[k]);
                }
                double p = LinkerModel::sigmoid(u);
                double pc = std::clamp(p, 1e-7, 1.0 - 1e-7);
                bce += pr.label ? -std::log(pc) : -std::log(1.0 - pc);
                if (grads) {
                    double du = (p - pr.label) * inv_n;
                    grads->bh += du;
                    auto& dei = de_of(pr.anchor);
                    auto& dej = de_of(pr.other);
                    for (int k = 0; k < d; ++k) {
                        double diff = ci.e[k] - cj.e[k];
                        double sgn = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
                        grads->wh[k] += du * ci.e[k];
                        grads->wh[d + k] += du * cj.e[k];
                        grads->wh[2 * d + k] += du * std::abs(diff);
                        dei[k] += du * (m.wh_[k] + m.wh_[2 * d + k] * sgn);
                        dej[k] += du * (m.wh_[d + k] - m.wh_[2 * d + k] * sgn);
                    }
                }
            }
            loss += bce * inv_n;
        }

        for (const auto& tr : batch.triplets) {
            auto& ca = cache_of(tr.anchor);
            auto& cp = cache_of(tr.positive);
            auto& cn = cache_of(tr.negative);
            double dp = 0.0, dn = 0.0;
            for (int k = 0; k < d; ++k) {
                dp += (ca.e[k] - cp.e[k]) * (ca.e[k] - cp.e[k]);
                dn += (ca.e[k] - cn.e[k]) * (ca.e[k] - cn.e[k]);
            }
            double hinge = dp - dn + cfg.margin;
            if (hinge > 0.0) {
                loss += cfg.lambda * hinge;
                if (grads) {
                    auto& da = de_of(tr.anchor);
                    auto& dpos = de_of(tr.positive);
                    auto& dneg = de_of(tr.negative);
                    for (int k = 0; k < d; ++k) {
                        da[k] += cfg.lambda * 2.0 * (cn.e[k] - cp.e[k]);
                        dpos[k] += cfg.lambda * -2.0 * (ca.e[k] - cp.e[k]);
                        dneg[k] += cfg.lambda * 2.0 * (ca.e[k] - cn.e[k]);
                    }
                }
            }
        }

        if (grads) {
            for (size_t idx = 0; idx < feats.size(); ++idx) {
                if (de[idx].empty()) continue;
                backprop_encoder(m, caches[idx], de[idx], *grads);
            }
        }
        return loss;
    }

    // Plain mini-batch gradient descent, deterministic under a fixed seed:
    // batches are sampled once per sheet up front and reused every epoch.
    static std::vector<double> train(LinkerModel& m, const std::vector<TrainingSheet>& sheets) {
        const auto& cfg = m.config();
        if (sheets.empty()) throw contract_error("train: no sheets");
        Rng rng(cfg.seed);
        std::vector<SheetBatch> batches;
        batches.reserve(sheets.size());
        for (const auto& ts : sheets)
            batches.push_back(sample_batches(ts.sheet, rng, cfg.negatives_per_anchor));

        std::vector<std::vector<SheetBatch>> chunked(sheets.size());
        for (size_t s = 0; s < sheets.size(); ++s) chunked[s] = chunk(batches[s], cfg.batch_size);

        std::vector<double> history;
        history.reserve(cfg.epochs);
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            double epoch_loss = 0.0;
            int steps = 0;
            for (size_t s = 0; s < sheets.size(); ++s) {
                for (const auto& chunk_batch : chunked[s]) {
                    LinkerGradients g(m);
                    double loss = batch_loss(m, sheets[s].features, chunk_batch, &g);
                    if (!std::isfinite(loss))
                        throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                                 std::to_string(epoch) + ", sheet " +
                                                 sheets[s].sheet.sheet_id);
                    apply(m, g, cfg.learning_rate);
                    epoch_loss += loss;
                    ++steps;
                }
            }
            history.push_back(steps ? epoch_loss / steps : 0.0);
        }
        return history;
    }

private:
    static std::vector<SheetBatch> chunk(const SheetBatch& batch, int batch_size) {
        if (batch_size <= 0 ||
            (batch.pairs.size() <= static_cast<size_t>(batch_size) &&
             batch.triplets.size() <= static_cast<size_t>(batch_size)))
            return {batch};
        size_t n_chunks = std::max((batch.pairs.size() + batch_size - 1) / batch_size,
                                   (batch.triplets.size() + batch_size - 1) / batch_size);
        std::vector<SheetBatch> out(n_chunks);
        for (size_t i = 0; i < batch.pairs.size(); ++i)
            out[i % n_chunks].pairs.push_back(batch.pairs[i]);
        for (size_t i = 0; i < batch.triplets.size(); ++i)
            out[i % n_chunks].triplets.push_back(batch.triplets[i]);
        return out;
    }

    static void backprop_encoder(const LinkerModel& m, const LinkerModel::EncodeCache& cache,
                                 const std::vector<double>& de, LinkerGradients& g) {
        const auto& cfg = m.config();
        std::vector<double> dz2(cfg.embed_dim);
        for (int o = 0; o < cfg.embed_dim; ++o) dz2[o] = de[o] * (1.0 - cache.e[o] * cache.e[o]);
        std::vector<double> da1(cfg.hidden_dim, 0.0);
        for (int o = 0; o < cfg.embed_dim; ++o) {
            const double* row = &m.w2_[static_cast<size_t>(o) * cfg.hidden_dim];
            double* grow = &g.w2[static_cast<size_t>(o) * cfg.hidden_dim];
            for (int h = 0; h < cfg.hidden_dim; ++h) {
                grow[h] += dz2[o] * cache.a1[h];
                da1[h] += dz2[o] * row[h];
            }
            g.b2[o] += dz2[o];
        }
        for (int h = 0; h < cfg.hidden_dim; ++h) {
            double dz1 = da1[h] * (1.0 - cache.a1[h] * cache.a1[h]);
            double* grow = &g.w1[static_cast<size_t>(h) * cfg.input_dim];
            for (int i = 0; i < cfg.input_dim; ++i) grow[i] += dz1 * cache.input[i];
            g.b1[h] += dz1;
        }
    }

    static void apply(LinkerModel& m, const LinkerGradients& g, double lr) {
        auto step = [lr](std::vector<double>& w, const std::vector<double>& gw) {
            for (size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
        };
        step(m.w1_, g.w1);
        step(m.b1_, g.b1);
        step(m.w2_, g.w2);
        step(m.b2_, g.b2);
        step(m.wh_, g.wh);
        m.bh_ -= lr * g.bh;
    }
};

// All regions j != query whose pair probability strictly exceeds tau.
inline std::vector<int> retrieve_candidates(const LinkerModel& model,
                                            const std::vector<FeatureVector>& features,
                                            int query_index, double tau_text) {
    if (query_index < 0 || query_index >= static_cast<int>(features.size()))
        throw contract_error("retrieve_candidates: query index out of range");
    std::vector<int> out;
    for (int j = 0; j < static_cast<int>(features.size()); ++j) {
        if (j == query_index) continue;
        if (model.forward_pair(features[query_index], features[j]) > tau_text) out.push_back(j);
    }
    return out;
}

// --- checkpoint i/o ---------------------------------------------------------
//
// Binary layout (little-endian): magic "MMLK", u32 version, u32 dims
// (input, hidden, embed), f64 margin/lambda/lr/tau, u64 epochs/batch/k/seed,
// u64 parameter count, then the flat f64 parameter array.

inline std::string serialize_checkpoint(const LinkerModel& model) {
    const auto& cfg = model.config();
    std::string out = "MMLK";
    put_le_u32(out, 1);
    put_le_u32(out, static_cast<uint32_t>(cfg.input_dim));
    put_le_u32(out, static_cast<uint32_t>(cfg.hidden_dim));
    put_le_u32(out, static_cast<uint32_t>(cfg.embed_dim));
    put_le_f64(out, cfg.margin);
    put_le_f64(out, cfg.lambda);
    put_le_f64(out, cfg.learning_rate);
    put_le_f64(out, cfg.tau_text);
    put_le_u64(out, static_cast<uint64_t>(cfg.epochs));
    put_le_u64(out, static_cast<uint64_t>(cfg.batch_size));
    put_le_u64(out, static_cast<uint64_t>(cfg.negatives_per_anchor));
    put_le_u64(out, cfg.seed);
    auto params = model.parameters();
    put_le_u64(out, params.size());
    for (double p : params) put_le_f64(out, p);
    return out;
}

inline LinkerModel deserialize_checkpoint(std::string_view data) {
    ByteReader r(data);
    if (r.bytes(4) != "MMLK") throw parse_error("not a linker checkpoint (bad magic)");
    uint32_t version = r.u32();
    if (version != 1) throw parse_error("unsupported checkpoint version " + std::to_string(version));
    LinkerConfig cfg;
    cfg.input_dim = static_cast<int>(r.u32());
    cfg.hidden_dim = static_cast<int>(r.u32());
    cfg.embed_dim = static_cast<int>(r.u32());
    cfg.margin = r.f64();
    cfg.lambda = r.f64();
    cfg.learning_rate = r.f64();
    cfg.tau_text = r.f64();
    cfg.epochs = static_cast<int>(r.u64());
    cfg.batch_size = static_cast<int>(r.u64());
    cfg.negatives_per_anchor = static_cast<int>(r.u64());
    cfg.seed = r.u64();
    uint64_t count = r.u64();
    LinkerModel model(cfg);
    if (count != model.parameter_count())
        throw parse_error("checkpoint parameter count mismatch");
    std::vector<double> params(count);
    for (auto& p : params) p = r.f64();
    if (!r.at_end()) throw parse_error("trailing bytes in checkpoint");
    model.set_parameters(params);
    return model;
}

inline void save_checkpoint(const LinkerModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write checkpoint: " + path);
    auto data = serialize_checkpoint(model);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline LinkerModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open checkpoint: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

}  // namespace mapmeta
