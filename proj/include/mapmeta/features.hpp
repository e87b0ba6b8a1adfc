#pragma once

#include <fstream>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "mapmeta/sheet.hpp"

namespace mapmeta {

enum class OovPolicy {
    kZeros,       // out-of-vocabulary tokens embed as the zero vector
    kHashedUnit,  // deterministic unit vector seeded by the token hash
};

// Word vectors in the plain-text format `token v1 ... vD`, one per line.
// Lookup is case-insensitive; the first occurrence of a token wins.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(size_t dimension, OovPolicy policy) : dim_(dimension), policy_(policy) {}

    static EmbeddingTable load(const std::string& path, OovPolicy policy = OovPolicy::kZeros) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw config_error("cannot open embeddings file: " + path);
        EmbeddingTable table;
        table.policy_ = policy;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            auto tokens = split_ws(line);
            if (tokens.size() < 2)
                throw parse_error(path + ":" + std::to_string(line_no) + ": token without vector");
            std::vector<double> vec(tokens.size() - 1);
            for (size_t i = 1; i < tokens.size(); ++i)
                vec[i - 1] = parse_double(tokens[i], "embedding component");
            if (table.dim_ == 0) {
                table.dim_ = vec.size();
            } else if (vec.size() != table.dim_) {
                throw parse_error(path + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(table.dim_) + " components, got " +
                                  std::to_string(vec.size()));
            }
            table.vectors_.emplace(to_lower(tokens[0]), std::move(vec));
        }
        if (table.dim_ == 0) throw parse_error(path + ": empty embeddings file");
        return table;
    }

    void insert(std::string_view token, std::vector<double> vec) {
        if (dim_ == 0) dim_ = vec.size();
        if (vec.size() != dim_) throw contract_error("embedding dimension mismatch on insert");
        vectors_.emplace(to_lower(token), std::move(vec));
    }

    size_t dimension() const { return dim_; }
    size_t size() const { return vectors_.size(); }
    bool contains(std::string_view token) const { return vectors_.count(to_lower(token)) > 0; }

    // Single-token lookup with the OOV fallback applied.
    std::vector<double> lookup(std::string_view token) const {
        auto it = vectors_.find(to_lower(token));
        if (it != vectors_.end()) return it->second;
        if (policy_ == OovPolicy::kZeros) return std::vector<double>(dim_, 0.0);
        // Hash-seeded unit vector: deterministic per lowercased token.
        Rng rng(std::hash<std::string>{}(to_lower(token)) | 1ULL);
        std::vector<double> v(dim_);
        double norm2 = 0.0;
        for (double& x : v) {
            x = rng_normal(rng);
            norm2 += x * x;
        }
        double inv = 1.0 / std::sqrt(norm2 > 0 ? norm2 : 1.0);
        for (double& x : v) x *= inv;
        return v;
    }

private:
    size_t dim_ = 0;
    OovPolicy policy_ = OovPolicy::kZeros;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

// A transcription may hold several whitespace-separated tokens ("St Paul"
// in one box); those embed as the mean of the per-token vectors.
inline std::vector<double> embed_word(const EmbeddingTable& table, std::string_view text) {
    auto tokens = split_ws(text);
    if (tokens.empty()) throw contract_error("embed_word: empty text");
    if (tokens.size() == 1) return table.lookup(tokens[0]);
    std::vector<double> acc(table.dimension(), 0.0);
    for (const auto& tok : tokens) {
        auto v = table.lookup(tok);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    for (double& x : acc) x /= static_cast<double>(tokens.size());
    return acc;
}

// Average font area: box area divided by the transcription length in
// Unicode scalar values.
inline double font_area(const TextRegion& region) {
    size_t len = utf8_length(trim(region.text));
    return region.width * region.height / static_cast<double>(len);
}

// Per-sheet min/max used for the [-1,1] scaling of locations and font
// area. Angle always divides by 180.
struct NormalizationContext {
    double cx_min = 0.0, cx_max = 0.0;
    double cy_min = 0.0, cy_max = 0.0;
    double f_min = 0.0, f_max = 0.0;

    static NormalizationContext from_sheet(const MapSheet& sheet) {
        if (sheet.regions.empty()) throw contract_error("normalization context over empty sheet");
        NormalizationContext ctx;
        ctx.cx_min = ctx.cx_max = sheet.regions[0].center.x;
        ctx.cy_min = ctx.cy_max = sheet.regions[0].center.y;
        ctx.f_min = ctx.f_max = font_area(sheet.regions[0]);
        for (const auto& r : sheet.regions) {
            ctx.cx_min = std::min(ctx.cx_min, r.center.x);
            ctx.cx_max = std::max(ctx.cx_max, r.center.x);
            ctx.cy_min = std::min(ctx.cy_min, r.center.y);
            ctx.cy_max = std::max(ctx.cy_max, r.center.y);
            double f = font_area(r);
            ctx.f_min = std::min(ctx.f_min, f);
            ctx.f_max = std::max(ctx.f_max, f);
        }
        return ctx;
    }

    // Affine min-max to [-1,1]; a constant column maps to 0.
    static double scale(double x, double lo, double hi) {
        if (hi == lo) return 0.0;
        return 2.0 * (x - lo) / (hi - lo) - 1.0;
    }
};

using FeatureVector = std::vector<double>;

// r = embedding ⊕ (c_x, c_y, angle/180, font_area, caps); length dim+5.
inline FeatureVector build_feature_vector(const TextRegion& region, const NormalizationContext& ctx,
                                          const EmbeddingTable& table) {
    FeatureVector r = embed_word(table, trim(region.text));
    r.reserve(r.size() + 5);
    r.push_back(NormalizationContext::scale(region.center.x, ctx.cx_min, ctx.cx_max));
    r.push_back(NormalizationContext::scale(region.center.y, ctx.cy_min, ctx.cy_max));
    r.push_back(region.angle / 180.0);
    r.push_back(NormalizationContext::scale(font_area(region), ctx.f_min, ctx.f_max));
    r.push_back(static_cast<double>(region.caps));
    return r;
}

// Feature vectors for every region of a sheet, in region order.
inline std::vector<FeatureVector> build_sheet_features(const MapSheet& sheet,
                                                       const EmbeddingTable& table) {
    auto ctx = NormalizationContext::from_sheet(sheet);
    std::vector<FeatureVector> out;
    out.reserve(sheet.regions.size());
    for (const auto& r : sheet.regions) out.push_back(build_feature_vector(r, ctx, table));
    return out;
}

}  // namespace mapmeta
