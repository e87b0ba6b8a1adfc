#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mapmeta/geo.hpp"

namespace mapmeta {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    static Prf from_counts(double tp, double fp, double fn) {
        Prf out;
        out.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        out.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        out.f1 = out.precision + out.recall > 0
                     ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                     : 0.0;
        return out;
    }
};

using Edge = std::pair<std::string, std::string>;

enum class GtEdgeMode { kAllPairs, kChain };

// Ground-truth edges from ordered groups: every ordered pair of distinct
// members (the strongly-connected target), or just consecutive members in
// both directions under chain mode.
inline std::set<Edge> gt_edges_from_groups(const std::vector<std::vector<std::string>>& groups,
                                           GtEdgeMode mode = GtEdgeMode::kAllPairs) {
    std::set<Edge> out;
    for (const auto& g : groups) {
        if (mode == GtEdgeMode::kAllPairs) {
            for (const auto& a : g)
                for (const auto& b : g)
                    if (a != b) out.emplace(a, b);
        } else {
            for (size_t i = 0; i + 1 < g.size(); ++i) {
                out.emplace(g[i], g[i + 1]);
                out.emplace(g[i + 1], g[i]);
            }
        }
    }
    return out;
}

inline Prf linkage_prf(const std::set<Edge>& pred, const std::set<Edge>& gt) {
    double tp = 0;
    for (const auto& e : pred)
        if (gt.count(e)) ++tp;
    double fp = static_cast<double>(pred.size()) - tp;
    double fn = static_cast<double>(gt.size()) - tp;
    return Prf::from_counts(tp, fp, fn);
}

enum class PhraseMode { kDuplicate, kDistinct };

// Phrase strings compared exactly (content and order). Duplicate mode
// counts multiset intersections; distinct mode deduplicates first.
inline Prf phrase_prf(const std::vector<std::string>& pred, const std::vector<std::string>& gt,
                      PhraseMode mode) {
    if (mode == PhraseMode::kDistinct) {
        std::set<std::string> ps(pred.begin(), pred.end()), gs(gt.begin(), gt.end());
        double tp = 0;
        for (const auto& s : ps)
            if (gs.count(s)) ++tp;
        return Prf::from_counts(tp, static_cast<double>(ps.size()) - tp,
                                static_cast<double>(gs.size()) - tp);
    }
    std::map<std::string, int> pc, gc;
    for (const auto& s : pred) ++pc[s];
    for (const auto& s : gt) ++gc[s];
    double tp = 0;
    for (const auto& [s, n] : pc) {
        auto it = gc.find(s);
        if (it != gc.end()) tp += std::min(n, it->second);
    }
    return Prf::from_counts(tp, static_cast<double>(pred.size()) - tp,
                            static_cast<double>(gt.size()) - tp);
}

// Group-level precision/recall over region-id sequences. Ordered
// comparison matches id sequences exactly; unordered compares the id
// sets, which bounds what perfect ordering could achieve.
inline Prf grouped_prf(const std::vector<std::vector<std::string>>& pred,
                       const std::vector<std::vector<std::string>>& gt, PhraseMode mode,
                       bool ordered) {
    auto key_of = [ordered](const std::vector<std::string>& g) {
        std::vector<std::string> k = g;
        if (!ordered) std::sort(k.begin(), k.end());
        std::string joined;
        for (const auto& id : k) joined += id + "\x1f";
        return joined;
    };
    std::vector<std::string> pk, gk;
    pk.reserve(pred.size());
    gk.reserve(gt.size());
    for (const auto& g : pred) pk.push_back(key_of(g));
    for (const auto& g : gt) gk.push_back(key_of(g));
    return phrase_prf(pk, gk, mode);
}

struct GeoError {
    double err_km = 0.0;
    std::optional<double> err_scale;
};

inline GeoError geo_error(const LatLngDeg& gt, const LatLngDeg& pred,
                          const std::optional<LatLngDeg>& corner_min = std::nullopt,
                          const std::optional<LatLngDeg>& corner_max = std::nullopt) {
    GeoError out;
    out.err_km = haversine_km(gt, pred);
    if (corner_min && corner_max) {
        double diag = haversine_km(*corner_min, *corner_max);
        if (diag > 0) out.err_scale = out.err_km / diag;
    }
    return out;
}

// Word-level miss/add counts. Each ground-truth group is matched to the
// prediction group with the largest id overlap (ties prefer the smaller
// prediction group, then the one with the smallest member id); words the
// match lacks count as misses, extra words as adds. Ground-truth groups
// with no overlapping prediction miss all their words.
inline std::pair<int, int> error_decomposition(
    const std::vector<std::vector<std::string>>& pred_groups,
    const std::vector<std::vector<std::string>>& gt_groups) {
    int n_miss = 0, n_add = 0;
    for (const auto& gt : gt_groups) {
        std::set<std::string> gset(gt.begin(), gt.end());
        const std::vector<std::string>* best = nullptr;
        size_t best_overlap = 0;
        for (const auto& pred : pred_groups) {
            size_t overlap = 0;
            for (const auto& id : pred)
                if (gset.count(id)) ++overlap;
            if (overlap == 0) continue;
            bool better = !best || overlap > best_overlap ||
                          (overlap == best_overlap &&
                           (pred.size() < best->size() ||
                            (pred.size() == best->size() &&
                             *std::min_element(pred.begin(), pred.end()) <
                                 *std::min_element(best->begin(), best->end()))));
            if (better) {
                best = &pred;
                best_overlap = overlap;
            }
        }
        if (!best) {
            n_miss += static_cast<int>(gt.size());
            continue;
        }
        std::set<std::string> pset(best->begin(), best->end());
        for (const auto& id : gt)
            if (!pset.count(id)) ++n_miss;
        for (const auto& id : *best)
            if (!gset.count(id)) ++n_add;
    }
    return {n_miss, n_add};
}

// Histogram over half-open bins [e_i, e_{i+1}) with a final overflow bin
// for values >= the last edge. Values below the first edge land in the
// first bin so the counts always conserve the sample size.
inline std::vector<long long> error_histogram(const std::vector<double>& errors,
                                              const std::vector<double>& edges) {
    if (edges.size() < 2) throw contract_error("error_histogram: need at least two edges");
    for (size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1]))
            throw contract_error("error_histogram: edges must be strictly increasing");
    std::vector<long long> counts(edges.size(), 0);  // last slot = overflow
    for (double v : errors) {
        if (v >= edges.back()) {
            ++counts.back();
            continue;
        }
        size_t bin = 0;
        for (size_t i = 1; i < edges.size(); ++i)
            if (v >= edges[i - 1] && v < edges[i]) {
                bin = i - 1;
                break;
            }
        ++counts[bin];
    }
    return counts;
}

inline std::string histogram_csv(const std::vector<double>& edges,
                                 const std::vector<long long>& counts) {
    std::string out = "bin_lo,bin_hi,count\n";
    for (size_t i = 0; i + 1 < edges.size(); ++i)
        out += format_double(edges[i]) + "," + format_double(edges[i + 1]) + "," +
               std::to_string(counts[i]) + "\n";
    out += format_double(edges.back()) + ",inf," + std::to_string(counts.back()) + "\n";
    return out;
}

}  // namespace mapmeta
