// Test-only brute-force oracles, kept independent of the library's
// algorithmic implementations on purpose.
#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mapmeta/geo.hpp"

namespace oracles {

// SCC via O(n^3) reachability closure: i and j share a component iff
// each reaches the other.
inline std::vector<std::set<int>> brute_scc(int n, const std::set<std::pair<int, int>>& edges) {
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) reach[i][i] = true;
    for (auto [a, b] : edges) reach[a][b] = true;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = true;
    std::vector<int> comp(n, -1);
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (comp[i] != -1) continue;
        comp[i] = count;
        for (int j = i + 1; j < n; ++j)
            if (reach[i][j] && reach[j][i]) comp[j] = count;
        ++count;
    }
    std::vector<std::set<int>> groups(count);
    for (int i = 0; i < n; ++i) groups[comp[i]].insert(i);
    return groups;
}

// WCC by naive repeated merging.
inline std::vector<std::set<int>> brute_wcc(int n, const std::set<std::pair<int, int>>& edges) {
    std::vector<int> comp(n);
    for (int i = 0; i < n; ++i) comp[i] = i;
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [a, b] : edges) {
            if (comp[a] != comp[b]) {
                int from = std::max(comp[a], comp[b]), to = std::min(comp[a], comp[b]);
                for (int i = 0; i < n; ++i)
                    if (comp[i] == from) comp[i] = to;
                changed = true;
            }
        }
    }
    std::vector<std::set<int>> groups;
    std::vector<int> remap(n, -1);
    for (int i = 0; i < n; ++i) {
        if (remap[comp[i]] == -1) {
            remap[comp[i]] = static_cast<int>(groups.size());
            groups.emplace_back();
        }
        groups[remap[comp[i]]].insert(i);
    }
    return groups;
}

// DBSCAN by definition: core points from neighbor counts, clusters as
// connected components of core points within eps, border points attached
// to the cluster of the earliest core neighbor in scan order.
struct BruteDbscan {
    std::vector<std::set<int>> clusters;
    std::set<int> noise;
};

inline BruteDbscan brute_dbscan(const std::vector<mapmeta::LatLngDeg>& pts, double eps,
                                int min_pts) {
    int n = static_cast<int>(pts.size());
    std::vector<std::vector<int>> nb(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (mapmeta::haversine_km(pts[i], pts[j]) <= eps) nb[i].push_back(j);
    std::vector<bool> core(n);
    for (int i = 0; i < n; ++i) core[i] = static_cast<int>(nb[i].size()) >= min_pts;

    // components over core points
    std::vector<int> comp(n, -1);
    int count = 0;
    for (int i = 0; i < n; ++i) {
        if (!core[i] || comp[i] != -1) continue;
        std::vector<int> stack{i};
        comp[i] = count;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : nb[v])
                if (core[w] && comp[w] == -1) {
                    comp[w] = comp[v];
                    stack.push_back(w);
                }
        }
        ++count;
    }
    BruteDbscan out;
    out.clusters.resize(count);
    for (int i = 0; i < n; ++i)
        if (core[i]) out.clusters[comp[i]].insert(i);
    for (int i = 0; i < n; ++i) {
        if (core[i]) continue;
        int chosen = -1;
        for (int w : nb[i])
            if (core[w]) {
                // earliest-formed cluster wins, matching the scan rule
                if (chosen == -1 || comp[w] < chosen) chosen = comp[w];
            }
        if (chosen == -1)
            out.noise.insert(i);
        else
            out.clusters[chosen].insert(i);
    }
    return out;
}

// Central finite differences over a scalar function of a parameter vector.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> params,
    double h = 1e-5) {
    std::vector<double> grad(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        double keep = params[i];
        params[i] = keep + h;
        double up = f(params);
        params[i] = keep - h;
        double down = f(params);
        params[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace oracles
