#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mapmeta/consensus.hpp"
#include "mapmeta/sheet.hpp"

namespace mapmeta {

// Directed linkage graph over the sheet's region ids. Edges carry set
// semantics; self-links are dropped.
struct LinkageGraph {
    std::vector<std::string> nodes;                 // region order of the sheet
    std::map<std::string, int> index;
    std::vector<std::vector<int>> adjacency;        // out-edges
    std::set<std::pair<int, int>> edges;

    bool has_edge(const std::string& from, const std::string& to) const {
        auto i = index.find(from);
        auto j = index.find(to);
        if (i == index.end() || j == index.end()) return false;
        return edges.count({i->second, j->second}) > 0;
    }
};

inline LinkageGraph build_graph(const MapSheet& sheet, const std::vector<LinkDecision>& decisions) {
    LinkageGraph g;
    g.nodes.reserve(sheet.regions.size());
    for (const auto& r : sheet.regions) {
        g.index.emplace(r.id, static_cast<int>(g.nodes.size()));
        g.nodes.push_back(r.id);
    }
    g.adjacency.assign(g.nodes.size(), {});
    for (const auto& d : decisions) {
        auto i = g.index.find(d.query_id);
        auto j = g.index.find(d.linked_id);
        if (i == g.index.end())
            throw validation_error("decision references unknown region id '" + d.query_id + "'");
        if (j == g.index.end())
            throw validation_error("decision references unknown region id '" + d.linked_id + "'");
        if (i->second == j->second) continue;  // no self-edges
        if (g.edges.emplace(i->second, j->second).second)
            g.adjacency[i->second].push_back(j->second);
    }
    for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
    return g;
}

namespace detail {

// Iterative Tarjan; recursion is avoided so dense sheets cannot blow the
// stack. Returns the component id per node.
inline std::vector<int> tarjan_scc_ids(const LinkageGraph& g, int& component_count) {
    int n = static_cast<int>(g.nodes.size());
    std::vector<int> disc(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int timer = 0;
    component_count = 0;

    struct Frame {
        int node;
        size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (disc[root] != -1) continue;
        std::vector<Frame> call;
        call.push_back({root, 0});
        disc[root] = low[root] = timer++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.edge < g.adjacency[f.node].size()) {
                int next = g.adjacency[f.node][f.edge++];
                if (disc[next] == -1) {
                    disc[next] = low[next] = timer++;
                    stack.push_back(next);
                    on_stack[next] = 1;
                    call.push_back({next, 0});
                } else if (on_stack[next]) {
                    low[f.node] = std::min(low[f.node], disc[next]);
                }
            } else {
                if (low[f.node] == disc[f.node]) {
                    while (true) {
                        int v = stack.back();
                        stack.pop_back();
                        on_stack[v] = 0;
                        comp[v] = component_count;
                        if (v == f.node) break;
                    }
                    ++component_count;
                }
                int done = f.node;
                call.pop_back();
                if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[done]);
            }
        }
    }
    return comp;
}

inline std::vector<std::vector<std::string>> ids_to_groups(const LinkageGraph& g,
                                                           const std::vector<int>& comp,
                                                           int component_count) {
    std::vector<std::vector<std::string>> groups(component_count);
    for (size_t v = 0; v < comp.size(); ++v) groups[comp[v]].push_back(g.nodes[v]);
    for (auto& members : groups) std::sort(members.begin(), members.end());
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return groups;
}

}  // namespace detail

// Maximal strongly connected components; groups are ordered by their
// smallest member id, members sorted by id.
inline std::vector<std::vector<std::string>> strongly_connected_components(const LinkageGraph& g) {
    int count = 0;
    auto comp = detail::tarjan_scc_ids(g, count);
    return detail::ids_to_groups(g, comp, count);
}

// Connected components of the underlying undirected graph (union-find).
inline std::vector<std::vector<std::string>> weakly_connected_components(const LinkageGraph& g) {
    int n = static_cast<int>(g.nodes.size());
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    std::vector<int> rank(n, 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& [from, to] : g.edges) {
        int a = find(from), b = find(to);
        if (a == b) continue;
        if (rank[a] < rank[b]) std::swap(a, b);
        parent[b] = a;
        if (rank[a] == rank[b]) ++rank[a];
    }
    std::vector<int> comp(n, -1);
    int count = 0;
    std::map<int, int> root_to_comp;
    for (int i = 0; i < n; ++i) {
        int root = find(i);
        auto [it, inserted] = root_to_comp.emplace(root, count);
        if (inserted) ++count;
        comp[i] = it->second;
    }
    return detail::ids_to_groups(g, comp, count);
}

enum class ComponentMode { kStrong, kWeak };

struct LocationPhrase {
    std::vector<std::string> region_ids;  // reading order
    std::string text;
    ComponentMode mode = ComponentMode::kStrong;
};

// Sort by bounding-box center x ascending; ties fall back to center y,
// then id, so the order is total.
inline LocationPhrase order_and_join(const std::vector<std::string>& group, const MapSheet& sheet,
                                     ComponentMode mode = ComponentMode::kStrong) {
    if (group.empty()) throw contract_error("order_and_join: empty group");
    LocationPhrase phrase;
    phrase.mode = mode;
    std::vector<const TextRegion*> members;
    members.reserve(group.size());
    for (const auto& id : group) {
        const TextRegion* r = sheet.find(id);
        if (!r) throw validation_error("group references unknown region id '" + id + "'");
        members.push_back(r);
    }
    std::sort(members.begin(), members.end(), [](const TextRegion* a, const TextRegion* b) {
        if (a->center.x != b->center.x) return a->center.x < b->center.x;
        if (a->center.y != b->center.y) return a->center.y < b->center.y;
        return a->id < b->id;
    });
    for (const TextRegion* r : members) {
        if (!phrase.text.empty()) phrase.text += ' ';
        phrase.text += trim(r->text);
        phrase.region_ids.push_back(r->id);
    }
    return phrase;
}

inline std::vector<LocationPhrase> phrases_from_graph(const LinkageGraph& g, const MapSheet& sheet,
                                                      ComponentMode mode = ComponentMode::kStrong) {
    auto groups = mode == ComponentMode::kStrong ? strongly_connected_components(g)
                                                 : weakly_connected_components(g);
    std::vector<LocationPhrase> out;
    out.reserve(groups.size());
    for (const auto& group : groups) out.push_back(order_and_join(group, sheet, mode));
    return out;
}

// Phrase file format: `phrase <sheet_id> <joined text> | <id1,id2,...>`.
inline std::string emit_phrases(const std::string& sheet_id,
                                const std::vector<LocationPhrase>& phrases) {
    std::string out;
    for (const auto& p : phrases) {
        out += "phrase " + sheet_id + " " + p.text + " |";
        for (size_t i = 0; i < p.region_ids.size(); ++i)
            out += (i == 0 ? " " : ",") + p.region_ids[i];
        out += "\n";
    }
    return out;
}

struct ParsedPhrase {
    std::string sheet_id;
    std::string text;
    std::vector<std::string> region_ids;
};

inline std::vector<ParsedPhrase> parse_phrases(std::string_view content,
                                               const std::string& source = "<string>") {
    std::vector<ParsedPhrase> out;
    int line_no = 0;
    for (const auto& raw : split_on(content, '\n')) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto where = source + ":" + std::to_string(line_no);
        if (line.rfind("phrase ", 0) != 0) throw parse_error(where + ": bad phrase record");
        size_t bar = line.rfind(" | ");
        if (bar == std::string::npos) throw parse_error(where + ": missing id list");
        std::string head = line.substr(7, bar - 7);
        size_t sp = head.find(' ');
        if (sp == std::string::npos) throw parse_error(where + ": missing phrase text");
        ParsedPhrase p;
        p.sheet_id = head.substr(0, sp);
        p.text = head.substr(sp + 1);
        for (auto& id : split_on(trim(line.substr(bar + 3)), ','))
            if (!id.empty()) p.region_ids.push_back(id);
        if (p.region_ids.empty()) throw parse_error(where + ": empty id list");
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace mapmeta
