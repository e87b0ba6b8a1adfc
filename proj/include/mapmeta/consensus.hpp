#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mapmeta/linker.hpp"
#include "mapmeta/probmap.hpp"

namespace mapmeta {

struct ConsensusConfig {
    double theta = 0.5;
    double tau_text = 0.5;
    int n = 256;

    void validate() const {
        if (!(theta > 0.0 && theta < 1.0)) throw config_error("theta must lie in (0,1)");
    }
};

// Binary footprint of a region inside the frame, sampled at cell centers.
// A region that overlaps the frame but catches no cell center keeps its
// centroid cell so the mask is never empty.
inline std::vector<uint8_t> rasterize_box(const TextRegion& region, const RasterFrame& frame) {
    std::vector<uint8_t> mask(static_cast<size_t>(frame.n) * frame.n, 0);
    Quad g;
    double gx0 = 1e300, gx1 = -1e300, gy0 = 1e300, gy1 = -1e300;
    for (int i = 0; i < 4; ++i) {
        g[i] = frame.to_grid(region.polygon[i]);
        gx0 = std::min(gx0, g[i].x);
        gx1 = std::max(gx1, g[i].x);
        gy0 = std::min(gy0, g[i].y);
        gy1 = std::max(gy1, g[i].y);
    }
    if (gx1 < 0 || gy1 < 0 || gx0 > frame.n || gy0 > frame.n)
        throw contract_error("rasterize_box: region '" + region.id + "' lies outside the frame");
    size_t count = 0;
    int c0 = std::max(0, static_cast<int>(std::floor(gx0)));
    int c1 = std::min(frame.n - 1, static_cast<int>(std::ceil(gx1)));
    int r0 = std::max(0, static_cast<int>(std::floor(gy0)));
    int r1 = std::min(frame.n - 1, static_cast<int>(std::ceil(gy1)));
    for (int row = r0; row <= r1; ++row)
        for (int col = c0; col <= c1; ++col)
            if (point_in_quad({col + 0.5, row + 0.5}, g)) {
                mask[static_cast<size_t>(row) * frame.n + col] = 1;
                ++count;
            }
    if (count == 0) {
        Vec2 c = frame.to_grid(derive_geometry(region.polygon).center);
        int col = std::clamp(static_cast<int>(c.x), 0, frame.n - 1);
        int row = std::clamp(static_cast<int>(c.y), 0, frame.n - 1);
        mask[static_cast<size_t>(row) * frame.n + col] = 1;
    }
    return mask;
}

// Mean probability over the masked cells.
inline double consensus_score(const std::vector<uint8_t>& mask, const ProbabilityMap& map) {
    if (mask.size() != map.cells.size()) throw contract_error("consensus_score: size mismatch");
    double sum = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) {
            sum += map.cells[i];
            ++count;
        }
    if (count == 0) throw contract_error("consensus_score: empty mask");
    return sum / static_cast<double>(count);
}

inline bool consensus_decision(double score, double theta) { return score > theta; }

using ProbabilityMapSource = std::function<ProbabilityMap(
    const TextRegion& query, const std::vector<const TextRegion*>& candidates,
    const RasterFrame& frame)>;

inline ProbabilityMapSource surrogate_map_source() {
    return [](const TextRegion& query, const std::vector<const TextRegion*>& candidates,
              const RasterFrame& frame) { return surrogate_probability_map(query, candidates, frame); };
}

// Loads externally computed maps named <dir>/<sheet>_<query>.pgm.
inline ProbabilityMapSource file_map_source(std::string dir, std::string sheet_id) {
    return [dir = std::move(dir), sheet_id = std::move(sheet_id)](
               const TextRegion& query, const std::vector<const TextRegion*>&,
               const RasterFrame& frame) {
        return load_probability_map(dir + "/" + sheet_id + "_" + query.id + ".pgm", frame);
    };
}

struct LinkDecision {
    std::string query_id;
    std::string linked_id;
    double textual_p = 0.0;
    double score = 0.0;
};

// One query: textual retrieval, then the consensus filter. An empty
// candidate set short-circuits before any raster work.
inline std::vector<LinkDecision> link_query(const LinkerModel& model, const MapSheet& sheet,
                                            const std::vector<FeatureVector>& features,
                                            int query_index, const ProbabilityMapSource& maps,
                                            const ConsensusConfig& cfg) {
    cfg.validate();
    auto candidate_idx = retrieve_candidates(model, features, query_index, cfg.tau_text);
    if (candidate_idx.empty()) return {};

    const TextRegion& query = sheet.regions[query_index];
    std::vector<const TextRegion*> candidates;
    candidates.reserve(candidate_idx.size());
    for (int j : candidate_idx) candidates.push_back(&sheet.regions[j]);

    RasterFrame frame = candidate_frame(query, candidates, cfg.n);
    ProbabilityMap map = maps(query, candidates, frame);

    std::vector<LinkDecision> out;
    for (size_t k = 0; k < candidates.size(); ++k) {
        auto mask = rasterize_box(*candidates[k], frame);
        double score = consensus_score(mask, map);
        if (consensus_decision(score, cfg.theta)) {
            double p = model.forward_pair(features[query_index], features[candidate_idx[k]]);
            out.push_back({query.id, candidates[k]->id, p, score});
        }
    }
    return out;
}

// Runs the query process for every region of the sheet.
inline std::vector<LinkDecision> link_sheet(const LinkerModel& model, const MapSheet& sheet,
                                            const std::vector<FeatureVector>& features,
                                            const ProbabilityMapSource& maps,
                                            const ConsensusConfig& cfg) {
    std::vector<LinkDecision> out;
    for (int q = 0; q < static_cast<int>(sheet.regions.size()); ++q) {
        auto links = link_query(model, sheet, features, q, maps, cfg);
        out.insert(out.end(), links.begin(), links.end());
    }
    return out;
}

// Edge-list text format: `edge <query_id> <linked_id> <textual_p> <score>`.
inline std::string emit_edges(const std::vector<LinkDecision>& edges) {
    std::string out;
    for (const auto& e : edges)
        out += "edge " + e.query_id + " " + e.linked_id + " " + format_double(e.textual_p) + " " +
               format_double(e.score) + "\n";
    return out;
}

inline std::vector<LinkDecision> parse_edges(std::string_view content,
                                             const std::string& source = "<string>") {
    std::vector<LinkDecision> out;
    int line_no = 0;
    for (const auto& raw : split_on(content, '\n')) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        auto tokens = split_ws(line);
        if (tokens.size() != 5 || tokens[0] != "edge")
            throw parse_error(source + ":" + std::to_string(line_no) + ": bad edge record");
        out.push_back({tokens[1], tokens[2], parse_double(tokens[3], "textual_p"),
                       parse_double(tokens[4], "score")});
    }
    return out;
}

}  // namespace mapmeta
