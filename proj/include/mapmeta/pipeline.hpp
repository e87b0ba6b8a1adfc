#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mapmeta/consensus.hpp"
#include "mapmeta/eval.hpp"
#include "mapmeta/geocoder.hpp"
#include "mapmeta/metadata.hpp"
#include "mapmeta/phrase_graph.hpp"
#include "mapmeta/synth.hpp"

namespace mapmeta {

struct PipelineOptions {
    double tau_text = 0.5;
    double theta = 0.5;
    int n = 256;
    double eps_km = 10.0;
    int min_pts = 3;
    double radius_km = 50.0;
    double tau_sim = 0.8;
    GeocodeMode geocode_mode = GeocodeMode::kPhraseByPhrase;
    ComponentMode component_mode = ComponentMode::kStrong;
    bool wkt_points = false;
    std::string prob_map_dir;  // empty = geometric surrogate
    int workers = 0;           // 0 = hardware concurrency
};

struct SheetOutputs {
    std::string sheet_id;
    std::vector<LinkDecision> edges;
    std::vector<LocationPhrase> phrases;
    std::optional<GeoEstimate> estimate;
    MapRecord record;
    int matched_features = 0;
};

inline SheetOutputs run_sheet(const MapSheet& sheet, const LinkerModel& model,
                              const EmbeddingTable& embeddings, GeocodeClient& geocoder,
                              const Gazetteer& gazetteer, const PipelineOptions& opt) {
    SheetOutputs out;
    out.sheet_id = sheet.sheet_id;

    auto features = build_sheet_features(sheet, embeddings);
    ConsensusConfig ccfg{opt.theta, opt.tau_text, opt.n};
    ProbabilityMapSource maps = opt.prob_map_dir.empty()
                                    ? surrogate_map_source()
                                    : file_map_source(opt.prob_map_dir, sheet.sheet_id);
    out.edges = link_sheet(model, sheet, features, maps, ccfg);

    auto graph = build_graph(sheet, out.edges);
    out.phrases = phrases_from_graph(graph, sheet, opt.component_mode);

    std::vector<std::string> phrase_texts, words;
    std::vector<std::vector<std::string>> phrase_ids;
    for (const auto& p : out.phrases) {
        phrase_texts.push_back(p.text);
        phrase_ids.push_back(p.region_ids);
    }
    for (const auto& r : sheet.regions) words.push_back(trim(r.text));

    auto candidates = geocode_sheet(phrase_texts, words, opt.geocode_mode, geocoder);
    if (!candidates.empty())
        out.estimate = estimate_location(candidates, opt.eps_km, opt.min_pts);

    std::vector<const GazetteerRecord*> matches(out.phrases.size(), nullptr);
    if (out.estimate) {
        for (size_t i = 0; i < out.phrases.size(); ++i) {
            matches[i] = match_entity(out.phrases[i].text, out.estimate->point, gazetteer,
                                      opt.radius_km, opt.tau_sim);
            if (matches[i]) ++out.matched_features;
        }
    }
    out.record = build_map_record(sheet.sheet_id, phrase_texts, phrase_ids, out.estimate, matches);
    return out;
}

inline void write_sheet_outputs(const SheetOutputs& out, const std::string& dir,
                                bool wkt_points = false) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto dump = [&](const std::string& suffix, const std::string& content) {
        std::ofstream f(dir + "/" + out.sheet_id + suffix, std::ios::binary);
        if (!f) throw config_error("cannot write output for sheet " + out.sheet_id);
        f << content;
    };
    dump(".edges", emit_edges(out.edges));
    dump(".phrases", emit_phrases(out.sheet_id, out.phrases));
    dump(".geo", out.estimate ? emit_estimate(*out.estimate) : std::string("no-estimate\n"));
    dump(".nt", emit_ntriples(record_to_triples(out.record, wkt_points)));
}

struct BatchResult {
    int processed = 0;
    std::vector<std::pair<std::string, std::string>> failures;  // (sheet file, error)
};

// Processes sheets with a bounded worker pool; one bad sheet does not
// abort the batch. The summary is sorted by sheet id so output bytes do
// not depend on scheduling.
inline BatchResult run_pipeline(const std::vector<std::string>& sheet_files,
                                const LinkerModel& model, const EmbeddingTable& embeddings,
                                GeocodeClient& geocoder, const Gazetteer& gazetteer,
                                const PipelineOptions& opt, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    BatchResult result;
    std::vector<std::string> summary_rows(sheet_files.size());
    std::mutex mu;
    std::atomic<size_t> next{0};

    unsigned workers = opt.workers > 0 ? static_cast<unsigned>(opt.workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, sheet_files.empty() ? 1 : sheet_files.size());

    auto work = [&]() {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= sheet_files.size()) return;
            try {
                MapSheet sheet = parse_sheet(sheet_files[i]);
                SheetOutputs out = run_sheet(sheet, model, embeddings, geocoder, gazetteer, opt);
                write_sheet_outputs(out, out_dir, opt.wkt_points);
                std::string row =
                    out.sheet_id + "," + std::to_string(sheet.regions.size()) + "," +
                    std::to_string(out.edges.size()) + "," + std::to_string(out.phrases.size()) +
                    "," +
                    (out.estimate ? format_double(out.estimate->point.lat) + "," +
                                        format_double(out.estimate->point.lng) + "," +
                                        std::to_string(out.estimate->cluster_size) + "," +
                                        (out.estimate->degraded ? "1" : "0")
                                  : std::string(",,,")) +
                    "," + std::to_string(out.matched_features);
                std::scoped_lock lock(mu);
                summary_rows[i] = std::move(row);
                ++result.processed;
            } catch (const std::exception& e) {
                std::scoped_lock lock(mu);
                result.failures.emplace_back(sheet_files[i], e.what());
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    std::vector<std::string> rows;
    for (auto& row : summary_rows)
        if (!row.empty()) rows.push_back(std::move(row));
    std::sort(rows.begin(), rows.end());
    std::ofstream summary(out_dir + "/summary.csv", std::ios::binary);
    summary << "sheet_id,regions,edges,phrases,est_lat,est_lng,cluster_size,degraded,matched\n";
    for (const auto& row : rows) summary << row << "\n";
    return result;
}

// --- directory evaluation -----------------------------------------------

struct EvalOptions {
    GtEdgeMode edge_mode = GtEdgeMode::kAllPairs;
    std::vector<double> histogram_edges = {0, 10, 25, 50, 100, 200, 400, 800};
};

struct SheetEval {
    std::string sheet_id;
    Prf linkage;
    Prf duplicate, distinct;
    Prf unordered_dup, ordered_dup;
    int n_miss = 0, n_add = 0;
    int gt_phrases = 0;
    std::optional<GeoError> geo;
};

struct EvalReport {
    std::vector<SheetEval> sheets;
    std::vector<std::string> skipped;  // ids present on one side only
    std::vector<double> errors_km;

    std::string linkage_csv() const {
        std::string out = "sheet_id,precision,recall,f1\n";
        for (const auto& s : sheets)
            out += s.sheet_id + "," + format_double(s.linkage.precision) + "," +
                   format_double(s.linkage.recall) + "," + format_double(s.linkage.f1) + "\n";
        return out;
    }
    std::string phrases_csv() const {
        std::string out =
            "sheet_id,dup_precision,dup_recall,dup_f1,distinct_precision,distinct_recall,"
            "distinct_f1,gt_phrases\n";
        for (const auto& s : sheets)
            out += s.sheet_id + "," + format_double(s.duplicate.precision) + "," +
                   format_double(s.duplicate.recall) + "," + format_double(s.duplicate.f1) + "," +
                   format_double(s.distinct.precision) + "," + format_double(s.distinct.recall) +
                   "," + format_double(s.distinct.f1) + "," + std::to_string(s.gt_phrases) + "\n";
        return out;
    }
    std::string geolocation_csv() const {
        std::string out = "sheet_id,err_km,err_scale\n";
        for (const auto& s : sheets) {
            out += s.sheet_id + ",";
            if (s.geo)
                out += format_double(s.geo->err_km) + "," +
                       (s.geo->err_scale ? format_double(*s.geo->err_scale) : std::string(""));
            else
                out += ",";
            out += "\n";
        }
        return out;
    }
    std::string error_analysis_csv() const {
        std::string out =
            "sheet_id,unordered_precision,unordered_recall,ordered_precision,ordered_recall,"
            "n_miss,n_add,gt_phrases\n";
        for (const auto& s : sheets)
            out += s.sheet_id + "," + format_double(s.unordered_dup.precision) + "," +
                   format_double(s.unordered_dup.recall) + "," +
                   format_double(s.ordered_dup.precision) + "," +
                   format_double(s.ordered_dup.recall) + "," + std::to_string(s.n_miss) + "," +
                   std::to_string(s.n_add) + "," + std::to_string(s.gt_phrases) + "\n";
        return out;
    }
};

// Ground-truth phrase strings come from the stored group order; the
// stored order is the annotated reading order, not a recomputed sort.
inline std::vector<std::string> gt_phrase_texts(const MapSheet& sheet) {
    std::vector<std::string> out;
    for (const auto& group : sheet.gt_groups) {
        std::string text;
        for (const auto& id : group) {
            const TextRegion* r = sheet.find(id);
            if (!r) throw validation_error("group references unknown region id '" + id + "'");
            if (!text.empty()) text += ' ';
            text += trim(r->text);
        }
        out.push_back(std::move(text));
    }
    return out;
}

inline SheetEval evaluate_sheet(const MapSheet& gt_sheet, const std::vector<LinkDecision>& edges,
                                const std::vector<ParsedPhrase>& phrases,
                                const std::optional<GeoEstimate>& estimate,
                                const EvalOptions& opt) {
    SheetEval ev;
    ev.sheet_id = gt_sheet.sheet_id;

    std::set<Edge> pred_edges;
    for (const auto& e : edges) pred_edges.emplace(e.query_id, e.linked_id);
    ev.linkage = linkage_prf(pred_edges, gt_edges_from_groups(gt_sheet.gt_groups, opt.edge_mode));

    std::vector<std::string> pred_texts;
    std::vector<std::vector<std::string>> pred_groups;
    for (const auto& p : phrases) {
        pred_texts.push_back(p.text);
        pred_groups.push_back(p.region_ids);
    }
    auto gt_texts = gt_phrase_texts(gt_sheet);
    ev.duplicate = phrase_prf(pred_texts, gt_texts, PhraseMode::kDuplicate);
    ev.distinct = phrase_prf(pred_texts, gt_texts, PhraseMode::kDistinct);
    ev.unordered_dup = grouped_prf(pred_groups, gt_sheet.gt_groups, PhraseMode::kDuplicate, false);
    ev.ordered_dup = grouped_prf(pred_groups, gt_sheet.gt_groups, PhraseMode::kDuplicate, true);
    auto [miss, add] = error_decomposition(pred_groups, gt_sheet.gt_groups);
    ev.n_miss = miss;
    ev.n_add = add;
    ev.gt_phrases = static_cast<int>(gt_sheet.gt_groups.size());

    if (gt_sheet.gt_location && estimate)
        ev.geo = geo_error(*gt_sheet.gt_location, estimate->point, gt_sheet.corner_min,
                           gt_sheet.corner_max);
    return ev;
}

inline EvalReport evaluate_directories(const std::string& pred_dir, const std::string& gt_dir,
                                       const EvalOptions& opt) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(gt_dir)) throw config_error("not a directory: " + gt_dir);
    if (!fs::is_directory(pred_dir)) throw config_error("not a directory: " + pred_dir);

    std::vector<fs::path> gt_files;
    for (const auto& entry : fs::directory_iterator(gt_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".sheet")
            gt_files.push_back(entry.path());
    std::sort(gt_files.begin(), gt_files.end());
    if (gt_files.empty()) throw config_error("no .sheet files in " + gt_dir);

    bool any_pred = false;
    EvalReport report;
    for (const auto& gt_path : gt_files) {
        MapSheet gt_sheet = parse_sheet(gt_path.string());
        std::string base = pred_dir + "/" + gt_sheet.sheet_id;
        if (!fs::exists(base + ".edges") || !fs::exists(base + ".phrases")) {
            report.skipped.push_back(gt_sheet.sheet_id);
            continue;
        }
        any_pred = true;
        auto slurp = [](const std::string& path) {
            std::ifstream in(path, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        auto edges = parse_edges(slurp(base + ".edges"), base + ".edges");
        auto phrases = parse_phrases(slurp(base + ".phrases"), base + ".phrases");
        std::optional<GeoEstimate> estimate;
        if (fs::exists(base + ".geo"))
            estimate = parse_estimate(slurp(base + ".geo"), base + ".geo");
        auto ev = evaluate_sheet(gt_sheet, edges, phrases, estimate, opt);
        if (ev.geo) report.errors_km.push_back(ev.geo->err_km);
        report.sheets.push_back(std::move(ev));
    }
    if (!any_pred) throw config_error("no predictions in " + pred_dir + " match " + gt_dir);
    return report;
}

}  // namespace mapmeta
