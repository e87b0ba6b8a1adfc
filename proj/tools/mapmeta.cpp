// mapmeta command line: every pipeline stage as a subcommand, plus the
// synthetic corpus generator and the evaluation harness.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mapmeta/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mapmeta::config_error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mapmeta::config_error("cannot write file: " + path);
    out << content;
}

std::vector<std::string> collect_sheet_files(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& input : inputs) {
        if (fs::is_directory(input)) {
            for (const auto& entry : fs::directory_iterator(input))
                if (entry.is_regular_file() && entry.path().extension() == ".sheet")
                    files.push_back(entry.path().string());
        } else if (fs::is_regular_file(input)) {
            files.push_back(input);
        } else {
            throw mapmeta::config_error("no such file or directory: " + input);
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw mapmeta::config_error("no sheet files found");
    return files;
}

std::unique_ptr<mapmeta::GeocodeClient> make_geocoder(const std::string& url,
                                                      const mapmeta::Gazetteer* gazetteer,
                                                      double rate_limit) {
    if (!url.empty()) {
        mapmeta::HttpGeocoder::Options opt;
        opt.max_requests_per_sec = rate_limit;
        return std::make_unique<mapmeta::HttpGeocoder>(url, opt);
    }
    if (!gazetteer) throw mapmeta::config_error("need --gazetteer or --geocoder-url");
    return std::make_unique<mapmeta::GazetteerGeocoder>(*gazetteer);
}

struct CommonPipelineFlags {
    mapmeta::PipelineOptions opt;
    std::string mode = "phrase-by-phrase";
    std::string components = "scc";
    std::string geocoder_url;
    double rate_limit = 10.0;

    void add_to(CLI::App* cmd, bool with_geo) {
        cmd->add_option("--tau-text", opt.tau_text, "textual retrieval threshold");
        cmd->add_option("--theta", opt.theta, "consensus threshold");
        cmd->add_option("--grid-n", opt.n, "probability map resolution");
        cmd->add_option("--prob-maps", opt.prob_map_dir,
                        "directory of <sheet>_<region>.pgm probability maps "
                        "(default: geometric surrogate)");
        cmd->add_option("--components", components, "scc|wcc grouping")
            ->check(CLI::IsMember({"scc", "wcc"}));
        if (with_geo) {
            cmd->add_option("--mode", mode, "phrase-by-phrase|word-by-word|word2paragraph");
            cmd->add_option("--eps-km", opt.eps_km, "DBSCAN radius in km");
            cmd->add_option("--min-pts", opt.min_pts, "DBSCAN core threshold");
            cmd->add_option("--radius-km", opt.radius_km, "entity match radius");
            cmd->add_option("--tau-sim", opt.tau_sim, "entity match similarity threshold");
            cmd->add_option("--geocoder-url", geocoder_url, "HTTP geocoder endpoint")
                ->envname("MAPMETA_GEOCODER_URL");
            cmd->add_option("--rate-limit", rate_limit, "max geocoder requests per second");
            cmd->add_flag("--wkt", opt.wkt_points, "emit WKT point literals");
        }
    }

    void finish() {
        opt.geocode_mode = mapmeta::parse_geocode_mode(mode);
        opt.component_mode =
            components == "wcc" ? mapmeta::ComponentMode::kWeak : mapmeta::ComponentMode::kStrong;
    }
};

int cmd_train(const std::vector<std::string>& sheet_inputs, const std::string& embeddings_path,
              const std::string& out_path, const std::string& loss_log,
              mapmeta::LinkerConfig cfg, bool json_out) {
    auto files = collect_sheet_files(sheet_inputs);
    auto table = mapmeta::EmbeddingTable::load(embeddings_path);
    cfg.input_dim = static_cast<int>(table.dimension()) + 5;

    std::vector<mapmeta::TrainingSheet> trainable;
    std::vector<std::string> skipped;
    for (const auto& file : files) {
        mapmeta::MapSheet sheet = mapmeta::parse_sheet(file);
        bool has_multi = false;
        for (const auto& g : sheet.gt_groups)
            if (g.size() >= 2) has_multi = true;
        if (!has_multi) {
            skipped.push_back(sheet.sheet_id);
            continue;
        }
        auto features = mapmeta::build_sheet_features(sheet, table);
        trainable.push_back({std::move(sheet), std::move(features)});
    }
    for (const auto& id : skipped)
        std::cerr << "warning: sheet " << id << " has no multi-word group, skipping\n";
    if (trainable.empty())
        throw mapmeta::config_error("no trainable sheets (need ground-truth groups of 2+ words)");

    mapmeta::LinkerModel model(cfg);
    auto history = mapmeta::LinkerTrainer::train(model, trainable);
    mapmeta::save_checkpoint(model, out_path);

    if (!loss_log.empty()) {
        std::string log = "epoch,loss\n";
        for (size_t e = 0; e < history.size(); ++e)
            log += std::to_string(e) + "," + mapmeta::format_double(history[e]) + "\n";
        spit(loss_log, log);
    }
    if (json_out) {
        json j{{"checkpoint", out_path},
               {"sheets", trainable.size()},
               {"skipped", skipped.size()},
               {"epochs", history.size()},
               {"final_loss", history.empty() ? 0.0 : history.back()}};
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "trained on " << trainable.size() << " sheets, final loss "
                  << (history.empty() ? 0.0 : history.back()) << ", wrote " << out_path << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"historical-map metadata pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI file");
    app.allow_config_extras(CLI::config_extras_mode::ignore_all);

    bool json_out = false;
    app.add_flag("--json", json_out, "machine-readable summaries on stdout");

    // ---- train ----
    auto* train = app.add_subcommand("train", "train the textual linkage model");
    std::vector<std::string> train_sheets;
    std::string train_embeddings, train_out = "linker.ckpt", train_loss_log;
    mapmeta::LinkerConfig linker_cfg;
    train->add_option("--sheets", train_sheets, "sheet files or directories")->required();
    train->add_option("--embeddings", train_embeddings, "word vector file")->required();
    train->add_option("--out", train_out, "checkpoint output path");
    train->add_option("--loss-log", train_loss_log, "per-epoch loss CSV");
    train->add_option("--epochs", linker_cfg.epochs);
    train->add_option("--lr", linker_cfg.learning_rate);
    train->add_option("--hidden-dim", linker_cfg.hidden_dim);
    train->add_option("--encoder-dim", linker_cfg.embed_dim);
    train->add_option("--margin", linker_cfg.margin);
    train->add_option("--lambda", linker_cfg.lambda);
    train->add_option("--batch-size", linker_cfg.batch_size);
    train->add_option("--negatives", linker_cfg.negatives_per_anchor);
    train->add_option("--seed", linker_cfg.seed);
    train->add_option("--tau-text", linker_cfg.tau_text);

    // ---- link ----
    auto* link = app.add_subcommand("link", "pairwise linkage for one sheet");
    std::string link_sheet_path, link_checkpoint, link_embeddings, link_out;
    CommonPipelineFlags link_flags;
    link->add_option("--sheet", link_sheet_path, "sheet file")->required();
    link->add_option("--checkpoint", link_checkpoint, "trained model")->required();
    link->add_option("--embeddings", link_embeddings, "word vector file")->required();
    link->add_option("--out", link_out, "edge list output (default stdout)");
    link_flags.add_to(link, false);

    // ---- phrases ----
    auto* phrases_cmd = app.add_subcommand("phrases", "assemble phrases from an edge list");
    std::string ph_sheet, ph_edges, ph_out, ph_components = "scc";
    phrases_cmd->add_option("--sheet", ph_sheet, "sheet file")->required();
    phrases_cmd->add_option("--edges", ph_edges, "edge list file")->required();
    phrases_cmd->add_option("--out", ph_out, "phrase output (default stdout)");
    phrases_cmd->add_option("--components", ph_components, "scc|wcc grouping")
        ->check(CLI::IsMember({"scc", "wcc"}));

    // ---- geolocate ----
    auto* geo = app.add_subcommand("geolocate", "estimate a sheet location from phrases");
    std::string geo_phrases, geo_sheet, geo_gazetteer, geo_out;
    CommonPipelineFlags geo_flags;
    geo->add_option("--phrases", geo_phrases, "phrase file (phrase mode)");
    geo->add_option("--sheet", geo_sheet, "sheet file (word modes)");
    geo->add_option("--gazetteer", geo_gazetteer, "offline gazetteer TSV");
    geo_flags.add_to(geo, true);
    geo->add_option("--out", geo_out, "estimate output (default stdout)");

    // ---- match ----
    auto* match = app.add_subcommand("match", "match phrases to gazetteer entities");
    std::string match_phrases, match_geo, match_gazetteer, match_out;
    double match_radius = 50.0, match_tau = 0.8;
    match->add_option("--phrases", match_phrases, "phrase file")->required();
    match->add_option("--geo", match_geo, "estimate file")->required();
    match->add_option("--gazetteer", match_gazetteer, "gazetteer TSV")->required();
    match->add_option("--radius-km", match_radius);
    match->add_option("--tau-sim", match_tau);
    match->add_option("--out", match_out, "match output (default stdout)");

    // ---- emit-rdf ----
    auto* rdf = app.add_subcommand("emit-rdf", "emit linked metadata for one sheet");
    std::string rdf_phrases, rdf_geo, rdf_gazetteer, rdf_out, rdf_store, rdf_syntax = "ntriples";
    double rdf_radius = 50.0, rdf_tau = 0.8;
    bool rdf_wkt = false;
    rdf->add_option("--phrases", rdf_phrases, "phrase file")->required();
    rdf->add_option("--geo", rdf_geo, "estimate file")->required();
    rdf->add_option("--gazetteer", rdf_gazetteer, "gazetteer TSV")->required();
    rdf->add_option("--syntax", rdf_syntax, "ntriples|xml")
        ->check(CLI::IsMember({"ntriples", "xml"}));
    rdf->add_option("--radius-km", rdf_radius);
    rdf->add_option("--tau-sim", rdf_tau);
    rdf->add_flag("--wkt", rdf_wkt, "emit WKT point literals");
    rdf->add_option("--out", rdf_out, "output file (default stdout)");
    rdf->add_option("--store", rdf_store, "record store directory to append to");

    // ---- query ----
    auto* query = app.add_subcommand("query", "find maps by linked entity properties");
    std::string q_store, q_gazetteer, q_type;
    double q_min_elev = -1.0;
    query->add_option("--store", q_store, "record store directory")->required();
    query->add_option("--gazetteer", q_gazetteer, "gazetteer TSV")->required();
    query->add_option("--type", q_type, "entity feature type, e.g. peak");
    query->add_option("--min-elevation", q_min_elev, "minimum elevation in meters");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
    std::string ev_pred, ev_gt, ev_out = "eval";
    std::string ev_edge_mode = "all-pairs";
    std::vector<double> ev_hist_edges;
    eval->add_option("--pred", ev_pred, "prediction directory")->required();
    eval->add_option("--gt", ev_gt, "ground-truth sheet directory")->required();
    eval->add_option("--out", ev_out, "output directory for metric CSVs");
    eval->add_option("--edge-mode", ev_edge_mode, "all-pairs|chain ground-truth edges")
        ->check(CLI::IsMember({"all-pairs", "chain"}));
    eval->add_option("--hist-edges", ev_hist_edges, "histogram bin edges in km");

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark corpus");
    mapmeta::SynthConfig synth_cfg;
    std::string synth_out = "corpus";
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--sheets", synth_cfg.sheet_count, "number of sheets");
    synth->add_option("--seed", synth_cfg.seed);
    synth->add_option("--dim", synth_cfg.embed_dim, "embedding dimension");

    // ---- pipeline ----
    auto* pipe = app.add_subcommand("pipeline", "run every stage over a batch of sheets");
    std::vector<std::string> pipe_sheets;
    std::string pipe_checkpoint, pipe_embeddings, pipe_gazetteer, pipe_out = "out";
    CommonPipelineFlags pipe_flags;
    pipe->add_option("--sheets", pipe_sheets, "sheet files or directories")->required();
    pipe->add_option("--checkpoint", pipe_checkpoint, "trained model")->required();
    pipe->add_option("--embeddings", pipe_embeddings, "word vector file")->required();
    pipe->add_option("--gazetteer", pipe_gazetteer, "offline gazetteer TSV");
    pipe->add_option("--out", pipe_out, "output directory");
    pipe->add_option("--workers", pipe_flags.opt.workers, "worker pool size (0 = auto)");
    pipe_flags.add_to(pipe, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*train)
            return cmd_train(train_sheets, train_embeddings, train_out, train_loss_log, linker_cfg,
                             json_out);

        if (*link) {
            auto model = mapmeta::load_checkpoint(link_checkpoint);
            auto table = mapmeta::EmbeddingTable::load(link_embeddings);
            auto sheet = mapmeta::parse_sheet(link_sheet_path);
            link_flags.finish();
            auto features = mapmeta::build_sheet_features(sheet, table);
            mapmeta::ConsensusConfig ccfg{link_flags.opt.theta, link_flags.opt.tau_text,
                                          link_flags.opt.n};
            auto maps = link_flags.opt.prob_map_dir.empty()
                            ? mapmeta::surrogate_map_source()
                            : mapmeta::file_map_source(link_flags.opt.prob_map_dir, sheet.sheet_id);
            auto edges = mapmeta::link_sheet(model, sheet, features, maps, ccfg);
            auto text = mapmeta::emit_edges(edges);
            if (link_out.empty())
                std::cout << text;
            else
                spit(link_out, text);
            if (json_out) std::cout << json{{"sheet", sheet.sheet_id}, {"edges", edges.size()}}.dump() << "\n";
            return kExitOk;
        }

        if (*phrases_cmd) {
            auto sheet = mapmeta::parse_sheet(ph_sheet);
            auto edges = mapmeta::parse_edges(slurp(ph_edges), ph_edges);
            auto graph = mapmeta::build_graph(sheet, edges);
            auto mode = ph_components == "wcc" ? mapmeta::ComponentMode::kWeak
                                               : mapmeta::ComponentMode::kStrong;
            auto phrases = mapmeta::phrases_from_graph(graph, sheet, mode);
            auto text = mapmeta::emit_phrases(sheet.sheet_id, phrases);
            if (ph_out.empty())
                std::cout << text;
            else
                spit(ph_out, text);
            if (json_out)
                std::cout << json{{"sheet", sheet.sheet_id}, {"phrases", phrases.size()}}.dump()
                          << "\n";
            return kExitOk;
        }

        if (*geo) {
            geo_flags.finish();
            std::vector<std::string> phrase_texts, words;
            if (geo_flags.opt.geocode_mode == mapmeta::GeocodeMode::kPhraseByPhrase) {
                if (geo_phrases.empty())
                    throw mapmeta::config_error("phrase-by-phrase mode needs --phrases");
                for (const auto& p : mapmeta::parse_phrases(slurp(geo_phrases), geo_phrases))
                    phrase_texts.push_back(p.text);
            } else {
                if (geo_sheet.empty()) throw mapmeta::config_error("word modes need --sheet");
                auto sheet = mapmeta::parse_sheet(geo_sheet);
                for (const auto& r : sheet.regions) words.push_back(mapmeta::trim(r.text));
            }
            std::optional<mapmeta::Gazetteer> gaz;
            if (!geo_gazetteer.empty()) gaz = mapmeta::Gazetteer::load(geo_gazetteer);
            auto client = make_geocoder(geo_flags.geocoder_url, gaz ? &*gaz : nullptr,
                                        geo_flags.rate_limit);
            auto candidates = mapmeta::geocode_sheet(phrase_texts, words,
                                                     geo_flags.opt.geocode_mode, *client);
            std::string text;
            json j;
            if (candidates.empty()) {
                text = "no-estimate\n";
                j = json{{"estimate", nullptr}, {"candidates", 0}};
            } else {
                auto est = mapmeta::estimate_location(candidates, geo_flags.opt.eps_km,
                                                      geo_flags.opt.min_pts);
                text = mapmeta::emit_estimate(est);
                j = json{{"lat", est.point.lat},
                         {"lng", est.point.lng},
                         {"cluster_size", est.cluster_size},
                         {"candidates", est.total_candidates},
                         {"degraded", est.degraded}};
            }
            if (geo_out.empty())
                std::cout << text;
            else
                spit(geo_out, text);
            if (json_out) std::cout << j.dump() << "\n";
            return kExitOk;
        }

        if (*match) {
            auto phrases = mapmeta::parse_phrases(slurp(match_phrases), match_phrases);
            auto estimate = mapmeta::parse_estimate(slurp(match_geo), match_geo);
            auto gaz = mapmeta::Gazetteer::load(match_gazetteer);
            std::string text;
            int matched = 0;
            for (const auto& p : phrases) {
                const mapmeta::GazetteerRecord* rec =
                    estimate ? mapmeta::match_entity(p.text, estimate->point, gaz, match_radius,
                                                     match_tau)
                             : nullptr;
                if (rec) {
                    ++matched;
                    text += "match " + p.text + " | " + rec->uri + " " +
                            mapmeta::format_double(rec->point.lat) + " " +
                            mapmeta::format_double(rec->point.lng) + "\n";
                } else {
                    text += "match " + p.text + " | -\n";
                }
            }
            if (match_out.empty())
                std::cout << text;
            else
                spit(match_out, text);
            if (json_out)
                std::cout << json{{"phrases", phrases.size()}, {"matched", matched}}.dump() << "\n";
            return kExitOk;
        }

        if (*rdf) {
            auto phrases = mapmeta::parse_phrases(slurp(rdf_phrases), rdf_phrases);
            if (phrases.empty()) throw mapmeta::config_error("phrase file is empty");
            auto estimate = mapmeta::parse_estimate(slurp(rdf_geo), rdf_geo);
            auto gaz = mapmeta::Gazetteer::load(rdf_gazetteer);
            std::vector<std::string> labels;
            std::vector<std::vector<std::string>> ids;
            std::vector<const mapmeta::GazetteerRecord*> matches;
            for (const auto& p : phrases) {
                labels.push_back(p.text);
                ids.push_back(p.region_ids);
                matches.push_back(estimate ? mapmeta::match_entity(p.text, estimate->point, gaz,
                                                                   rdf_radius, rdf_tau)
                                           : nullptr);
            }
            auto record =
                mapmeta::build_map_record(phrases[0].sheet_id, labels, ids, estimate, matches);
            std::string text = rdf_syntax == "xml"
                                   ? mapmeta::emit_rdfxml(record, rdf_wkt)
                                   : mapmeta::emit_ntriples(
                                         mapmeta::record_to_triples(record, rdf_wkt));
            if (!rdf_store.empty()) mapmeta::RecordStore(rdf_store).save(record, rdf_wkt);
            if (rdf_out.empty())
                std::cout << text;
            else
                spit(rdf_out, text);
            if (json_out)
                std::cout << json{{"sheet", record.sheet_id}, {"features", record.features.size()}}
                                 .dump()
                          << "\n";
            return kExitOk;
        }

        if (*query) {
            auto gaz = mapmeta::Gazetteer::load(q_gazetteer);
            auto records = mapmeta::RecordStore(q_store).load_all();
            mapmeta::EntityFilter filter;
            filter.feature_type = q_type;
            if (q_min_elev >= 0) filter.min_elevation_m = q_min_elev;
            auto result = mapmeta::query_maps(records, gaz, filter);
            for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
            if (json_out) {
                std::cout << json{{"maps", result.map_names}}.dump() << "\n";
            } else {
                for (const auto& name : result.map_names) std::cout << name << "\n";
            }
            return kExitOk;
        }

        if (*eval) {
            mapmeta::EvalOptions opt;
            opt.edge_mode = ev_edge_mode == "chain" ? mapmeta::GtEdgeMode::kChain
                                                    : mapmeta::GtEdgeMode::kAllPairs;
            if (!ev_hist_edges.empty()) opt.histogram_edges = ev_hist_edges;
            auto report = mapmeta::evaluate_directories(ev_pred, ev_gt, opt);
            for (const auto& id : report.skipped)
                std::cerr << "warning: no predictions for sheet " << id << ", skipped\n";
            fs::create_directories(ev_out);
            spit(ev_out + "/linkage.csv", report.linkage_csv());
            spit(ev_out + "/phrases.csv", report.phrases_csv());
            spit(ev_out + "/geolocation.csv", report.geolocation_csv());
            spit(ev_out + "/error_analysis.csv", report.error_analysis_csv());
            auto counts = mapmeta::error_histogram(report.errors_km, opt.histogram_edges);
            spit(ev_out + "/histogram.csv", mapmeta::histogram_csv(opt.histogram_edges, counts));
            if (json_out) {
                double mean_f1 = 0;
                for (const auto& s : report.sheets) mean_f1 += s.linkage.f1;
                if (!report.sheets.empty()) mean_f1 /= static_cast<double>(report.sheets.size());
                std::cout << json{{"sheets", report.sheets.size()},
                                  {"skipped", report.skipped.size()},
                                  {"mean_linkage_f1", mean_f1}}
                                 .dump()
                          << "\n";
            } else {
                std::cout << "evaluated " << report.sheets.size() << " sheets, wrote " << ev_out
                          << "/\n";
            }
            return report.skipped.empty() ? kExitOk : kExitPartial;
        }

        if (*synth) {
            auto corpus = mapmeta::generate_corpus(synth_cfg);
            mapmeta::write_corpus(corpus, synth_out);
            if (json_out)
                std::cout << json{{"sheets", corpus.sheets.size()},
                                  {"gazetteer_records", corpus.gazetteer.records().size()},
                                  {"out", synth_out}}
                                 .dump()
                          << "\n";
            else
                std::cout << "wrote " << corpus.sheets.size() << " sheets to " << synth_out << "\n";
            return kExitOk;
        }

        if (*pipe) {
            pipe_flags.finish();
            auto files = collect_sheet_files(pipe_sheets);
            auto model = mapmeta::load_checkpoint(pipe_checkpoint);
            auto table = mapmeta::EmbeddingTable::load(pipe_embeddings);
            std::optional<mapmeta::Gazetteer> gaz;
            if (!pipe_gazetteer.empty()) gaz = mapmeta::Gazetteer::load(pipe_gazetteer);
            else gaz.emplace();  // empty gazetteer still allows HTTP geocoding + no matches
            auto client =
                make_geocoder(pipe_flags.geocoder_url,
                              pipe_gazetteer.empty() ? nullptr : &*gaz, pipe_flags.rate_limit);
            auto result = mapmeta::run_pipeline(files, model, table, *client, *gaz, pipe_flags.opt,
                                                pipe_out);
            for (const auto& [file, err] : result.failures)
                std::cerr << "error: " << file << ": " << err << "\n";
            if (json_out)
                std::cout << json{{"processed", result.processed},
                                  {"failed", result.failures.size()},
                                  {"out", pipe_out}}
                                 .dump()
                          << "\n";
            else
                std::cout << "processed " << result.processed << " sheets ("
                          << result.failures.size() << " failed), wrote " << pipe_out << "/\n";
            if (result.processed == 0) return kExitConfig;
            return result.failures.empty() ? kExitOk : kExitPartial;
        }
    } catch (const mapmeta::geocoder_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartial;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
