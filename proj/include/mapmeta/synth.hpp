#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mapmeta/features.hpp"
#include "mapmeta/gazetteer.hpp"
#include "mapmeta/sheet.hpp"

namespace mapmeta {

// Procedural benchmark corpus: sheets with planted multi-word phrases,
// singleton place names and near-miss distractors, a gazetteer holding
// one local entity per planted name plus far-away decoys, and a word
// vector file covering the vocabulary.
struct SynthConfig {
    int sheet_count = 20;
    uint64_t seed = 20240817;
    int embed_dim = 50;
    double sheet_w = 2000.0;
    double sheet_h = 1500.0;
    int min_phrases = 9;
    int max_phrases = 12;
    int min_singletons = 4;
    int max_singletons = 6;
    int min_traps = 2;
    int max_traps = 3;
    double duplicate_probability = 0.25;  // chance a sheet repeats one phrase
};

struct SynthCorpus {
    std::vector<MapSheet> sheets;
    Gazetteer gazetteer;
    std::string embeddings_text;
};

namespace synth_detail {

inline const std::vector<std::string>& canonical_phrases() {
    static const std::vector<std::string> kPhrases = {
        "Fall River",      "Black Crater",   "Bear Lake",       "Eagle Rock",
        "Pine Creek",      "Castle Dome",    "Twin Peaks",      "Red Bluff",
        "Sand Flat",       "Hot Springs",    "Deer Valley",     "Antelope Wells",
        "Willow Grove",    "North Fork",     "South Bend",      "Granite Pass",
        "Silver Mesa",     "Copper Canyon",  "Lone Butte",      "Grand Vista",
        "Cold Spring",     "Owl Ridge",      "Fox Hollow",      "Mud Lake",
        "Salt Marsh",      "Stone Bridge",   "High Point",      "Low Gap",
        "Green Knoll",     "White Dome",     "Blue Basin",      "Dry Wash",
        "Elk Meadow",      "Hawk Summit",    "Crystal Spring",  "Boulder Field",
        "Modoc Lava Beds", "Little Bear Creek", "Old Mill Pond", "Big Sand Dunes",
    };
    return kPhrases;
}

inline const std::vector<std::string>& singleton_names() {
    static const std::vector<std::string> kNames = {
        "Summit", "Midway", "Fairview", "Riverside", "Lakeview", "Oakdale", "Elmwood", "Maplewood",
    };
    return kNames;
}

inline const std::vector<std::string>& trap_names() {
    static const std::vector<std::string> kNames = {
        "Burgettville", "Johnsonburg", "Martinsville", "Pedersonton", "Cramerville", "Watsonburg",
    };
    return kNames;
}

struct PlacedBox {
    double x0, y0, x1, y1;
};

inline bool boxes_collide(const PlacedBox& a, const PlacedBox& b) {
    return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

inline Quad axis_box(double x, double y, double w, double h) {
    return {Vec2{x, y}, Vec2{x + w, y}, Vec2{x + w, y + h}, Vec2{x, y + h}};
}

inline Quad rotate_quad(const Quad& q, double deg) {
    Vec2 c = (q[0] + q[1] + q[2] + q[3]) * 0.25;
    double rad = deg * 3.14159265358979323846 / 180.0;
    double cs = std::cos(rad), sn = std::sin(rad);
    Quad out;
    for (int i = 0; i < 4; ++i) {
        Vec2 d = q[i] - c;
        out[i] = {c.x + d.x * cs - d.y * sn, c.y + d.x * sn + d.y * cs};
    }
    return out;
}

// Word boxes for one left-to-right phrase at (x, y) with font height h.
// Character width is fixed per phrase so every word shares the same font
// area, the cue the consensus stage keys on.
struct PhrasePlacement {
    std::vector<Quad> boxes;
    std::vector<std::string> words;
    PlacedBox hull;
};

inline PhrasePlacement layout_phrase(const std::string& phrase, double x, double y, double h,
                                     Rng& rng, bool upper) {
    PhrasePlacement out;
    double cw = 0.55 * h;
    double cursor = x;
    for (const auto& word : split_ws(phrase)) {
        double w = static_cast<double>(word.size()) * cw;
        out.boxes.push_back(axis_box(cursor, y, w, h));
        out.words.push_back(upper ? to_upper(word) : word);
        cursor += w + h * rng_uniform(rng, 0.25, 0.5);
    }
    out.hull = {x, y, cursor, y + h};
    return out;
}

}  // namespace synth_detail

inline SynthCorpus generate_corpus(const SynthConfig& cfg) {
    using namespace synth_detail;
    SynthCorpus corpus;
    Rng master(cfg.seed);

    // deterministic embedding file over the whole vocabulary
    std::vector<std::string> vocab;
    {
        std::set<std::string> seen;
        auto add_words = [&](const std::vector<std::string>& names) {
            for (const auto& name : names)
                for (const auto& word : split_ws(name)) seen.insert(to_lower(word));
        };
        add_words(canonical_phrases());
        add_words(singleton_names());
        add_words(trap_names());
        vocab.assign(seen.begin(), seen.end());
    }
    for (const auto& word : vocab) {
        Rng word_rng(cfg.seed ^ std::hash<std::string>{}(word));
        corpus.embeddings_text += word;
        for (int d = 0; d < cfg.embed_dim; ++d) {
            char buf[32];
            auto res = std::to_chars(buf, buf + sizeof buf, rng_normal(word_rng) * 0.5,
                                     std::chars_format::fixed, 6);
            corpus.embeddings_text += ' ';
            corpus.embeddings_text.append(buf, res.ptr);
        }
        corpus.embeddings_text += '\n';
    }

    int uri_counter = 0;
    auto next_uri = [&uri_counter]() {
        return "https://gaz.mapmeta.org/e/" + std::to_string(uri_counter++);
    };
    const std::array<const char*, 4> kTypes = {"populated_place", "stream", "peak", "lake"};

    for (int s = 0; s < cfg.sheet_count; ++s) {
        Rng rng(cfg.seed + 0x51ed0000ULL + static_cast<uint64_t>(s) * 9973ULL);
        MapSheet sheet;
        char name[32];
        std::snprintf(name, sizeof name, "synth-%03d", s);
        sheet.sheet_id = name;
        sheet.image_w = cfg.sheet_w;
        sheet.image_h = cfg.sheet_h;

        double lat = 34.0 + 0.8 * (s % 5) + rng_uniform(rng, -0.05, 0.05);
        double lng = -122.0 + 1.4 * (s / 5) + rng_uniform(rng, -0.05, 0.05);
        sheet.gt_location = LatLngDeg{lat, lng};
        sheet.corner_min = LatLngDeg{lat - 0.25, lng - 0.30};
        sheet.corner_max = LatLngDeg{lat + 0.25, lng + 0.30};

        // pick this sheet's phrases
        std::vector<int> order(canonical_phrases().size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng_index(rng, i)]);
        int n_phrases = cfg.min_phrases +
                        static_cast<int>(rng_index(rng, cfg.max_phrases - cfg.min_phrases + 1));
        std::vector<std::string> picked;
        for (int i = 0; i < n_phrases; ++i) picked.push_back(canonical_phrases()[order[i]]);
        if (rng_uniform(rng) < cfg.duplicate_probability)
            picked.push_back(picked[rng_index(rng, picked.size())]);

        std::vector<PlacedBox> occupied;
        int region_counter = 0;
        auto add_region = [&](const Quad& q, const std::string& text) {
            TextRegion r;
            r.id = "r" + std::to_string(region_counter++);
            r.text = text;
            r.polygon = q;
            r.derive();
            sheet.regions.push_back(std::move(r));
            return sheet.regions.back().id;
        };
        // phrase hulls are kept 3 font heights apart so proximity stays a
        // usable linkage cue; traps violate it on purpose
        auto try_place = [&](double w, double h, double margin, PlacedBox& slot) {
            for (int attempt = 0; attempt < 200; ++attempt) {
                double x = rng_uniform(rng, margin, cfg.sheet_w - w - margin);
                double y = rng_uniform(rng, margin, cfg.sheet_h - h - margin);
                PlacedBox inflated{x - margin, y - margin, x + w + margin, y + h + margin};
                bool free = true;
                for (const auto& other : occupied)
                    if (boxes_collide(inflated, other)) {
                        free = false;
                        break;
                    }
                if (free) {
                    slot = {x, y, x + w, y + h};
                    return true;
                }
            }
            return false;
        };

        struct PlantedPhrase {
            std::string display;
            std::vector<std::string> region_ids;
            PlacedBox hull;
            double font_h;
            bool upper;
        };
        std::vector<PlantedPhrase> planted;

        for (const auto& phrase : picked) {
            double h = rng_uniform(rng, 22.0, 40.0);
            bool upper = rng_uniform(rng) < 0.3;
            double est_w = 0.0;
            for (const auto& word : split_ws(phrase)) est_w += word.size() * 0.55 * h + 0.5 * h;
            PlacedBox slot;
            if (!try_place(est_w, h, 3.0 * h, slot)) continue;
            auto layout = layout_phrase(phrase, slot.x0, slot.y0, h, rng, upper);
            PlantedPhrase planted_phrase{phrase, {}, layout.hull, h, upper};
            for (size_t w = 0; w < layout.words.size(); ++w)
                planted_phrase.region_ids.push_back(add_region(layout.boxes[w], layout.words[w]));
            occupied.push_back({layout.hull.x0, layout.hull.y0, layout.hull.x1, layout.hull.y1});
            sheet.gt_groups.push_back(planted_phrase.region_ids);
            planted.push_back(std::move(planted_phrase));
        }

        // standalone place names; a few get a slight rotation for texture
        int n_single = cfg.min_singletons +
                       static_cast<int>(rng_index(rng, cfg.max_singletons - cfg.min_singletons + 1));
        std::vector<std::string> placed_singletons;
        for (int i = 0; i < n_single; ++i) {
            const std::string& nm = singleton_names()[rng_index(rng, singleton_names().size())];
            double h = rng_uniform(rng, 22.0, 40.0);
            double w = nm.size() * 0.55 * h;
            PlacedBox slot;
            if (!try_place(w, h, 3.0 * h, slot)) continue;
            Quad q = axis_box(slot.x0, slot.y0, w, h);
            if (rng_uniform(rng) < 0.2) q = rotate_quad(q, rng_uniform(rng, 10.0, 20.0));
            bool upper = rng_uniform(rng) < 0.3;
            auto id = add_region(q, upper ? to_upper(nm) : nm);
            occupied.push_back(slot);
            sheet.gt_groups.push_back({id});
            placed_singletons.push_back(nm);
        }

        // traps: a large-font distractor word parked right next to a phrase,
        // the "Fall" vs "Burgettville" failure case
        int n_traps =
            cfg.min_traps + static_cast<int>(rng_index(rng, cfg.max_traps - cfg.min_traps + 1));
        for (int t = 0; t < n_traps && !planted.empty(); ++t) {
            const auto& target = planted[rng_index(rng, planted.size())];
            const std::string& nm = trap_names()[rng_index(rng, trap_names().size())];
            double h = target.font_h * rng_uniform(rng, 1.7, 2.3);
            double w = nm.size() * 0.55 * h;
            double gap = target.font_h * rng_uniform(rng, 0.8, 1.2);
            bool right = rng_uniform(rng) < 0.5;
            double x = right ? target.hull.x1 + gap : target.hull.x0 - gap - w;
            double y = target.hull.y0 + 0.5 * (target.hull.y1 - target.hull.y0) - 0.5 * h;
            PlacedBox slot{x, y, x + w, y + h};
            if (x < 5 || x + w > cfg.sheet_w - 5 || y < 5 || y + h > cfg.sheet_h - 5) continue;
            bool free = true;
            for (const auto& other : occupied)
                if (boxes_collide(slot, other)) {
                    free = false;
                    break;
                }
            if (!free) continue;
            auto id = add_region(axis_box(x, y, w, h), target.upper ? nm : to_upper(nm));
            occupied.push_back(slot);
            sheet.gt_groups.push_back({id});

            // traps resolve only to far-away decoys
            GazetteerRecord decoy;
            decoy.name = nm;
            decoy.point = {rng_uniform(rng, 25.0, 49.0), rng_uniform(rng, -124.0, -67.0)};
            decoy.feature_type = kTypes[rng_index(rng, kTypes.size())];
            decoy.uri = next_uri();
            corpus.gazetteer.add(std::move(decoy));
        }

        // local gazetteer entities for everything planted on this sheet
        std::set<std::string> local_names;
        for (const auto& p : planted) local_names.insert(p.display);
        for (const auto& nm : placed_singletons) local_names.insert(nm);
        for (const auto& nm : local_names) {
            GazetteerRecord rec;
            rec.name = nm;
            rec.point = {lat + rng_uniform(rng, -0.02, 0.02), lng + rng_uniform(rng, -0.02, 0.02)};
            rec.feature_type = kTypes[rng_index(rng, kTypes.size())];
            if (rec.feature_type == std::string("peak"))
                rec.elevation_m = 800.0 + rng_uniform(rng) * 1700.0;
            rec.uri = next_uri();
            corpus.gazetteer.add(std::move(rec));
        }

        detail::validate_sheet(sheet);
        corpus.sheets.push_back(std::move(sheet));
    }

    // global decoys: every canonical name also exists somewhere far away
    Rng decoy_rng(cfg.seed ^ 0xdecdecdecULL);
    for (const auto& nm : canonical_phrases()) {
        int copies = 1 + static_cast<int>(rng_index(decoy_rng, 2));
        for (int i = 0; i < copies; ++i) {
            GazetteerRecord rec;
            rec.name = nm;
            rec.point = {rng_uniform(decoy_rng, 25.0, 49.0), rng_uniform(decoy_rng, -124.0, -67.0)};
            rec.feature_type = kTypes[rng_index(decoy_rng, kTypes.size())];
            if (rec.feature_type == std::string("peak"))
                rec.elevation_m = 800.0 + rng_uniform(decoy_rng) * 1700.0;
            rec.uri = next_uri();
            corpus.gazetteer.add(std::move(rec));
        }
    }
    return corpus;
}

inline void write_corpus(const SynthCorpus& corpus, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir + "/sheets");
    for (const auto& sheet : corpus.sheets)
        write_sheet(sheet, out_dir + "/sheets/" + sheet.sheet_id + ".sheet");
    corpus.gazetteer.save(out_dir + "/gazetteer.tsv");
    std::ofstream emb(out_dir + "/embeddings.txt", std::ios::binary);
    if (!emb) throw config_error("cannot write embeddings file");
    emb << corpus.embeddings_text;
}

}  // namespace mapmeta
