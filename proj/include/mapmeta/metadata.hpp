#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mapmeta/gazetteer.hpp"
#include "mapmeta/geo.hpp"

namespace mapmeta {

namespace rdf {
inline constexpr const char* kType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr const char* kLabel = "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr const char* kSeeAlso = "http://www.w3.org/2000/01/rdf-schema#seeAlso";
inline constexpr const char* kSfOverlaps = "http://www.opengis.net/ont/geosparql#sfOverlaps";
inline constexpr const char* kOntology = "https://mapmeta.org/ont#";
inline constexpr const char* kHistoricalMap = "https://mapmeta.org/ont#HistoricalMap";
inline constexpr const char* kNearby = "https://mapmeta.org/ont#nearby";
inline constexpr const char* kPoint = "https://mapmeta.org/ont#point";
inline constexpr const char* kMapBase = "https://mapmeta.org/map/";
}  // namespace rdf

// Normalized Levenshtein similarity over case-folded code points.
inline double string_similarity(std::string_view a, std::string_view b) {
    if (a.empty() || b.empty()) throw contract_error("string_similarity: empty string");
    auto ca = utf8_decode(to_lower(a));
    auto cb = utf8_decode(to_lower(b));
    size_t n = ca.size(), m = cb.size();
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (ca[i - 1] == cb[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    double dist = static_cast<double>(prev[m]);
    return 1.0 - dist / static_cast<double>(std::max(n, m));
}

// Best-matching gazetteer entity for a phrase near the estimated
// location: records within radius_km ranked by name similarity, ties by
// distance then URI; below tau_sim nothing matches.
inline const GazetteerRecord* match_entity(const std::string& phrase, const LatLngDeg& estimate,
                                           const Gazetteer& gazetteer, double radius_km,
                                           double tau_sim) {
    const GazetteerRecord* best = nullptr;
    double best_sim = -1.0, best_dist = 0.0;
    for (const auto& rec : gazetteer.records()) {
        double dist = haversine_km(estimate, rec.point);
        if (dist > radius_km) continue;
        double sim = string_similarity(phrase, rec.name);
        if (sim < tau_sim) continue;
        bool better = sim > best_sim || (sim == best_sim && dist < best_dist) ||
                      (sim == best_sim && dist == best_dist && best && rec.uri < best->uri);
        if (!best || better) {
            best = &rec;
            best_sim = sim;
            best_dist = dist;
        }
    }
    return best;
}

struct MapFeature {
    std::string label;                      // phrase string
    std::vector<std::string> region_ids;
    std::optional<std::string> entity_uri;  // seeAlso target when matched
    std::optional<LatLngDeg> entity_point;
};

struct MapRecord {
    std::string sheet_id;
    std::optional<LatLngDeg> nearby;
    std::vector<MapFeature> features;

    std::string map_uri() const { return rdf::kMapBase + sheet_id; }
    std::string feature_uri(size_t index) const {
        return map_uri() + "/feature/" + std::to_string(index);
    }
};

inline MapRecord build_map_record(const std::string& sheet_id,
                                  const std::vector<std::string>& phrase_labels,
                                  const std::vector<std::vector<std::string>>& phrase_region_ids,
                                  const std::optional<GeoEstimate>& estimate,
                                  const std::vector<const GazetteerRecord*>& matches) {
    if (phrase_labels.size() != phrase_region_ids.size() ||
        (!matches.empty() && matches.size() != phrase_labels.size()))
        throw contract_error("build_map_record: per-phrase inputs disagree in length");
    MapRecord rec;
    rec.sheet_id = sheet_id;
    if (estimate) rec.nearby = estimate->point;
    for (size_t i = 0; i < phrase_labels.size(); ++i) {
        MapFeature f;
        f.label = phrase_labels[i];
        f.region_ids = phrase_region_ids[i];
        if (!matches.empty() && matches[i]) {
            f.entity_uri = matches[i]->uri;
            f.entity_point = matches[i]->point;
        }
        rec.features.push_back(std::move(f));
    }
    return rec;
}

// --- triples ---------------------------------------------------------------

struct Triple {
    std::string subject;    // IRI
    std::string predicate;  // IRI
    std::string object;     // IRI or literal value
    bool object_is_iri = true;

    friend bool operator<(const Triple& a, const Triple& b) {
        return std::tie(a.subject, a.predicate, a.object, a.object_is_iri) <
               std::tie(b.subject, b.predicate, b.object, b.object_is_iri);
    }
    friend bool operator==(const Triple& a, const Triple& b) = default;
};

inline std::string point_literal(const LatLngDeg& p, bool wkt = false) {
    if (wkt) return "POINT(" + format_double(p.lng) + " " + format_double(p.lat) + ")";
    return format_double(p.lat) + " " + format_double(p.lng);
}

inline std::vector<Triple> record_to_triples(const MapRecord& rec, bool wkt_points = false) {
    std::vector<Triple> out;
    std::string map = rec.map_uri();
    out.push_back({map, rdf::kType, rdf::kHistoricalMap, true});
    if (rec.nearby) out.push_back({map, rdf::kNearby, point_literal(*rec.nearby, wkt_points), false});
    for (size_t i = 0; i < rec.features.size(); ++i) {
        std::string feat = rec.feature_uri(i);
        out.push_back({map, rdf::kSfOverlaps, feat, true});
        out.push_back({feat, rdf::kLabel, rec.features[i].label, false});
        if (rec.features[i].entity_uri)
            out.push_back({feat, rdf::kSeeAlso, *rec.features[i].entity_uri, true});
        if (rec.features[i].entity_point)
            out.push_back({feat, rdf::kPoint, point_literal(*rec.features[i].entity_point, wkt_points), false});
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline std::string nt_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

inline std::string nt_unescape(std::string_view s, const std::string& where) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\') {
            out.push_back(s[i]);
            continue;
        }
        if (++i == s.size()) throw parse_error(where + ": dangling escape");
        switch (s[i]) {
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            case 't': out.push_back('\t'); break;
            default: throw parse_error(where + ": unsupported escape \\" + s[i]);
        }
    }
    return out;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace detail

// N-Triples, sorted by (subject, predicate, object) so emission is
// deterministic and byte-stable.
inline std::string emit_ntriples(const std::vector<Triple>& triples) {
    std::vector<Triple> sorted(triples);
    std::sort(sorted.begin(), sorted.end());
    std::string out;
    for (const auto& t : sorted) {
        out += "<" + t.subject + "> <" + t.predicate + "> ";
        if (t.object_is_iri)
            out += "<" + t.object + ">";
        else
            out += "\"" + detail::nt_escape(t.object) + "\"";
        out += " .\n";
    }
    return out;
}

inline std::vector<Triple> parse_ntriples(std::string_view content,
                                          const std::string& source = "<string>") {
    std::vector<Triple> out;
    int line_no = 0;
    for (const auto& raw : split_on(content, '\n')) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::string where = source + ":" + std::to_string(line_no);
        size_t pos = 0;
        auto read_iri = [&]() {
            if (pos >= line.size() || line[pos] != '<') throw parse_error(where + ": expected IRI");
            size_t end = line.find('>', pos);
            if (end == std::string::npos) throw parse_error(where + ": unterminated IRI");
            std::string iri = line.substr(pos + 1, end - pos - 1);
            pos = end + 1;
            while (pos < line.size() && line[pos] == ' ') ++pos;
            return iri;
        };
        Triple t;
        t.subject = read_iri();
        t.predicate = read_iri();
        if (pos < line.size() && line[pos] == '<') {
            t.object = read_iri();
            t.object_is_iri = true;
        } else if (pos < line.size() && line[pos] == '"') {
            size_t end = pos + 1;
            while (end < line.size() && (line[end] != '"' || line[end - 1] == '\\')) ++end;
            if (end >= line.size()) throw parse_error(where + ": unterminated literal");
            t.object = detail::nt_unescape(line.substr(pos + 1, end - pos - 1), where);
            t.object_is_iri = false;
            pos = end + 1;
            while (pos < line.size() && line[pos] == ' ') ++pos;
        } else {
            throw parse_error(where + ": expected IRI or literal object");
        }
        if (pos >= line.size() || line[pos] != '.')
            throw parse_error(where + ": missing terminating '.'");
        out.push_back(std::move(t));
    }
    return out;
}

// RDF/XML serialization of the same triples; map description first, then
// features in index order.
inline std::string emit_rdfxml(const MapRecord& rec, bool wkt_points = false) {
    std::string out =
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\"\n"
        "         xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\"\n"
        "         xmlns:geo=\"http://www.opengis.net/ont/geosparql#\"\n"
        "         xmlns:mm=\"https://mapmeta.org/ont#\">\n";
    out += "  <rdf:Description rdf:about=\"" + detail::xml_escape(rec.map_uri()) + "\">\n";
    out += "    <rdf:type rdf:resource=\"" + std::string(rdf::kHistoricalMap) + "\"/>\n";
    if (rec.nearby)
        out += "    <mm:nearby>" + detail::xml_escape(point_literal(*rec.nearby, wkt_points)) +
               "</mm:nearby>\n";
    for (size_t i = 0; i < rec.features.size(); ++i)
        out += "    <geo:sfOverlaps rdf:resource=\"" + detail::xml_escape(rec.feature_uri(i)) +
               "\"/>\n";
    out += "  </rdf:Description>\n";
    for (size_t i = 0; i < rec.features.size(); ++i) {
        const auto& f = rec.features[i];
        out += "  <rdf:Description rdf:about=\"" + detail::xml_escape(rec.feature_uri(i)) + "\">\n";
        out += "    <rdfs:label>" + detail::xml_escape(f.label) + "</rdfs:label>\n";
        if (f.entity_uri)
            out += "    <rdfs:seeAlso rdf:resource=\"" + detail::xml_escape(*f.entity_uri) + "\"/>\n";
        if (f.entity_point)
            out += "    <mm:point>" + detail::xml_escape(point_literal(*f.entity_point, wkt_points)) +
                   "</mm:point>\n";
        out += "  </rdf:Description>\n";
    }
    out += "</rdf:RDF>\n";
    return out;
}

// Rebuilds a record from its triples. Region ids are not part of the RDF
// schema and come back empty.
inline MapRecord record_from_triples(const std::vector<Triple>& triples) {
    MapRecord rec;
    std::string map_uri;
    for (const auto& t : triples)
        if (t.predicate == rdf::kType && t.object == rdf::kHistoricalMap) {
            map_uri = t.subject;
            break;
        }
    if (map_uri.empty()) throw parse_error("no HistoricalMap subject in triples");
    if (map_uri.rfind(rdf::kMapBase, 0) == 0)
        rec.sheet_id = map_uri.substr(std::string(rdf::kMapBase).size());
    else
        rec.sheet_id = map_uri;

    std::vector<std::string> feature_uris;
    for (const auto& t : triples) {
        if (t.subject != map_uri) continue;
        if (t.predicate == rdf::kSfOverlaps) feature_uris.push_back(t.object);
        if (t.predicate == rdf::kNearby) {
            auto tokens = split_ws(t.object);
            if (tokens.size() == 2)
                rec.nearby = LatLngDeg{parse_double(tokens[0], "nearby lat"),
                                       parse_double(tokens[1], "nearby lng")};
        }
    }
    std::sort(feature_uris.begin(), feature_uris.end());
    for (const auto& furi : feature_uris) {
        MapFeature f;
        for (const auto& t : triples) {
            if (t.subject != furi) continue;
            if (t.predicate == rdf::kLabel) f.label = t.object;
            if (t.predicate == rdf::kSeeAlso) f.entity_uri = t.object;
            if (t.predicate == rdf::kPoint) {
                auto tokens = split_ws(t.object);
                if (tokens.size() == 2)
                    f.entity_point = LatLngDeg{parse_double(tokens[0], "point lat"),
                                               parse_double(tokens[1], "point lng")};
            }
        }
        rec.features.push_back(std::move(f));
    }
    return rec;
}

// Append-only directory of per-map N-Triples files.
class RecordStore {
public:
    explicit RecordStore(std::string dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::string save(const MapRecord& rec, bool wkt_points = false) const {
        std::string path = dir_ + "/" + rec.sheet_id + ".nt";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw config_error("cannot write record: " + path);
        out << emit_ntriples(record_to_triples(rec, wkt_points));
        return path;
    }

    std::vector<MapRecord> load_all() const {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir_))
            if (entry.is_regular_file() && entry.path().extension() == ".nt")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        std::vector<MapRecord> out;
        for (const auto& path : files) {
            std::ifstream in(path, std::ios::binary);
            std::stringstream ss;
            ss << in.rdbuf();
            out.push_back(record_from_triples(parse_ntriples(ss.str(), path.string())));
        }
        return out;
    }

private:
    std::string dir_;
};

struct EntityFilter {
    std::string feature_type;      // empty matches any type
    std::optional<double> min_elevation_m;
};

struct QueryResult {
    std::vector<std::string> map_names;  // sorted, unique
    std::vector<std::string> warnings;
};

// Maps with at least one feature whose linked entity passes the filter;
// the walk goes entity URI -> seeAlso -> feature -> sfOverlaps -> map.
inline QueryResult query_maps(const std::vector<MapRecord>& records, const Gazetteer& gazetteer,
                              const EntityFilter& filter) {
    std::set<std::string> names;
    QueryResult result;
    for (const auto& rec : records) {
        for (const auto& f : rec.features) {
            if (!f.entity_uri) continue;
            const GazetteerRecord* entity = gazetteer.by_uri(*f.entity_uri);
            if (!entity) {
                result.warnings.push_back("unresolvable entity URI " + *f.entity_uri + " on map " +
                                          rec.sheet_id);
                continue;
            }
            if (!filter.feature_type.empty() && entity->feature_type != filter.feature_type)
                continue;
            if (filter.min_elevation_m &&
                (!entity->elevation_m || *entity->elevation_m < *filter.min_elevation_m))
                continue;
            names.insert(rec.sheet_id);
        }
    }
    result.map_names.assign(names.begin(), names.end());
    return result;
}

}  // namespace mapmeta
