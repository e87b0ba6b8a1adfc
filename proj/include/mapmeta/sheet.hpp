#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mapmeta/geometry.hpp"

namespace mapmeta {

// 1 iff every alphabetic character is uppercase; words without alphabetic
// characters are not considered capitalized. Only ASCII letters count, so
// "U.S." and "1ST" are uppercase while "No.4" is not.
inline int caps_flag(std::string_view text) {
    bool has_alpha = false;
    for (char c : text) {
        if (c >= 'a' && c <= 'z') return 0;
        if (c >= 'A' && c <= 'Z') has_alpha = true;
    }
    return has_alpha ? 1 : 0;
}

struct TextRegion {
    std::string id;
    std::string text;
    Quad polygon;
    // derived
    Vec2 center;
    double width = 0.0;
    double height = 0.0;
    double angle = 0.0;
    int caps = 0;

    void derive() {
        BoxGeometry g = derive_geometry(polygon);
        center = g.center;
        width = g.width;
        height = g.height;
        angle = g.angle;
        caps = caps_flag(text);
    }
};

struct LatLngDeg {
    double lat = 0.0;
    double lng = 0.0;
    friend bool operator==(const LatLngDeg&, const LatLngDeg&) = default;
};

struct MapSheet {
    std::string sheet_id;
    double image_w = 0.0;
    double image_h = 0.0;
    std::vector<TextRegion> regions;
    std::vector<std::vector<std::string>> gt_groups;  // ordered region ids
    std::optional<LatLngDeg> gt_location;
    std::optional<LatLngDeg> corner_min;  // plot-area corner with smallest lat/lng
    std::optional<LatLngDeg> corner_max;

    const TextRegion* find(std::string_view id) const {
        for (const auto& r : regions)
            if (r.id == id) return &r;
        return nullptr;
    }
    int index_of(std::string_view id) const {
        for (size_t i = 0; i < regions.size(); ++i)
            if (regions[i].id == id) return static_cast<int>(i);
        return -1;
    }
};

namespace detail {

inline void validate_sheet(const MapSheet& sheet) {
    std::set<std::string> ids;
    for (const auto& r : sheet.regions) {
        if (!ids.insert(r.id).second)
            throw validation_error("duplicate region id '" + r.id + "' in sheet " + sheet.sheet_id);
        if (trim(r.text).empty())
            throw validation_error("region '" + r.id + "' has empty text");
        if (!(r.width > 0.0) || !(r.height > 0.0))
            throw validation_error("region '" + r.id + "' has degenerate polygon");
    }
    std::set<std::string> grouped;
    for (const auto& group : sheet.gt_groups) {
        for (const auto& id : group) {
            if (!ids.count(id))
                throw validation_error("group references unknown region id '" + id + "'");
            if (!grouped.insert(id).second)
                throw validation_error("region id '" + id + "' appears in more than one group");
        }
    }
}

}  // namespace detail

// Sheet annotation format, one record per line:
//   sheet <id> <W> <H> [gt_lat gt_lng] [tmin_lat tmin_lng tmax_lat tmax_lng]
//   region <id> <x1> <y1> <x2> <y2> <x3> <y3> <x4> <y4> <text...>
//   group <id1> <id2> ...
// Blank lines and lines starting with '#' are ignored.
inline MapSheet parse_sheet_text(std::string_view content, const std::string& source = "<string>") {
    MapSheet sheet;
    bool have_header = false;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= content.size()) {
        size_t eol = content.find('\n', pos);
        std::string_view line_sv = content.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? content.size() + 1 : eol + 1;
        ++line_no;
        std::string line = trim(line_sv);
        if (line.empty() || line[0] == '#') continue;
        auto where = [&](const std::string& msg) {
            return source + ":" + std::to_string(line_no) + ": " + msg;
        };

        auto tokens = split_ws(line);
        const std::string& kind = tokens[0];
        if (kind == "sheet") {
            if (have_header) throw parse_error(where("duplicate sheet header"));
            if (tokens.size() != 4 && tokens.size() != 6 && tokens.size() != 8 && tokens.size() != 10)
                throw parse_error(where("sheet header wants 4, 6, 8 or 10 fields, got " +
                                        std::to_string(tokens.size())));
            sheet.sheet_id = tokens[1];
            sheet.image_w = parse_double(tokens[2], "image width");
            sheet.image_h = parse_double(tokens[3], "image height");
            if (sheet.image_w <= 0 || sheet.image_h <= 0)
                throw parse_error(where("image dimensions must be positive"));
            size_t i = 4;
            if (tokens.size() == 6 || tokens.size() == 10) {
                sheet.gt_location = LatLngDeg{parse_double(tokens[i], "gt_lat"),
                                              parse_double(tokens[i + 1], "gt_lng")};
                i += 2;
            }
            if (tokens.size() == 8 || tokens.size() == 10) {
                sheet.corner_min = LatLngDeg{parse_double(tokens[i], "tmin_lat"),
                                             parse_double(tokens[i + 1], "tmin_lng")};
                sheet.corner_max = LatLngDeg{parse_double(tokens[i + 2], "tmax_lat"),
                                             parse_double(tokens[i + 3], "tmax_lng")};
            }
            have_header = true;
        } else if (kind == "region") {
            if (!have_header) throw parse_error(where("region before sheet header"));
            if (tokens.size() < 11)
                throw parse_error(where("region wants id, 8 coordinates and text"));
            TextRegion r;
            r.id = tokens[1];
            for (int c = 0; c < 4; ++c) {
                r.polygon[c].x = parse_double(tokens[2 + 2 * c], "x" + std::to_string(c + 1));
                r.polygon[c].y = parse_double(tokens[3 + 2 * c], "y" + std::to_string(c + 1));
            }
            // text = remainder of the line after the 10th token
            size_t cut = 0;
            for (int t = 0; t < 10; ++t) {
                cut = line.find_first_not_of(" \t", cut);
                cut = line.find_first_of(" \t", cut);
            }
            r.text = trim(line.substr(cut == std::string::npos ? line.size() : cut));
            if (r.text.empty()) throw parse_error(where("region '" + r.id + "' has empty text"));
            try {
                r.derive();
            } catch (const validation_error& e) {
                throw validation_error(where(std::string(e.what()) + " (region '" + r.id + "')"));
            }
            sheet.regions.push_back(std::move(r));
        } else if (kind == "group") {
            if (!have_header) throw parse_error(where("group before sheet header"));
            if (tokens.size() < 2) throw parse_error(where("empty group"));
            sheet.gt_groups.emplace_back(tokens.begin() + 1, tokens.end());
        } else {
            throw parse_error(where("unknown record '" + kind + "'"));
        }
    }
    if (!have_header) throw parse_error(source + ": missing sheet header");
    detail::validate_sheet(sheet);
    return sheet;
}

inline MapSheet parse_sheet(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open sheet file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_sheet_text(ss.str(), path);
}

inline std::string emit_sheet(const MapSheet& sheet) {
    std::string out = "sheet " + sheet.sheet_id + " " + format_double(sheet.image_w) + " " +
                      format_double(sheet.image_h);
    if (sheet.gt_location)
        out += " " + format_double(sheet.gt_location->lat) + " " + format_double(sheet.gt_location->lng);
    if (sheet.corner_min && sheet.corner_max)
        out += " " + format_double(sheet.corner_min->lat) + " " + format_double(sheet.corner_min->lng) +
               " " + format_double(sheet.corner_max->lat) + " " + format_double(sheet.corner_max->lng);
    out += "\n";
    for (const auto& r : sheet.regions) {
        out += "region " + r.id;
        for (const auto& p : r.polygon) out += " " + format_double(p.x) + " " + format_double(p.y);
        out += " " + r.text + "\n";
    }
    for (const auto& group : sheet.gt_groups) {
        out += "group";
        for (const auto& id : group) out += " " + id;
        out += "\n";
    }
    return out;
}

inline void write_sheet(const MapSheet& sheet, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write sheet file: " + path);
    out << emit_sheet(sheet);
}

}  // namespace mapmeta
