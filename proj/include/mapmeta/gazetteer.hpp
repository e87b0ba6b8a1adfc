#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mapmeta/geo.hpp"

namespace mapmeta {

struct GazetteerRecord {
    std::string name;
    LatLngDeg point;
    std::string feature_type;           // e.g. peak, populated_place, stream
    std::optional<double> elevation_m;
    std::string uri;
};

// Offline place-name table backed by a tab-separated file:
//   name <TAB> lat <TAB> lng <TAB> type <TAB> elevation_m|- <TAB> uri
class Gazetteer {
public:
    static Gazetteer load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw config_error("cannot open gazetteer: " + path);
        Gazetteer gaz;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (trim(line).empty() || line[0] == '#') continue;
            auto fields = split_on(line, '\t');
            if (fields.size() != 6)
                throw parse_error(path + ":" + std::to_string(line_no) +
                                  ": expected 6 tab-separated fields, got " +
                                  std::to_string(fields.size()));
            GazetteerRecord rec;
            rec.name = trim(fields[0]);
            if (rec.name.empty())
                throw parse_error(path + ":" + std::to_string(line_no) + ": empty name");
            rec.point.lat = parse_double(fields[1], "lat");
            rec.point.lng = parse_double(fields[2], "lng");
            rec.feature_type = trim(fields[3]);
            std::string elev = trim(fields[4]);
            if (elev != "-") rec.elevation_m = parse_double(elev, "elevation");
            rec.uri = trim(fields[5]);
            gaz.add(std::move(rec));
        }
        return gaz;
    }

    void add(GazetteerRecord rec) {
        if (rec.uri.empty()) throw validation_error("gazetteer record without URI: " + rec.name);
        if (!by_uri_.emplace(rec.uri, records_.size()).second)
            throw validation_error("duplicate gazetteer URI: " + rec.uri);
        records_.push_back(std::move(rec));
    }

    const std::vector<GazetteerRecord>& records() const { return records_; }

    const GazetteerRecord* by_uri(const std::string& uri) const {
        auto it = by_uri_.find(uri);
        return it == by_uri_.end() ? nullptr : &records_[it->second];
    }

    // Case-insensitive exact name match; when nothing matches exactly,
    // falls back to prefix matches. Results keep file order.
    std::vector<const GazetteerRecord*> lookup(std::string_view query) const {
        std::string q = to_lower(trim(query));
        if (q.empty()) return {};
        std::vector<const GazetteerRecord*> exact, prefix;
        for (const auto& rec : records_) {
            std::string name = to_lower(rec.name);
            if (name == q)
                exact.push_back(&rec);
            else if (name.rfind(q, 0) == 0)
                prefix.push_back(&rec);
        }
        return exact.empty() ? prefix : exact;
    }

    std::string serialize() const {
        std::string out;
        for (const auto& rec : records_) {
            out += rec.name + "\t" + format_double(rec.point.lat) + "\t" +
                   format_double(rec.point.lng) + "\t" + rec.feature_type + "\t" +
                   (rec.elevation_m ? format_double(*rec.elevation_m) : std::string("-")) + "\t" +
                   rec.uri + "\n";
        }
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw config_error("cannot write gazetteer: " + path);
        out << serialize();
    }

private:
    std::vector<GazetteerRecord> records_;
    std::unordered_map<std::string, size_t> by_uri_;
};

}  // namespace mapmeta
