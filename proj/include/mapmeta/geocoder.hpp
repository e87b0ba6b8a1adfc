#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "mapmeta/gazetteer.hpp"

namespace mapmeta {

// Transport-level geocoding failure, distinct from an empty result list.
class geocoder_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GeocodeClient {
public:
    virtual ~GeocodeClient() = default;
    // Ordered candidates for one query; empty means "no results".
    virtual std::vector<GeoCandidate> geocode(const std::string& query) = 0;
};

// Offline client over the local gazetteer; no rate limit applies.
class GazetteerGeocoder : public GeocodeClient {
public:
    explicit GazetteerGeocoder(const Gazetteer& gazetteer) : gazetteer_(gazetteer) {}

    std::vector<GeoCandidate> geocode(const std::string& query) override {
        if (trim(query).empty()) throw contract_error("geocode: empty query");
        std::vector<GeoCandidate> out;
        int rank = 0;
        for (const GazetteerRecord* rec : gazetteer_.lookup(query))
            out.push_back({query, rec->point, rank++});
        return out;
    }

private:
    const Gazetteer& gazetteer_;
};

// HTTP client: GET <endpoint>?q=<query>, expecting a JSON array of
// {"lat": .., "lng": ..} objects in rank order. Requests are rate
// limited and retried with jittered backoff before giving up.
class HttpGeocoder : public GeocodeClient {
public:
    struct Options {
        double max_requests_per_sec = 10.0;  // <= 0 disables the limiter
        int attempts = 3;
        std::chrono::milliseconds backoff_base{100};
        std::chrono::milliseconds timeout{5000};
        uint64_t jitter_seed = 0x9e3779b97f4a7c15ULL;
    };

    explicit HttpGeocoder(const std::string& endpoint) : HttpGeocoder(endpoint, Options()) {}

    HttpGeocoder(const std::string& endpoint, Options options)
        : options_(options), jitter_rng_(options.jitter_seed) {
        auto path_start = endpoint.find('/', endpoint.find("://") == std::string::npos
                                                 ? 0
                                                 : endpoint.find("://") + 3);
        if (path_start == std::string::npos) {
            base_ = endpoint;
            path_ = "/";
        } else {
            base_ = endpoint.substr(0, path_start);
            path_ = endpoint.substr(path_start);
        }
    }

    std::vector<GeoCandidate> geocode(const std::string& query) override {
        if (trim(query).empty()) throw contract_error("geocode: empty query");
        std::string url = path_ + "?q=" + url_encode(query);
        std::string last_error;
        for (int attempt = 0; attempt < options_.attempts; ++attempt) {
            if (attempt > 0) backoff(attempt);
            throttle();
            httplib::Client client(base_);
            client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout));
            client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(options_.timeout));
            auto res = client.Get(url);
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error: HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw geocoder_error("geocoder returned HTTP " + std::to_string(res->status) +
                                     " for '" + query + "'");
            return parse_response(res->body, query);
        }
        throw geocoder_error("geocoding '" + query + "' failed after " +
                             std::to_string(options_.attempts) + " attempts (" + last_error + ")");
    }

    static std::vector<GeoCandidate> parse_response(const std::string& body,
                                                    const std::string& query) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw geocoder_error("bad geocoder response for '" + query + "': " + e.what());
        }
        if (!doc.is_array()) throw geocoder_error("geocoder response is not a JSON array");
        std::vector<GeoCandidate> out;
        int rank = 0;
        for (const auto& item : doc) {
            if (!item.contains("lat") || !item.contains("lng"))
                throw geocoder_error("geocoder candidate lacks lat/lng");
            GeoCandidate c{query, {item["lat"].get<double>(), item["lng"].get<double>()}, rank++};
            c.validate();
            out.push_back(std::move(c));
        }
        return out;
    }

    static std::string url_encode(std::string_view s) {
        static const char* hex = "0123456789ABCDEF";
        std::string out;
        for (unsigned char c : s) {
            if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~')
                out.push_back(static_cast<char>(c));
            else {
                out.push_back('%');
                out.push_back(hex[c >> 4]);
                out.push_back(hex[c & 0xF]);
            }
        }
        return out;
    }

private:
    void throttle() {
        if (options_.max_requests_per_sec <= 0) return;
        std::unique_lock lock(mutex_);
        auto min_gap = std::chrono::duration<double>(1.0 / options_.max_requests_per_sec);
        auto now = std::chrono::steady_clock::now();
        if (last_request_.time_since_epoch().count() != 0) {
            auto release = last_request_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(min_gap);
            if (release > now) {
                std::this_thread::sleep_until(release);
                now = release;
            }
        }
        last_request_ = now;
    }

    void backoff(int attempt) {
        double jitter;
        {
            std::unique_lock lock(mutex_);
            jitter = rng_uniform(jitter_rng_);
        }
        auto delay = options_.backoff_base * attempt;
        delay += std::chrono::milliseconds(static_cast<long>(jitter * options_.backoff_base.count()));
        std::this_thread::sleep_for(delay);
    }

    Options options_;
    std::string base_;
    std::string path_;
    std::mutex mutex_;
    std::chrono::steady_clock::time_point last_request_;
    Rng jitter_rng_;
};

enum class GeocodeMode { kPhraseByPhrase, kWordByWord, kWordToParagraph };

inline GeocodeMode parse_geocode_mode(std::string_view s) {
    if (s == "phrase-by-phrase" || s == "phrase_by_phrase") return GeocodeMode::kPhraseByPhrase;
    if (s == "word-by-word" || s == "word_by_word") return GeocodeMode::kWordByWord;
    if (s == "word2paragraph" || s == "word-to-paragraph") return GeocodeMode::kWordToParagraph;
    throw config_error("unknown geocode mode: " + std::string(s));
}

inline std::string to_string(GeocodeMode mode) {
    switch (mode) {
        case GeocodeMode::kPhraseByPhrase: return "phrase-by-phrase";
        case GeocodeMode::kWordByWord: return "word-by-word";
        case GeocodeMode::kWordToParagraph: return "word2paragraph";
    }
    return "?";
}

// phrases: the assembled location phrases of a sheet, in output order.
// words: every region transcription in reading order. Phrase mode issues
// one call per phrase and word mode one per word; the word2paragraph
// baseline joins all words into a single query and keeps only the first
// candidate. Individual transport failures are tolerated unless every
// call fails.
inline std::vector<GeoCandidate> geocode_sheet(const std::vector<std::string>& phrases,
                                               const std::vector<std::string>& words,
                                               GeocodeMode mode, GeocodeClient& client) {
    std::vector<GeoCandidate> out;
    const std::vector<std::string>* queries = nullptr;
    std::vector<std::string> joined;
    switch (mode) {
        case GeocodeMode::kPhraseByPhrase: queries = &phrases; break;
        case GeocodeMode::kWordByWord: queries = &words; break;
        case GeocodeMode::kWordToParagraph: {
            std::string paragraph;
            for (const auto& w : words) {
                if (!paragraph.empty()) paragraph += ' ';
                paragraph += w;
            }
            if (trim(paragraph).empty()) return {};
            joined.push_back(paragraph);
            queries = &joined;
            break;
        }
    }
    size_t calls = 0, failures = 0;
    std::string first_error;
    for (const auto& q : *queries) {
        if (trim(q).empty()) continue;
        ++calls;
        try {
            auto candidates = client.geocode(q);
            if (mode == GeocodeMode::kWordToParagraph && candidates.size() > 1)
                candidates.resize(1);
            out.insert(out.end(), candidates.begin(), candidates.end());
        } catch (const geocoder_error& e) {
            ++failures;
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (calls > 0 && failures == calls)
        throw geocoder_error("all " + std::to_string(calls) + " geocoding calls failed (" +
                             first_error + ")");
    return out;
}

}  // namespace mapmeta
