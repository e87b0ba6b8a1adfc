#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mapmeta/features.hpp"

using namespace mapmeta;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

TextRegion make_region(const std::string& id, const std::string& text, double x, double y,
                       double w, double h) {
    TextRegion r;
    r.id = id;
    r.text = text;
    r.polygon = {Vec2{x, y}, Vec2{x + w, y}, Vec2{x + w, y + h}, Vec2{x, y + h}};
    r.derive();
    return r;
}

}  // namespace

TEST_CASE("load_embeddings reads plain-text vectors") {
    auto path = write_temp("emb_ok.txt",
                           "river 1 0 0.5\n"
                           "Fall 0.25 -1 2\n"
                           "creek 0 0 1\n");
    auto table = EmbeddingTable::load(path);
    CHECK(table.size() == 3);
    CHECK(table.dimension() == 3);
    CHECK(table.lookup("river") == std::vector<double>{1, 0, 0.5});
    // case folding both in the file and in the query
    CHECK(table.lookup("FALL") == std::vector<double>{0.25, -1, 2});
}

TEST_CASE("load_embeddings rejects ragged and empty files") {
    auto ragged = write_temp("emb_ragged.txt", "a 1 2 3\nb 1 2\n");
    CHECK_THROWS_AS(EmbeddingTable::load(ragged), parse_error);
    auto empty = write_temp("emb_empty.txt", "");
    CHECK_THROWS_AS(EmbeddingTable::load(empty), parse_error);
}

TEST_CASE("load_embeddings handles a truncated GloVe-style vocabulary") {
    std::string content;
    Rng rng(7);
    for (int i = 0; i < 400; ++i) {
        content += "tok" + std::to_string(i);
        for (int d = 0; d < 50; ++d) content += " " + format_double(rng_uniform(rng, -1, 1));
        content += "\n";
    }
    auto table = EmbeddingTable::load(write_temp("emb_glove.txt", content));
    CHECK(table.size() == 400);
    CHECK(table.dimension() == 50);
}

TEST_CASE("embed_word out-of-vocabulary policies") {
    EmbeddingTable zeros(4, OovPolicy::kZeros);
    zeros.insert("river", {1, 2, 3, 4});
    CHECK(embed_word(zeros, "modoclavabed") == std::vector<double>(4, 0.0));

    EmbeddingTable hashed(4, OovPolicy::kHashedUnit);
    hashed.insert("river", {1, 2, 3, 4});
    auto v1 = embed_word(hashed, "modoclavabed");
    auto v2 = embed_word(hashed, "modoclavabed");
    CHECK(v1 == v2);  // deterministic
    double norm = 0;
    for (double x : v1) norm += x * x;
    CHECK(norm == Catch::Approx(1.0));
}

TEST_CASE("embed_word averages multi-token transcriptions") {
    EmbeddingTable table(2, OovPolicy::kZeros);
    table.insert("st", {1, 0});
    table.insert("paul", {0, 1});
    auto v = embed_word(table, "St Paul");
    CHECK(v[0] == Catch::Approx(0.5));
    CHECK(v[1] == Catch::Approx(0.5));
}

TEST_CASE("font_area formula") {
    CHECK(font_area(make_region("a", "AB", 0, 0, 10, 5)) == Catch::Approx(25.0));
    CHECK(font_area(make_region("b", "ABCDE", 0, 0, 10, 5)) == Catch::Approx(10.0));
    CHECK(font_area(make_region("c", "a", 0, 0, 7, 3)) == Catch::Approx(21.0));
    // length counts Unicode scalars, not bytes
    CHECK(font_area(make_region("d", "\xC3\xA9\xC3\xA9", 0, 0, 10, 5)) == Catch::Approx(25.0));
}

TEST_CASE("normalization endpoints and constant columns") {
    CHECK(NormalizationContext::scale(0.0, 0.0, 10.0) == -1.0);
    CHECK(NormalizationContext::scale(10.0, 0.0, 10.0) == 1.0);
    CHECK(NormalizationContext::scale(5.0, 0.0, 10.0) == 0.0);
    CHECK(NormalizationContext::scale(3.0, 3.0, 3.0) == 0.0);
    // monotone
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        double a = rng_uniform(rng, 0, 1), b = rng_uniform(rng, 0, 1);
        if (a > b) std::swap(a, b);
        CHECK(NormalizationContext::scale(a, 0, 1) <= NormalizationContext::scale(b, 0, 1));
    }
}

TEST_CASE("build_feature_vector layout and endpoints") {
    EmbeddingTable table(3, OovPolicy::kZeros);
    table.insert("fall", {0.1, 0.2, 0.3});
    table.insert("river", {0.4, 0.5, 0.6});

    MapSheet sheet;
    sheet.sheet_id = "s";
    sheet.image_w = 1000;
    sheet.image_h = 1000;
    sheet.regions.push_back(make_region("a", "Fall", 100, 100, 40, 16));
    sheet.regions.push_back(make_region("b", "RIVER", 300, 100, 50, 16));
    auto ctx = NormalizationContext::from_sheet(sheet);

    auto fa = build_feature_vector(sheet.regions[0], ctx, table);
    auto fb = build_feature_vector(sheet.regions[1], ctx, table);
    REQUIRE(fa.size() == 8);  // dim + 5
    CHECK(fa[3] == -1.0);     // min c_x
    CHECK(fb[3] == 1.0);      // max c_x
    CHECK(fa[4] == 0.0);      // constant c_y column
    CHECK(fa[5] == Catch::Approx(0.5));  // horizontal box: 90/180
    CHECK(fa[7] == 0.0);
    CHECK(fb[7] == 1.0);  // caps

    // determinism and order independence
    auto fa2 = build_feature_vector(sheet.regions[0], ctx, table);
    CHECK(fa == fa2);
    MapSheet reversed = sheet;
    std::swap(reversed.regions[0], reversed.regions[1]);
    auto ctx2 = NormalizationContext::from_sheet(reversed);
    CHECK(build_feature_vector(reversed.regions[1], ctx2, table) == fa);
}
