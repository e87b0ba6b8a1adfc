#include <catch2/catch_amalgamated.hpp>

#include "mapmeta/sheet.hpp"

using namespace mapmeta;

namespace {

Quad rotate_cw(const Quad& q, double deg) {
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

const Quad kHorizontalBox = {Vec2{0, 0}, Vec2{10, 0}, Vec2{10, 4}, Vec2{0, 4}};

}  // namespace

TEST_CASE("caps flag") {
    CHECK(caps_flag("SUMMIT") == 1);
    CHECK(caps_flag("Summit") == 0);
    CHECK(caps_flag("1234") == 0);
    CHECK(caps_flag("U.S.") == 1);
    CHECK(caps_flag("") == 0);
    CHECK(caps_flag("A1B2") == 1);
    // idempotent and indifferent to digits/punctuation
    for (const char* t : {"FALL", "No.4", "X-RAY", "x-ray"})
        CHECK(caps_flag(t) == caps_flag(std::string(t) + "1."));
}

TEST_CASE("derive_geometry axis-aligned conventions") {
    BoxGeometry g = derive_geometry(kHorizontalBox);
    CHECK(g.center.x == Catch::Approx(5.0));
    CHECK(g.center.y == Catch::Approx(2.0));
    CHECK(g.width == Catch::Approx(10.0));
    CHECK(g.height == Catch::Approx(4.0));
    CHECK(g.angle == Catch::Approx(90.0));

    BoxGeometry v = derive_geometry(rotate_cw(kHorizontalBox, 90.0));
    CHECK(v.width == Catch::Approx(10.0));
    CHECK(v.height == Catch::Approx(4.0));
    CHECK(v.angle == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("derive_geometry 30 degrees clockwise from horizontal") {
    BoxGeometry g = derive_geometry(rotate_cw(kHorizontalBox, 30.0));
    CHECK(g.angle == Catch::Approx(120.0));
    CHECK(g.width == Catch::Approx(10.0));
    CHECK(g.height == Catch::Approx(4.0));
}

TEST_CASE("derive_geometry rejects degenerate polygons") {
    Quad collinear = {Vec2{0, 0}, Vec2{5, 0}, Vec2{10, 0}, Vec2{15, 0}};
    CHECK_THROWS_AS(derive_geometry(collinear), validation_error);
}

TEST_CASE("derive_geometry is invariant under 180 degree rotation") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        double w = rng_uniform(rng, 2.0, 60.0), h = rng_uniform(rng, 1.0, 30.0);
        Quad q = {Vec2{0, 0}, Vec2{w, 0}, Vec2{w, h}, Vec2{0, h}};
        q = rotate_cw(q, rng_uniform(rng, 0.0, 360.0));
        BoxGeometry a = derive_geometry(q);
        BoxGeometry b = derive_geometry(rotate_cw(q, 180.0));
        CHECK(a.width == Catch::Approx(b.width));
        CHECK(a.height == Catch::Approx(b.height));
        double diff = std::abs(a.angle - b.angle);
        CHECK(std::min(diff, 180.0 - diff) < 1e-6);
    }
}

TEST_CASE("parse_sheet minimal well-formed input") {
    std::string text =
        "sheet usgs-1 2000 1500\n"
        "region a 80 100 120 100 120 116 80 116 Fall\n"
        "region b 280 100 320 100 320 116 280 116 River\n";
    MapSheet sheet = parse_sheet_text(text);
    REQUIRE(sheet.regions.size() == 2);
    CHECK(sheet.sheet_id == "usgs-1");
    CHECK(sheet.regions[0].id == "a");
    CHECK(sheet.regions[0].text == "Fall");
    CHECK(sheet.regions[0].center.x == Catch::Approx(100.0));
    CHECK(sheet.regions[1].center.x == Catch::Approx(300.0));
    CHECK_FALSE(sheet.gt_location.has_value());
}

TEST_CASE("parse_sheet header variants") {
    auto with_gt = parse_sheet_text(
        "sheet s 100 100 34.5 -115.5\nregion a 0 0 10 0 10 4 0 4 Word\n");
    REQUIRE(with_gt.gt_location);
    CHECK(with_gt.gt_location->lat == 34.5);
    CHECK_FALSE(with_gt.corner_min);

    auto with_all = parse_sheet_text(
        "sheet s 100 100 34.5 -115.5 34.25 -115.8 34.75 -115.2\n"
        "region a 0 0 10 0 10 4 0 4 Word\n");
    REQUIRE(with_all.corner_min);
    CHECK(with_all.corner_max->lng == -115.2);

    auto corners_only = parse_sheet_text(
        "sheet s 100 100 34.25 -115.8 34.75 -115.2\nregion a 0 0 10 0 10 4 0 4 Word\n");
    CHECK_FALSE(corners_only.gt_location);
    REQUIRE(corners_only.corner_min);
}

TEST_CASE("parse_sheet rejects duplicate ids") {
    std::string text =
        "sheet s 100 100\n"
        "region r1 0 0 10 0 10 4 0 4 One\n"
        "region r1 20 0 30 0 30 4 20 4 Two\n";
    CHECK_THROWS_AS(parse_sheet_text(text), validation_error);
}

TEST_CASE("parse_sheet rejects degenerate polygons naming the region") {
    std::string text =
        "sheet s 100 100\n"
        "region bad 0 0 5 0 10 0 15 0 Flat\n";
    try {
        parse_sheet_text(text);
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find("bad") != std::string::npos);
    }
}

TEST_CASE("parse_sheet reports malformed lines with position") {
    try {
        parse_sheet_text("sheet s 100 100\nregion a 0 0 10 0 10 4 0 4\n", "input.sheet");
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find("input.sheet:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_sheet_text("region a 0 0 10 0 10 4 0 4 X\n"), parse_error);
    CHECK_THROWS_AS(parse_sheet_text("sheet s 100 100\nbogus 1 2\n"), parse_error);
    CHECK_THROWS_AS(parse_sheet_text("sheet s 100 100\nregion a 0 0 x 0 10 4 0 4 X\n"),
                    parse_error);
}

TEST_CASE("parse_sheet group validation") {
    std::string base =
        "sheet s 100 100\n"
        "region a 0 0 10 0 10 4 0 4 Fall\n"
        "region b 20 0 30 0 30 4 20 4 River\n";
    CHECK_THROWS_AS(parse_sheet_text(base + "group a missing\n"), validation_error);
    CHECK_THROWS_AS(parse_sheet_text(base + "group a b\ngroup b\n"), validation_error);
    auto ok = parse_sheet_text(base + "group a b\n");
    REQUIRE(ok.gt_groups.size() == 1);
    CHECK(ok.gt_groups[0] == std::vector<std::string>{"a", "b"});
}

TEST_CASE("overlapping regions are accepted") {
    std::string text =
        "sheet s 100 100\n"
        "region a 0 0 20 0 20 10 0 10 One\n"
        "region b 10 0 30 0 30 10 10 10 Two\n";
    CHECK(parse_sheet_text(text).regions.size() == 2);
}

TEST_CASE("sheet emit/parse round-trips bit-exact") {
    Rng rng(4242);
    MapSheet sheet;
    sheet.sheet_id = "round-trip";
    sheet.image_w = 2000.25;
    sheet.image_h = 1500.125;
    sheet.gt_location = LatLngDeg{34.5000001, -115.4999999};
    sheet.corner_min = LatLngDeg{34.25, -115.75};
    sheet.corner_max = LatLngDeg{34.75, -115.25};
    for (int i = 0; i < 25; ++i) {
        TextRegion r;
        r.id = "r" + std::to_string(i);
        double x = rng_uniform(rng, 0, 1800), y = rng_uniform(rng, 0, 1400);
        double w = rng_uniform(rng, 5, 90), h = rng_uniform(rng, 4, 40);
        r.polygon = {Vec2{x, y}, Vec2{x + w, y}, Vec2{x + w, y + h}, Vec2{x, y + h}};
        r.text = i % 3 ? "Word" + std::to_string(i) : "Two Words";
        r.derive();
        sheet.regions.push_back(r);
    }
    sheet.gt_groups = {{"r0", "r1"}, {"r2"}, {"r3", "r4", "r5"}};

    std::string text = emit_sheet(sheet);
    MapSheet back = parse_sheet_text(text);
    REQUIRE(back.regions.size() == sheet.regions.size());
    CHECK(back.sheet_id == sheet.sheet_id);
    CHECK(back.image_w == sheet.image_w);
    CHECK(back.gt_location == sheet.gt_location);
    CHECK(back.corner_min == sheet.corner_min);
    CHECK(back.corner_max == sheet.corner_max);
    CHECK(back.gt_groups == sheet.gt_groups);
    for (size_t i = 0; i < sheet.regions.size(); ++i) {
        CHECK(back.regions[i].id == sheet.regions[i].id);
        CHECK(back.regions[i].text == sheet.regions[i].text);
        for (int c = 0; c < 4; ++c) {
            CHECK(back.regions[i].polygon[c].x == sheet.regions[i].polygon[c].x);
            CHECK(back.regions[i].polygon[c].y == sheet.regions[i].polygon[c].y);
        }
    }
    // a second emit is byte-identical
    CHECK(emit_sheet(back) == text);
}

TEST_CASE("sheet with 293 regions parses intact") {
    std::string text = "sheet usgs-scale 4000 3000\n";
    for (int i = 0; i < 293; ++i) {
        double x = (i % 20) * 190.0, y = (i / 20) * 180.0;
        text += "region w" + std::to_string(i) + " " + format_double(x) + " " + format_double(y) +
                " " + format_double(x + 60) + " " + format_double(y) + " " + format_double(x + 60) +
                " " + format_double(y + 18) + " " + format_double(x) + " " + format_double(y + 18) +
                " Word" + std::to_string(i) + "\n";
    }
    CHECK(parse_sheet_text(text).regions.size() == 293);
}
