#include <catch2/catch_amalgamated.hpp>

#include "mapmeta/linker.hpp"
#include "oracles.hpp"

using namespace mapmeta;

namespace {

TextRegion make_region(const std::string& id, const std::string& text, double x, double y,
                       double w, double h) {
    TextRegion r;
    r.id = id;
    r.text = text;
    r.polygon = {Vec2{x, y}, Vec2{x + w, y}, Vec2{x + w, y + h}, Vec2{x, y + h}};
    r.derive();
    return r;
}

// Tiny sheet with one two-word phrase and one far singleton.
MapSheet tiny_sheet() {
    MapSheet sheet;
    sheet.sheet_id = "tiny";
    sheet.image_w = 1000;
    sheet.image_h = 1000;
    sheet.regions.push_back(make_region("A", "Fall", 100, 100, 44, 16));
    sheet.regions.push_back(make_region("B", "River", 160, 100, 55, 16));
    sheet.regions.push_back(make_region("C", "Summit", 600, 700, 66, 16));
    sheet.gt_groups = {{"A", "B"}, {"C"}};
    return sheet;
}

std::vector<FeatureVector> random_features(int count, int dim, Rng& rng) {
    std::vector<FeatureVector> out(count);
    for (auto& f : out) {
        f.resize(dim);
        for (auto& x : f) x = rng_uniform(rng, -1.0, 1.0);
    }
    return out;
}

}  // namespace

TEST_CASE("bce_loss hand-evaluated values") {
    double eps = 1e-7;
    CHECK(bce_loss(std::vector<double>{1.0 - eps}, std::vector<int>{1}) ==
          Catch::Approx(0.0).margin(1e-6));
    CHECK(bce_loss(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) ==
          Catch::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bce_loss(std::vector<double>{0.9}, std::vector<int>{0}) ==
          Catch::Approx(-std::log(0.1)).epsilon(1e-9));
    CHECK_THROWS_AS(bce_loss(std::vector<double>{}, std::vector<int>{}), contract_error);
    CHECK_THROWS_AS(bce_loss(std::vector<double>{0.5}, std::vector<int>{1, 0}), contract_error);
}

TEST_CASE("triplet_loss hinge behavior") {
    using V = std::vector<double>;
    std::vector<V> a{{0.0, 0.0}}, p{{0.0, 0.0}}, n{{0.0, 0.0}};
    CHECK(triplet_loss(a, p, n, 0.2) == 0.2);  // all equal: alpha per triplet
    std::vector<V> a3(3, V{1.0, 2.0});
    CHECK(triplet_loss(a3, a3, a3, 0.4) == Catch::Approx(3 * 0.4));

    // hinge boundary: ||a-p||^2 = 0, ||a-n||^2 = alpha
    std::vector<V> n2{{std::sqrt(0.2), 0.0}};
    CHECK(triplet_loss(a, p, n2, 0.2) == Catch::Approx(0.0).margin(1e-12));

    // a=(0,0) p=(1,0) n=(3,0): [1 - 9 + 0.2]_+ = 0
    std::vector<V> a4{{0, 0}}, p4{{1, 0}}, n4{{3, 0}};
    CHECK(triplet_loss(a4, p4, n4, 0.2) == 0.0);
    // and the loss is never negative
    CHECK(triplet_loss(a4, n4, p4, 0.2) == Catch::Approx(9.0 - 1.0 + 0.2));

    std::vector<V> wrong{{1, 0}, {2, 0}};
    CHECK_THROWS_AS(triplet_loss(a4, wrong, n4, 0.2), contract_error);
}

TEST_CASE("forward_pair stays in (0,1) and is deterministic") {
    LinkerConfig cfg;
    cfg.input_dim = 7;
    cfg.hidden_dim = 6;
    cfg.embed_dim = 4;
    LinkerModel model(cfg);
    Rng rng(3);
    auto feats = random_features(10, 7, rng);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            double p = model.forward_pair(feats[i], feats[j]);
            CHECK(p > 0.0);
            CHECK(p < 1.0);
            CHECK(model.forward_pair(feats[i], feats[j]) == p);
        }
    CHECK_THROWS_AS(model.forward_pair(feats[0], std::vector<double>(5, 0.0)), contract_error);
}

TEST_CASE("sample_batches on the two-group sheet") {
    MapSheet sheet = tiny_sheet();
    Rng rng(1);
    auto batch = sample_batches(sheet, rng, 1);
    // anchors A and B each give one positive and one negative (C is the
    // only possible draw)
    REQUIRE(batch.pairs.size() == 4);
    int positives = 0, negatives = 0;
    for (const auto& pr : batch.pairs) {
        if (pr.label == 1) {
            ++positives;
            CHECK(((pr.anchor == 0 && pr.other == 1) || (pr.anchor == 1 && pr.other == 0)));
        } else {
            ++negatives;
            CHECK(pr.other == 2);
        }
    }
    CHECK(positives == 2);
    CHECK(negatives == 2);
    CHECK(batch.triplets.size() == 2);
}

TEST_CASE("sample_batches is seed-deterministic and keeps the 1:k ratio") {
    MapSheet sheet = tiny_sheet();
    // widen the negative pool
    sheet.regions.push_back(make_region("D", "Oakdale", 300, 500, 70, 18));
    sheet.regions.push_back(make_region("E", "Midway", 700, 200, 60, 15));
    sheet.gt_groups = {{"A", "B"}, {"C"}, {"D"}, {"E"}};

    Rng r1(77), r2(77);
    auto b1 = sample_batches(sheet, r1, 3);
    auto b2 = sample_batches(sheet, r2, 3);
    REQUIRE(b1.pairs.size() == b2.pairs.size());
    for (size_t i = 0; i < b1.pairs.size(); ++i) {
        CHECK(b1.pairs[i].anchor == b2.pairs[i].anchor);
        CHECK(b1.pairs[i].other == b2.pairs[i].other);
        CHECK(b1.pairs[i].label == b2.pairs[i].label);
    }

    int pos = 0, neg = 0;
    for (const auto& pr : b1.pairs) (pr.label ? pos : neg)++;
    CHECK(neg == 3 * pos);  // exactly 1:k

    MapSheet untrainable;
    untrainable.sheet_id = "u";
    untrainable.image_w = untrainable.image_h = 100;
    untrainable.regions.push_back(make_region("X", "Lone", 0, 0, 30, 10));
    untrainable.gt_groups = {{"X"}};
    Rng r3(1);
    CHECK_THROWS_AS(sample_batches(untrainable, r3, 1), validation_error);
}

TEST_CASE("analytic gradients match central finite differences") {
    // three random configurations, relative error <= 1e-4
    for (uint64_t seed : {11ULL, 22ULL, 33ULL}) {
        LinkerConfig cfg;
        cfg.input_dim = 9;
        cfg.hidden_dim = 7;
        cfg.embed_dim = 5;
        cfg.margin = 0.3;
        cfg.lambda = 0.7;
        cfg.seed = seed;
        LinkerModel model(cfg);

        Rng rng(seed * 131);
        auto feats = random_features(6, cfg.input_dim, rng);
        SheetBatch batch;
        batch.pairs = {{0, 1, 1}, {0, 2, 0}, {3, 4, 1}, {3, 5, 0}, {1, 5, 0}};
        batch.triplets = {{0, 1, 2}, {3, 4, 5}, {1, 0, 5}};

        LinkerGradients grads(model);
        LinkerTrainer::batch_loss(model, feats, batch, &grads);
        auto analytic = grads.flat();

        LinkerModel probe = model;
        auto loss_at = [&](const std::vector<double>& params) {
            probe.set_parameters(params);
            return LinkerTrainer::batch_loss(probe, feats, batch, nullptr);
        };
        auto numeric = oracles::finite_difference_gradient(loss_at, model.parameters());

        REQUIRE(analytic.size() == numeric.size());
        double worst = 0.0;
        for (size_t i = 0; i < analytic.size(); ++i) {
            double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
            worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("train with zero learning rate changes nothing") {
    MapSheet sheet = tiny_sheet();
    EmbeddingTable table(2, OovPolicy::kZeros);
    table.insert("fall", {0.3, 0.1});
    table.insert("river", {0.2, 0.4});
    table.insert("summit", {-0.5, 0.2});

    LinkerConfig cfg;
    cfg.input_dim = 7;
    cfg.hidden_dim = 5;
    cfg.embed_dim = 3;
    cfg.learning_rate = 0.0;
    cfg.epochs = 5;
    cfg.seed = 9;
    LinkerModel model(cfg);
    auto before = model.parameters();

    std::vector<TrainingSheet> sheets;
    sheets.push_back({sheet, build_sheet_features(sheet, table)});
    auto history = LinkerTrainer::train(model, sheets);

    CHECK(model.parameters() == before);
    REQUIRE(history.size() == 5);
    for (double l : history) CHECK(l == history[0]);
}

TEST_CASE("training separates a small two-group problem") {
    // one sheet, two separable phrases, 200 epochs -> final BCE < 0.1
    MapSheet sheet;
    sheet.sheet_id = "sep";
    sheet.image_w = 1000;
    sheet.image_h = 1000;
    sheet.regions.push_back(make_region("A", "Fall", 100, 100, 44, 16));
    sheet.regions.push_back(make_region("B", "River", 160, 100, 55, 16));
    sheet.regions.push_back(make_region("C", "Black", 600, 700, 55, 16));
    sheet.regions.push_back(make_region("D", "Crater", 670, 700, 66, 16));
    sheet.gt_groups = {{"A", "B"}, {"C", "D"}};

    EmbeddingTable table(2, OovPolicy::kHashedUnit);
    LinkerConfig cfg;
    cfg.input_dim = 7;
    cfg.hidden_dim = 16;
    cfg.embed_dim = 8;
    cfg.epochs = 200;
    cfg.learning_rate = 0.05;
    cfg.seed = 5;
    LinkerModel model(cfg);

    std::vector<TrainingSheet> sheets;
    sheets.push_back({sheet, build_sheet_features(sheet, table)});
    auto history = LinkerTrainer::train(model, sheets);
    REQUIRE(history.size() == 200);

    // measure the classification part alone on the training pairs
    Rng rng(cfg.seed);
    auto batch = sample_batches(sheet, rng, cfg.negatives_per_anchor);
    batch.triplets.clear();
    double bce = LinkerTrainer::batch_loss(model, sheets[0].features, batch, nullptr);
    CHECK(bce < 0.1);
}

TEST_CASE("seed determinism: identical runs produce identical histories") {
    MapSheet sheet = tiny_sheet();
    EmbeddingTable table(3, OovPolicy::kHashedUnit);
    LinkerConfig cfg;
    cfg.input_dim = 8;
    cfg.hidden_dim = 6;
    cfg.embed_dim = 4;
    cfg.epochs = 20;
    cfg.seed = 1234;

    auto run = [&]() {
        LinkerModel model(cfg);
        std::vector<TrainingSheet> sheets;
        sheets.push_back({sheet, build_sheet_features(sheet, table)});
        auto history = LinkerTrainer::train(model, sheets);
        return std::make_pair(history, model.parameters());
    };
    auto [h1, p1] = run();
    auto [h2, p2] = run();
    CHECK(h1 == h2);  // bitwise
    CHECK(p1 == p2);
}

TEST_CASE("retrieve_candidates thresholds") {
    LinkerConfig cfg;
    cfg.input_dim = 6;
    cfg.hidden_dim = 4;
    cfg.embed_dim = 3;
    LinkerModel model(cfg);
    Rng rng(8);
    auto feats = random_features(5, 6, rng);

    // force the head toward 1 for every pair: zero weights, huge bias
    auto params = model.parameters();
    for (auto& p : params) p = 0.0;
    params.back() = 50.0;
    model.set_parameters(params);
    CHECK(retrieve_candidates(model, feats, 0, 0.5) == std::vector<int>{1, 2, 3, 4});
    // probabilities never exceed 1, so tau = 1 empties the set
    CHECK(retrieve_candidates(model, feats, 0, 1.0).empty());

    CHECK_THROWS_AS(retrieve_candidates(model, feats, 17, 0.5), contract_error);
}

TEST_CASE("checkpoint round-trip is exact") {
    LinkerConfig cfg;
    cfg.input_dim = 12;
    cfg.hidden_dim = 10;
    cfg.embed_dim = 6;
    cfg.margin = 0.35;
    cfg.lambda = 0.8;
    cfg.learning_rate = 0.0125;
    cfg.epochs = 42;
    cfg.batch_size = 17;
    cfg.negatives_per_anchor = 5;
    cfg.seed = 0xDEADBEEFULL;
    cfg.tau_text = 0.61;
    LinkerModel model(cfg);

    auto blob = serialize_checkpoint(model);
    LinkerModel back = deserialize_checkpoint(blob);
    CHECK(back.parameters() == model.parameters());
    CHECK(back.config().margin == cfg.margin);
    CHECK(back.config().seed == cfg.seed);
    CHECK(back.config().tau_text == cfg.tau_text);
    CHECK(back.config().batch_size == cfg.batch_size);

    CHECK_THROWS_AS(deserialize_checkpoint("JUNK"), parse_error);
    auto truncated = blob.substr(0, blob.size() - 3);
    CHECK_THROWS_AS(deserialize_checkpoint(truncated), parse_error);
    auto padded = blob + "x";
    CHECK_THROWS_AS(deserialize_checkpoint(padded), parse_error);
}
