#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "persense/core.hpp"
#include "persense/imrm.hpp"
#include "persense/stats.hpp"
#include "oracles.hpp"

using namespace persense;
using namespace persense::imrm;

namespace {

InstanceMask square_mask(int grid, int x0, int y0, int side, double quality = 0.9) {
    BinaryGrid m(grid, grid, 0);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) m.at(x, y) = 1;
    return make_instance_mask(std::move(m), quality);
}

}  // namespace

TEST_CASE("area_stats on the outlier example") {
    const auto s = area_stats({4, 4, 4, 4, 4, 400});
    CHECK(s.q1 == doctest::Approx(4.0));
    CHECK(s.q3 == doctest::Approx(4.0));
    CHECK(s.iqr == doctest::Approx(0.0));
    CHECK(s.t_iqr == doctest::Approx(4.0));
    CHECK(s.mu_maj == doctest::Approx(4.0));
    CHECK(s.sigma_maj == doctest::Approx(0.0));
    CHECK(s.t_final == doctest::Approx(8.0));
}

TEST_CASE("area_stats degenerate equal areas") {
    const auto s = area_stats({7.0, 7.0, 7.0});
    CHECK(s.t_final == doctest::Approx(14.0));  // both terms equal the area
    CHECK_THROWS_AS(area_stats({5.0}), std::invalid_argument);
}

TEST_CASE("area_stats cross-checked against percentile/cluster oracle on 1..20") {
    std::vector<double> areas;
    for (int i = 1; i <= 20; ++i) areas.push_back(i);
    const auto s = area_stats(areas);
    CHECK(s.q1 == doctest::Approx(oracles::percentile(areas, 25.0)).epsilon(1e-12));
    CHECK(s.q3 == doctest::Approx(oracles::percentile(areas, 75.0)).epsilon(1e-12));
    CHECK(s.t_iqr == doctest::Approx(s.q3 + 2.0 * (s.q3 - s.q1)).epsilon(1e-12));

    // 2-means from (min,max) on 1..20 converges to {1..10} vs {11..20};
    // the size tie picks the smaller-mean cluster.
    std::vector<double> majority;
    for (int i = 1; i <= 10; ++i) majority.push_back(i);
    CHECK(s.mu_maj == doctest::Approx(oracles::mean(majority)).epsilon(1e-12));
    CHECK(s.sigma_maj == doctest::Approx(oracles::population_std(majority)).epsilon(1e-12));
    CHECK(s.t_final == doctest::Approx(s.mu_maj + 2.0 * s.sigma_maj + s.t_iqr).epsilon(1e-12));
}

TEST_CASE("area_stats scales homogeneously") {
    rng::SplitMix gen(13);
    std::vector<double> areas;
    for (int i = 0; i < 12; ++i) areas.push_back(gen.next_range(10.0, 200.0));
    const auto base = area_stats(areas);
    for (double scale : {2.0, 7.5, 0.25}) {
        std::vector<double> scaled = areas;
        for (auto& a : scaled) a *= scale;
        const auto s = area_stats(scaled);
        CHECK(s.q1 == doctest::Approx(base.q1 * scale).epsilon(1e-9));
        CHECK(s.q3 == doctest::Approx(base.q3 * scale).epsilon(1e-9));
        CHECK(s.t_iqr == doctest::Approx(base.t_iqr * scale).epsilon(1e-9));
        CHECK(s.mu_maj == doctest::Approx(base.mu_maj * scale).epsilon(1e-9));
        CHECK(s.t_final == doctest::Approx(base.t_final * scale).epsilon(1e-9));
    }
}

TEST_CASE("rescue_by_detection box overlap") {
    const auto mask = square_mask(64, 10, 10, 20);
    const BBox tight{10, 10, 29, 29};
    CHECK(rescue_by_detection(mask, {{tight, 0.9, "x"}}, 0.8));

    // IoU 0.79 vs threshold 0.8: stays rejected.
    // 20x20 box vs one shifted by 3 columns: inter 17*20=340, union 460.
    const BBox shifted{13, 10, 32, 29};
    CHECK(box_iou(tight, shifted) == doctest::Approx(340.0 / 460.0));
    CHECK(!rescue_by_detection(mask, {{shifted, 0.9, "x"}}, 0.8));

    CHECK(!rescue_by_detection(mask, {}, 0.8));
}

TEST_CASE("filter_masks removes the oversized background mask") {
    std::vector<InstanceMask> masks;
    for (int i = 0; i < 5; ++i) masks.push_back(square_mask(64, 2 + 6 * i, 2, 2));
    masks.push_back(square_mask(64, 30, 30, 20));  // area 400 outlier

    const auto kept = filter_masks(masks, {}, 0.8);
    CHECK(kept.size() == 5);
    for (const auto& m : kept) CHECK(m.area == 4);

    // Same, but the outlier's bbox matches a detection: rescued.
    const std::vector<Detection> dets = {{BBox{30, 30, 49, 49}, 0.9, "x"}};
    CHECK(filter_masks(masks, dets, 0.8).size() == 6);
}

TEST_CASE("filter_masks skip rule and subset/order properties") {
    const auto single = filter_masks({square_mask(32, 1, 1, 30)}, {}, 0.8);
    CHECK(single.size() == 1);

    rng::SplitMix gen(19);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<InstanceMask> masks;
        const int n = gen.next_int(2, 10);
        for (int i = 0; i < n; ++i)
            masks.push_back(square_mask(64, gen.next_int(0, 40), gen.next_int(0, 40),
                                        gen.next_int(2, 12)));
        const auto kept = filter_masks(masks, {}, 0.8);
        CHECK(kept.size() <= masks.size());
        size_t cursor = 0;
        for (const auto& m : kept) {
            bool found = false;
            while (cursor < masks.size()) {
                if (masks[cursor].area == m.area &&
                    masks[cursor].mask.values() == m.mask.values()) {
                    found = true;
                    ++cursor;
                    break;
                }
                ++cursor;
            }
            CHECK(found);
        }
    }
}

TEST_CASE("rescue only converts reject to retain") {
    std::vector<InstanceMask> masks;
    for (int i = 0; i < 6; ++i) masks.push_back(square_mask(64, 2 + 6 * i, 2, 3));
    masks.push_back(square_mask(64, 30, 30, 25));
    const auto no_dets = filter_masks(masks, {}, 0.8);
    const std::vector<Detection> dets = {{BBox{30, 30, 54, 54}, 0.9, "x"}};
    const auto with_dets = filter_masks(masks, dets, 0.8);
    CHECK(with_dets.size() >= no_dets.size());
}
