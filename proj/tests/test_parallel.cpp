// The OpenMP kernels must match their serial references bit for bit,
// independent of thread count.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include "persense/core.hpp"
#include "persense/idm.hpp"
#include "persense/reference.hpp"
#include "persense/stats.hpp"
#include "persense/synth.hpp"

using namespace persense;

namespace {

ScalarGrid random_field(int w, int h, rng::SplitMix& gen) {
    ScalarGrid g(w, h, 0.0);
    for (auto& v : g.values()) v = gen.next_range(-3.0, 7.0);
    return g;
}

}  // namespace

TEST_CASE("normalize_to_gray: omp == serial") {
    rng::SplitMix gen(1);
    for (int trial = 0; trial < 10; ++trial) {
        const ScalarGrid g = random_field(gen.next_int(1, 200), gen.next_int(1, 200), gen);
        CHECK(normalize_to_gray(g) == reference::normalize_to_gray(g));
    }
}

TEST_CASE("erode3x3 and iou: omp == serial") {
    rng::SplitMix gen(2);
    for (int trial = 0; trial < 10; ++trial) {
        BinaryGrid a(gen.next_int(1, 120), gen.next_int(1, 120), 0);
        for (auto& v : a.values()) v = gen.next_double() < 0.5;
        CHECK(idm::erode3x3(a) == reference::erode3x3(a));
        BinaryGrid b(a.width(), a.height(), 0);
        for (auto& v : b.values()) v = gen.next_double() < 0.5;
        CHECK(iou(a, b) == reference::iou(a, b));
    }
}

TEST_CASE("distance_transform: omp == serial on all contours") {
    rng::SplitMix gen(3);
    for (int trial = 0; trial < 8; ++trial) {
        BinaryGrid mask(gen.next_int(8, 64), gen.next_int(8, 64), 0);
        for (auto& v : mask.values()) v = gen.next_double() < 0.6;
        for (const auto& region : idm::extract_contours(mask)) {
            const ScalarGrid par = idm::distance_transform(mask, region);
            const ScalarGrid ser = reference::distance_transform(mask, region);
            CHECK(par == ser);
        }
    }
}

TEST_CASE("detect_peaks: omp == serial") {
    rng::SplitMix gen(4);
    for (int trial = 0; trial < 6; ++trial) {
        const GrayGrid gray = normalize_to_gray(random_field(96, 96, gen));
        const auto par = idm::detect_peaks(gray, 0.8, 2);
        const auto ser = reference::detect_peaks(gray, 0.8, 2);
        REQUIRE(par.size() == ser.size());
        for (size_t i = 0; i < par.size(); ++i) CHECK(par[i].point == ser[i].point);
    }
}

TEST_CASE("render_blobs: omp == serial, any thread count") {
    rng::SplitMix gen(5);
    std::vector<PixelPoint> centers;
    std::vector<double> masses;
    for (int i = 0; i < 80; ++i) {
        centers.push_back({gen.next_int(8, 183), gen.next_int(8, 183)});
        masses.push_back(gen.next_range(0.5, 1.5));
    }
    const ScalarGrid ser = reference::render_blobs(192, 192, centers, masses, 2.5);
    const int saved = omp_get_max_threads();
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        CHECK(synth::render_blobs(192, 192, centers, masses, 2.5) == ser);
    }
    omp_set_num_threads(saved);
}
