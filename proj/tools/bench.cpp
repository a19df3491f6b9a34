// Kernel benchmark: OpenMP paths against their serial reference twins.
// Also sanity-checks that both produce identical outputs on the bench inputs.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "persense/core.hpp"
#include "persense/idm.hpp"
#include "persense/reference.hpp"
#include "persense/stats.hpp"
#include "persense/synth.hpp"

using namespace persense;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-22s serial %8.2f ms   omp %8.2f ms   speedup %5.2fx   %s\n", name.c_str(),
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                equal ? "outputs equal" : "OUTPUTS DIFFER");
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());

    const int size = 1024;
    rng::SplitMix gen(42);
    ScalarGrid dm(size, size, 0.0);
    for (auto& v : dm.values()) v = gen.next_double();

    std::vector<PixelPoint> centers;
    std::vector<double> masses;
    for (int i = 0; i < 600; ++i) {
        centers.push_back({gen.next_int(16, size - 17), gen.next_int(16, size - 17)});
        masses.push_back(0.8 + 0.4 * gen.next_double());
    }
    const ScalarGrid blobs = synth::render_blobs(size, size, centers, masses, 3.0);
    const GrayGrid gray = normalize_to_gray(blobs);
    const BinaryGrid binary = idm::binarize(gray, 20);

    {
        GrayGrid a(1, 1), b(1, 1);
        const double s = time_ms([&] { a = reference::normalize_to_gray(dm); }, 5);
        const double p = time_ms([&] { b = normalize_to_gray(dm); }, 5);
        report("normalize_to_gray", s, p, a == b);
    }
    {
        BinaryGrid a(1, 1), b(1, 1);
        const double s = time_ms([&] { a = reference::erode3x3(binary); }, 5);
        const double p = time_ms([&] { b = idm::erode3x3(binary); }, 5);
        report("erode3x3", s, p, a == b);
    }
    {
        std::vector<idm::CandidatePoint> a, b;
        const double s = time_ms([&] { a = reference::detect_peaks(gray, 1.0, 3); }, 3);
        const double p = time_ms([&] { b = idm::detect_peaks(gray, 1.0, 3); }, 3);
        bool equal = a.size() == b.size();
        for (size_t i = 0; equal && i < a.size(); ++i) equal = a[i].point == b[i].point;
        report("detect_peaks", s, p, equal);
    }
    {
        ScalarGrid a(1, 1), b(1, 1);
        const double s = time_ms(
            [&] { a = reference::render_blobs(size, size, centers, masses, 3.0); }, 3);
        const double p =
            time_ms([&] { b = synth::render_blobs(size, size, centers, masses, 3.0); }, 3);
        report("render_blobs", s, p, a == b);
    }
    {
        // One big component to stress the boundary-min scan.
        BinaryGrid block(size, size, 0);
        for (int y = 100; y < 400; ++y)
            for (int x = 100; x < 400; ++x) block.at(x, y) = 1;
        const auto contours = idm::extract_contours(block);
        ScalarGrid a(1, 1), b(1, 1);
        const double s =
            time_ms([&] { a = reference::distance_transform(block, contours[0]); }, 1);
        const double p = time_ms([&] { b = idm::distance_transform(block, contours[0]); }, 1);
        report("distance_transform", s, p, a == b);
    }
    {
        const BinaryGrid other = idm::erode3x3(binary);
        double a = 0.0, b = 0.0;
        const double s = time_ms([&] { a = reference::iou(binary, other); }, 10);
        const double p = time_ms([&] { b = iou(binary, other); }, 10);
        report("iou", s, p, a == b);
    }
    return 0;
}
