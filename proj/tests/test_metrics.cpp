#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "escape/codec.hpp"
#include "escape/errors.hpp"
#include "escape/metrics.hpp"
#include "support/synthetic.hpp"

using namespace escape;

namespace {

PointCloud single(const Vec3& p) {
    PointCloud cloud;
    cloud.points = {p};
    return cloud;
}

}  // namespace

TEST_CASE("chamfer_l1 hand cases") {
    const PointCloud a = testing::random_cloud(50, 3);
    CHECK(chamfer_l1(a, a) == 0.0);
    CHECK(chamfer_l1(single(Vec3(0, 0, 0)), single(Vec3(1, 0, 0))) == 2000.0);
}

TEST_CASE("chamfer_l2 hand cases") {
    const PointCloud a = testing::random_cloud(30, 5);
    CHECK(chamfer_l2(a, a) == 0.0);
    CHECK(chamfer_l2(single(Vec3(0, 0, 0)), single(Vec3(1, 0, 0))) == 2000.0);
    CHECK(chamfer_l2(a, testing::random_cloud(30, 6)) >= 0.0);
}

TEST_CASE("chamfer metrics are symmetric") {
    const PointCloud a = testing::random_cloud(40, 7);
    const PointCloud b = testing::random_cloud(25, 8);
    CHECK(chamfer_l1(a, b) == chamfer_l1(b, a));
    CHECK(chamfer_l2(a, b) == chamfer_l2(b, a));
}

TEST_CASE("chamfer_l1 is zero only for equal multisets") {
    PointCloud a = testing::random_cloud(20, 9);
    PointCloud b = a;
    std::reverse(b.points.begin(), b.points.end());  // multiset unchanged
    CHECK(chamfer_l1(a, b) == 0.0);

    b.points[3] += Vec3(1e-6, 0, 0);
    CHECK(chamfer_l1(a, b) > 0.0);
}

TEST_CASE("chamfer metrics reject empty clouds") {
    PointCloud empty;
    const PointCloud a = testing::random_cloud(5, 2);
    CHECK_THROWS_AS(chamfer_l1(empty, a), EmptyCloud);
    CHECK_THROWS_AS(chamfer_l2(a, empty), EmptyCloud);
    CHECK_THROWS_AS(fidelity(empty, a), EmptyCloud);
}

TEST_CASE("chamfer metrics are rigid-motion invariant") {
    const PointCloud a = testing::random_cloud(60, 11);
    const PointCloud b = testing::random_cloud(45, 12);
    RigidTransform t = random_rotation(4);
    t.translation = Vec3(2, -1, 3);
    const double before = chamfer_l1(a, b);
    const double after = chamfer_l1(apply_rigid(a, t), apply_rigid(b, t));
    CHECK(std::abs(before - after) <= 1e-9 * std::max(1.0, before));

    const double before2 = chamfer_l2(a, b);
    const double after2 = chamfer_l2(apply_rigid(a, t), apply_rigid(b, t));
    CHECK(std::abs(before2 - after2) <= 1e-9 * std::max(1.0, before2));
}

TEST_CASE("fidelity hand cases and asymmetry") {
    CHECK(fidelity(single(Vec3(0, 0, 0)), single(Vec3(1, 0, 0))) == 1000.0);

    PointCloud input = testing::random_cloud(20, 14);
    PointCloud output = input;
    output.points.push_back(Vec3(5, 5, 5));  // superset of the input
    CHECK(fidelity(input, output) == 0.0);
    CHECK(fidelity(output, input) > 0.0);
}

TEST_CASE("pca canonicalization is a fixed point on a canonical box") {
    // tensor-product grid: cross-covariances vanish exactly, per-axis node
    // sets have a long positive tail so every skewness is positive
    const std::vector<double> xs{0, 1, 2, 10}, ys{0, 0.5, 1, 4}, zs{0, 0.2, 0.4, 1.5};
    PointCloud box;
    for (double x : xs)
        for (double y : ys)
            for (double z : zs) box.points.emplace_back(x, y, z);
    PointCloud centered = box;
    const Vec3 c = box.centroid();
    for (Vec3& p : centered.points) p -= c;

    const PcaCanonical result = pca_canonicalize(centered);
    CHECK(result.stable);
    CHECK((result.transform.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(result.transform.translation.norm() < 1e-12);
}

TEST_CASE("pca canonicalization undoes a rigid motion") {
    PointCloud box;
    Rng rng(37);
    for (int i = 0; i < 300; ++i) {
        const double x = std::pow(rng.uniform(), 2.0) * 3.0;
        const double y = std::pow(rng.uniform(), 2.0) * 1.5;
        const double z = std::pow(rng.uniform(), 2.0) * 0.5;
        box.points.emplace_back(x, y, z);
    }
    const PcaCanonical base = pca_canonicalize(box);
    REQUIRE(base.stable);

    RigidTransform t = random_rotation(8);
    t.translation = Vec3(1, 2, 3);
    const PcaCanonical moved = pca_canonicalize(apply_rigid(box, t));

    for (std::size_t i = 0; i < box.size(); ++i)
        CHECK((moved.cloud.points[i] - base.cloud.points[i]).norm() < 1e-6);
}

TEST_CASE("pca canonicalization always returns a proper rotation") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const PointCloud cloud = testing::random_cloud(50, seed);
        const PcaCanonical result = pca_canonicalize(cloud);
        CHECK(result.transform.is_valid(1e-9));
    }
}

TEST_CASE("pca canonicalization flags degenerate spectra") {
    const PointCloud sphere = testing::sphere_cloud(2000, 3, false);
    const PcaCanonical result = pca_canonicalize(sphere);
    CHECK(!result.stable);

    PointCloud line;
    for (int i = 0; i < 10; ++i) line.points.emplace_back(i * 0.1, 0, 0);
    CHECK_THROWS_AS(pca_canonicalize(line), DegenerateConfiguration);
}

TEST_CASE("gaussian noise has the requested scale") {
    const PointCloud cloud = testing::random_cloud(2048, 5);
    const double sigma = 0.002;
    const PointCloud noisy = add_gaussian_noise(cloud, sigma, 99);

    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 d = noisy.points[i] - cloud.points[i];
        sq += d.squaredNorm();
        count += 3;
    }
    const double sample_std = std::sqrt(sq / count);
    CHECK(sample_std > 0.95 * sigma);
    CHECK(sample_std < 1.05 * sigma);
}

TEST_CASE("gaussian noise is seeded and sigma-coherent") {
    const PointCloud cloud = testing::random_cloud(64, 6);
    const PointCloud a = add_gaussian_noise(cloud, 0.01, 7);
    const PointCloud b = add_gaussian_noise(cloud, 0.01, 7);
    for (std::size_t i = 0; i < cloud.size(); ++i)
        CHECK((a.points[i].array() == b.points[i].array()).all());

    CHECK(add_gaussian_noise(cloud, 0.0, 7).points == cloud.points);

    // one seed draws one unit perturbation; sigma only scales it
    const PointCloud s1 = add_gaussian_noise(cloud, 0.001, 7);
    const PointCloud s2 = add_gaussian_noise(cloud, 0.002, 7);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3 d1 = s1.points[i] - cloud.points[i];
        const Vec3 d2 = s2.points[i] - cloud.points[i];
        CHECK((d2 - 2.0 * d1).norm() < 1e-15);
    }
}

TEST_CASE("noise never breaks the encoding error bound") {
    const PointCloud cloud = testing::random_cloud(128, 8);
    const AnchorSet anchors = select_anchors(cloud, 8, AnchorStrategy::fps);
    const DistanceMatrix base = encode(cloud, anchors);
    for (double sigma : {0.001, 0.002, 0.004}) {
        const PointCloud noisy = add_gaussian_noise(cloud, sigma, 13);
        double max_eps = 0.0;
        for (std::size_t i = 0; i < cloud.size(); ++i)
            max_eps = std::max(max_eps, (noisy.points[i] - cloud.points[i]).norm());
        const DistanceMatrix moved = encode(noisy, anchors);
        for (std::size_t i = 0; i < base.values.size(); ++i)
            CHECK(std::abs(moved.values[i] - base.values[i]) <= max_eps + 1e-12);
    }
}

TEST_CASE("remove_points keeps the right count and order") {
    const PointCloud cloud = testing::random_cloud(2048, 9);
    CHECK(remove_points(cloud, 0.0, 3).points == cloud.points);

    const PointCloud half = remove_points(cloud, 0.5, 3);
    CHECK(half.size() == 1024);

    // kept points appear in their original relative order
    std::size_t cursor = 0;
    for (const Vec3& p : half.points) {
        while (cursor < cloud.size() && cloud.points[cursor] != p) ++cursor;
        CHECK(cursor < cloud.size());
        ++cursor;
    }
}

TEST_CASE("remove_points is a partition") {
    const PointCloud cloud = testing::random_cloud(100, 10);
    const PointCloud kept = remove_points(cloud, 0.25, 5);
    CHECK(kept.size() == 75);
    // every kept point is an input point; counting occurrences covers duplicates
    std::size_t matched = 0;
    for (const Vec3& p : kept.points)
        for (const Vec3& q : cloud.points)
            if ((p.array() == q.array()).all()) {
                ++matched;
                break;
            }
    CHECK(matched == kept.size());
}

TEST_CASE("remove_points rejects out-of-range ratios") {
    const PointCloud cloud = testing::random_cloud(10, 2);
    CHECK_THROWS_AS(remove_points(cloud, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(remove_points(cloud, -0.1, 1), ConfigError);
}

TEST_CASE("equivariance report flags clean trials under the tolerance") {
    const PointCloud cloud = testing::random_cloud(100, 20);
    CompletionConfig config;
    config.k = 8;
    config.n_in = 64;
    config.m_out = 64;
    const auto reports = equivariance_report(cloud, config, 4, 17);
    REQUIRE(reports.size() == 12);  // three metrics per trial
    for (const EvalReport& r : reports) {
        if (!r.margin_ok) continue;
        if (r.metric == "equivariance_max_deviation") CHECK(r.value < 1e-6);
        if (r.metric == "anchor_index_agreement") CHECK(r.value == 1.0);
        if (r.metric == "encode_max_deviation") CHECK(r.value < 1e-9);
    }
}

TEST_CASE("equivariance report flags symmetric anchor ties") {
    // cube corners: every FPS argmax after the first is a tie, margin 0
    PointCloud cube;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z) cube.points.emplace_back(x, y, z);
    CompletionConfig config;
    config.k = 4;
    config.n_in = 8;
    config.m_out = 8;
    const auto reports = equivariance_report(cube, config, 2, 3);
    REQUIRE(!reports.empty());
    for (const EvalReport& r : reports) CHECK(!r.margin_ok);
}

TEST_CASE("equivariance report with zero trials is empty") {
    CompletionConfig config;
    config.n_in = 16;
    config.m_out = 16;
    CHECK(equivariance_report(testing::random_cloud(20, 1), config, 0, 1).empty());
}

TEST_CASE("report writers emit the documented schemas") {
    EvalReport r;
    r.metric = "cdl1";
    r.value = 1.5;
    r.convention = "CD-L1 x1000";
    r.config = "k=8";
    r.seed = 42;
    r.trial = 0;

    std::ostringstream kv;
    write_reports_kv(kv, {r});
    CHECK(kv.str().find("metric=cdl1") != std::string::npos);
    CHECK(kv.str().find("value=1.5") != std::string::npos);

    std::ostringstream csv;
    write_reports_csv(csv, {r});
    CHECK(csv.str().rfind("trial,metric,value,convention,seed,margin_ok,config\n", 0) == 0);
    CHECK(csv.str().find("0,cdl1,1.5") != std::string::npos);
}
