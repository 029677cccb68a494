#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "semnbv/grid.hpp"
#include "semnbv/raycast.hpp"

using namespace semnbv;

namespace {

MapParams cube_params(double extent, double res = 0.4)
{
    MapParams p;
    p.resolution = res;
    p.bounds = {Vec3::Zero(), Vec3::Constant(extent)};
    return p;
}

} // namespace

TEST(Grid, KeyOfLowerCornerIsOrigin)
{
    const auto p = cube_params(4.0);
    EXPECT_EQ(key_of(p.bounds.min, p), (VoxelKey{0, 0, 0}));
}

TEST(Grid, KeyOfFloorsPerAxis)
{
    const auto p = cube_params(4.0);
    EXPECT_EQ(key_of(Vec3(0.39, 0.0, 0.8), p), (VoxelKey{0, 0, 2}));
}

TEST(Grid, KeyOfUpperCornerIsOutOfBounds)
{
    const auto p = cube_params(4.0);
    EXPECT_THROW(key_of(p.bounds.max, p), OutOfBoundsError);
    EXPECT_THROW(key_of(Vec3(-0.01, 1, 1), p), OutOfBoundsError);
    EXPECT_FALSE(try_key_of(p.bounds.max, p).has_value());
}

TEST(Grid, CenterOf)
{
    const auto p = cube_params(4.0);
    EXPECT_TRUE(center_of({0, 0, 0}, p).isApprox(Vec3(0.2, 0.2, 0.2)));
    EXPECT_TRUE(center_of({2, 0, 0}, p).isApprox(Vec3(1.0, 0.2, 0.2)));
}

TEST(Grid, CenterRoundTrip)
{
    MapParams p;
    p.bounds = {Vec3(-3.1, 0.7, -1.0), Vec3(5.0, 9.3, 2.2)};
    const auto dims = grid_dims(p);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const VoxelKey k{static_cast<std::uint32_t>(rng() % dims[0]), static_cast<std::uint32_t>(rng() % dims[1]),
                         static_cast<std::uint32_t>(rng() % dims[2])};
        if (!p.bounds.contains(center_of(k, p))) continue;   // partial cell at the upper face
        EXPECT_EQ(key_of(center_of(k, p), p), k);
    }
    // the last x cell only partly overlaps the bounds; points inside it still map to it
    const VoxelKey edge{dims[0] - 1, 0, 0};
    EXPECT_FALSE(try_key_of(center_of(edge, p), p).has_value());
    EXPECT_EQ(key_of(Vec3(4.99, 0.8, -0.9), p), edge);
}

TEST(Grid, DimsAreCeilOfExtent)
{
    MapParams p;
    p.bounds = {Vec3::Zero(), Vec3(10.0, 6.0, 3.0)};
    const auto d = grid_dims(p);
    EXPECT_EQ(d[0], 25u);
    EXPECT_EQ(d[1], 15u);
    EXPECT_EQ(d[2], 8u);   // 7.5 rounds up
}

TEST(Grid, LinearIndexRoundTrip)
{
    const std::array<std::uint32_t, 3> dims{5, 7, 3};
    for (std::size_t i = 0; i < cell_count(dims); ++i) EXPECT_EQ(linear_index(key_from_linear(i, dims), dims), i);
}

TEST(Grid, ParamsValidation)
{
    MapParams p;
    p.resolution = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
    p = MapParams{};
    p.bounds = {Vec3::Zero(), Vec3(1, 0, 1)};
    EXPECT_THROW(p.validate(), ConfigError);
    p = MapParams{};
    p.log_odds_min = 0.5;
    EXPECT_THROW(p.validate(), ConfigError);
    p = MapParams{};
    p.p_free = 0.5;
    EXPECT_THROW(p.validate(), ConfigError);
    p = MapParams{};
    EXPECT_NO_THROW(p.validate());
}

TEST(Raycast, AxisAlignedRay)
{
    const auto p = cube_params(4.0);
    const auto keys = raycast_traverse(Vec3(0.2, 0.2, 0.2), Vec3(1.4, 0.2, 0.2), p);
    const std::vector<VoxelKey> expected{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    EXPECT_EQ(keys, expected);
}

TEST(Raycast, ZeroLengthIsEmpty)
{
    const auto p = cube_params(4.0);
    EXPECT_TRUE(raycast_traverse(Vec3(1, 1, 1), Vec3(1, 1, 1), p).empty());
}

TEST(Raycast, NegativeDirection)
{
    const auto p = cube_params(4.0);
    const auto keys = raycast_traverse(Vec3(1.4, 0.2, 0.2), Vec3(0.2, 0.2, 0.2), p);
    const std::vector<VoxelKey> expected{{3, 0, 0}, {2, 0, 0}, {1, 0, 0}};
    EXPECT_EQ(keys, expected);
}

TEST(Raycast, SegmentLeavingBoundsIsClipped)
{
    const auto p = cube_params(2.0);
    const auto keys = raycast_traverse(Vec3(1.0, 0.2, 0.2), Vec3(5.0, 0.2, 0.2), p);
    const std::vector<VoxelKey> expected{{2, 0, 0}, {3, 0, 0}, {4, 0, 0}};
    EXPECT_EQ(keys, expected);
    EXPECT_TRUE(raycast_traverse(Vec3(-5, -5, -5), Vec3(-1, -1, -1), p).empty());
}

TEST(Raycast, ClipSegment)
{
    const Box3 box{Vec3::Zero(), Vec3::Ones()};
    const auto c = clip_segment(Vec3(-1, 0.5, 0.5), Vec3(3, 0.5, 0.5), box);
    ASSERT_TRUE(c);
    EXPECT_NEAR(c->first, 0.25, 1e-15);
    EXPECT_NEAR(c->second, 0.5, 1e-15);
    EXPECT_FALSE(clip_segment(Vec3(-1, 2, 0.5), Vec3(3, 2, 0.5), box));
}

TEST(Raycast, EachCellOnceAndFaceConnected)
{
    const auto p = cube_params(6.0, 0.3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (int i = 0; i < 300; ++i) {
        const Vec3 a(u(rng), u(rng), u(rng));
        const Vec3 b(u(rng), u(rng), u(rng));
        std::vector<VoxelKey> keys;
        march_segment(p, a, b, [&](const VoxelKey& k) {
            keys.push_back(k);
            return true;
        });
        const std::set<VoxelKey> unique(keys.begin(), keys.end());
        EXPECT_EQ(unique.size(), keys.size());
        ASSERT_FALSE(keys.empty());
        EXPECT_EQ(keys.front(), key_of(a, p));
        EXPECT_EQ(keys.back(), key_of(b, p));
        for (std::size_t j = 1; j < keys.size(); ++j) {
            const int manhattan = std::abs(int(keys[j].ix) - int(keys[j - 1].ix)) +
                                  std::abs(int(keys[j].iy) - int(keys[j - 1].iy)) +
                                  std::abs(int(keys[j].iz) - int(keys[j - 1].iz));
            EXPECT_EQ(manhattan, 1);
        }
    }
}

TEST(Raycast, SupersetOfDenseSamplingAndSound)
{
    const auto p = cube_params(64 * 0.4);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 64 * 0.4);
    for (int i = 0; i < 200; ++i) {
        const Vec3 a(u(rng), u(rng), u(rng));
        const Vec3 b(u(rng), u(rng), u(rng));
        const auto keys = raycast_traverse(a, b, p);
        std::set<VoxelKey> got(keys.begin(), keys.end());
        got.insert(key_of(b, p));   // traversal excludes the endpoint voxel
        for (const auto& k : oracle::dense_sample_keys(a, b, p, p.resolution / 10.0)) EXPECT_TRUE(got.count(k));
        for (const auto& k : keys) {
            EXPECT_TRUE(oracle::segment_hits_voxel(a, b, k, p));
            EXPECT_LE(oracle::point_segment_distance(center_of(k, p), a, b), p.resolution * std::sqrt(3.0) / 2 + 1e-9);
        }
    }
}

TEST(Raycast, EarlyStop)
{
    const auto p = cube_params(4.0);
    int n = 0;
    march_segment(p, Vec3(0.2, 0.2, 0.2), Vec3(3.8, 0.2, 0.2), [&](const VoxelKey&) { return ++n < 3; });
    EXPECT_EQ(n, 3);
}
