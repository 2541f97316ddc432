#include "zakai/coupling.hpp"

#include "zakai/error.hpp"
#include "zakai/rng.hpp"
#include "zakai/spde.hpp"

#include <algorithm>
#include <cmath>

namespace zakai {

namespace {

struct Corner {
    int dl1;
    int dl2;
    double sign;
    int slot;
};

std::vector<Corner> corners_of(DifferenceKind kind, LevelPair pair) {
    if (pair.l1 < 0 || pair.l2 < 0) throw Error(ErrorKind::InvalidLevel, "negative level");
    std::vector<Corner> all;
    switch (kind) {
        case DifferenceKind::Mixed:
            all = {{0, 0, 1.0, 0}, {0, -1, -1.0, 1}, {-1, 0, -1.0, 2}, {-1, -1, 1.0, 3}};
            break;
        case DifferenceKind::Space: all = {{0, 0, 1.0, 0}, {-1, 0, -1.0, 2}}; break;
        case DifferenceKind::Time: all = {{0, 0, 1.0, 0}, {0, -1, -1.0, 1}}; break;
        case DifferenceKind::Diagonal:
            if (pair.l1 != pair.l2) throw Error(ErrorKind::InvalidLevel, "diagonal needs l1 == l2");
            all = {{0, 0, 1.0, 0}, {-1, -1, -1.0, 3}};
            break;
    }
    std::vector<Corner> out;
    for (const auto& c : all) {
        if (pair.l1 + c.dl1 >= 0 && pair.l2 + c.dl2 >= 0) out.push_back(c);
    }
    return out;
}

// step-major coarsening of `lanes` interleaved paths
std::vector<double> coarsen_lanes(std::span<const double> fine, std::size_t lanes) {
    const std::size_t steps = fine.size() / lanes;
    if (steps % 4 != 0) throw Error(ErrorKind::DomainMisaligned, "step count not divisible by 4");
    std::vector<double> out(steps / 4 * lanes);
    for (std::size_t n = 0; n < steps / 4; ++n) {
        const double* f = fine.data() + 4 * n * lanes;
        for (std::size_t p = 0; p < lanes; ++p) {
            out[n * lanes + p] = (f[p] + f[lanes + p] + f[2 * lanes + p] + f[3 * lanes + p]) / 2.0;
        }
    }
    return out;
}

std::vector<CoupledIncrement> evaluate_lanes(DifferenceKind kind, LevelPair pair,
                                             const SamplerSetup& setup,
                                             std::span<const double> fine, std::size_t lanes) {
    const auto corners = corners_of(kind, pair);
    std::vector<CoupledIncrement> out(lanes);
    std::vector<double> coarse;
    for (const auto& c : corners) {
        const auto grid =
            build_grid(setup.params, setup.base, pair.l1 + c.dl1, pair.l2 + c.dl2);
        if (c.dl2 < 0 && coarse.empty()) coarse = coarsen_lanes(fine, lanes);
        std::span<const double> normals = c.dl2 < 0 ? std::span<const double>(coarse) : fine;
        const auto values = evolve_batch(grid, setup.params, normals, lanes, setup.scheme);
        const auto losses = loss_batch(setup.functional, values, lanes, grid);
        for (std::size_t p = 0; p < lanes; ++p) {
            out[p].corners[static_cast<std::size_t>(c.slot)] = losses[p];
            out[p].cost += grid.work_units();
        }
    }
    // fixed summation order so every path of a given pair is combined identically
    for (auto& inc : out) {
        double d = 0.0;
        for (const auto& c : corners) d += c.sign * inc.corners[static_cast<std::size_t>(c.slot)];
        inc.delta = d;
    }
    return out;
}

}  // namespace

std::vector<double> coarsen_normals(std::span<const double> fine) {
    return coarsen_lanes(fine, 1);
}

BrownianPath BrownianPath::generate(std::uint64_t seed, std::size_t steps) {
    BrownianPath path;
    path.seed = seed;
    path.fine_normals.resize(steps);
    NormalStream(seed).fill(path.fine_normals);
    return path;
}

double difference_cost(DifferenceKind kind, LevelPair pair, const SamplerSetup& setup) {
    double cost = 0.0;
    for (const auto& c : corners_of(kind, pair)) {
        cost += build_grid(setup.params, setup.base, pair.l1 + c.dl1, pair.l2 + c.dl2).work_units();
    }
    return cost;
}

CoupledIncrement difference_from_normals(DifferenceKind kind, LevelPair pair,
                                         const SamplerSetup& setup,
                                         std::span<const double> fine_normals) {
    return evaluate_lanes(kind, pair, setup, fine_normals, 1).front();
}

CoupledIncrement sample_mixed_difference(LevelPair pair, const SamplerSetup& setup,
                                         std::uint64_t rng_seed) {
    const auto grid = build_grid(setup.params, setup.base, pair.l1, pair.l2);
    const auto path = BrownianPath::generate(rng_seed, static_cast<std::size_t>(grid.steps));
    return difference_from_normals(DifferenceKind::Mixed, pair, setup, path.fine_normals);
}

CoupledIncrement sample_first_difference(LevelPair pair, Direction direction,
                                         const SamplerSetup& setup, std::uint64_t rng_seed) {
    const auto grid = build_grid(setup.params, setup.base, pair.l1, pair.l2);
    const auto path = BrownianPath::generate(rng_seed, static_cast<std::size_t>(grid.steps));
    const auto kind = direction == Direction::Space ? DifferenceKind::Space : DifferenceKind::Time;
    return difference_from_normals(kind, pair, setup, path.fine_normals);
}

std::vector<CoupledIncrement> sample_batch(DifferenceKind kind, LevelPair pair,
                                           const SamplerSetup& setup, std::uint64_t global_seed,
                                           std::uint64_t first_index, std::size_t count) {
    constexpr std::size_t kChunk = 16;
    const auto grid = build_grid(setup.params, setup.base, pair.l1, pair.l2);
    const auto steps = static_cast<std::size_t>(grid.steps);
    std::vector<CoupledIncrement> out;
    out.reserve(count);
    std::vector<double> path(steps);
    std::vector<double> fine;
    for (std::size_t first = 0; first < count; first += kChunk) {
        const std::size_t lanes = std::min(kChunk, count - first);
        fine.assign(steps * lanes, 0.0);
        for (std::size_t p = 0; p < lanes; ++p) {
            const auto seed = derive_seed(global_seed, pair.l1, pair.l2, first_index + first + p);
            NormalStream(seed).fill(path);
            for (std::size_t n = 0; n < steps; ++n) fine[n * lanes + p] = path[n];
        }
        auto chunk = evaluate_lanes(kind, pair, setup, fine, lanes);
        out.insert(out.end(), chunk.begin(), chunk.end());
    }
    return out;
}

double telescoping_check(int l1_max, int l2_max, std::uint64_t seed, const SamplerSetup& setup) {
    if (l1_max < 0 || l2_max < 0) throw Error(ErrorKind::InvalidLevel, "negative level");
    const auto finest = build_grid(setup.params, setup.base, l1_max, l2_max);
    // normals[l2] drives timestep level l2
    std::vector<std::vector<double>> normals(static_cast<std::size_t>(l2_max) + 1);
    normals.back() = BrownianPath::generate(seed, static_cast<std::size_t>(finest.steps)).fine_normals;
    for (int l2 = l2_max; l2 > 0; --l2) {
        normals[static_cast<std::size_t>(l2 - 1)] = coarsen_normals(normals[static_cast<std::size_t>(l2)]);
    }
    double sum = 0.0;
    for (int l1 = 0; l1 <= l1_max; ++l1) {
        for (int l2 = 0; l2 <= l2_max; ++l2) {
            sum += difference_from_normals(DifferenceKind::Mixed, {l1, l2}, setup,
                                           normals[static_cast<std::size_t>(l2)])
                       .delta;
        }
    }
    const auto state = evolve(finest, setup.params, normals.back(), setup.scheme);
    return std::abs(sum - loss(setup.functional, state, finest));
}

}  // namespace zakai
