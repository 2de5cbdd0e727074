#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "gq/atlas.hpp"
#include "gq/tumordb.hpp"

namespace gq::test {

inline BinaryMask random_mask(const GridDims& d, double density, std::mt19937_64& rng) {
    BinaryMask m(d);
    std::bernoulli_distribution on(density);
    for (std::size_t i = 0; i < d.count(); ++i) {
        if (on(rng)) m.set(i);
    }
    return m;
}

inline BinaryMask box_mask(const GridDims& d, std::array<std::uint32_t, 3> lo, std::array<std::uint32_t, 3> size) {
    BinaryMask m(d);
    for (std::uint32_t z = lo[2]; z < lo[2] + size[2]; ++z)
        for (std::uint32_t y = lo[1]; y < lo[1] + size[1]; ++y)
            for (std::uint32_t x = lo[0]; x < lo[0] + size[0]; ++x) m.set(x, y, z);
    return m;
}

// Small corpus shared by the query and evaluation tests: 32^3 phantom at
// 4 mm, so tumors cover a similar fraction of the brain as at 64^3 / 2 mm.
inline const TissueAtlas& small_atlas() {
    static const TissueAtlas atlas = make_phantom_atlas(32, 4.0);
    return atlas;
}

inline const TumorDatabase& small_db() {
    static const TumorDatabase db = [] {
        BuildOptions o;
        o.n_target = 200;
        o.master_seed = 11;
        return build_database(small_atlas(), o);
    }();
    return db;
}

}  // namespace gq::test
