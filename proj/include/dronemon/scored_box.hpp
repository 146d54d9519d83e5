#pragma once

#include "dronemon/geometry.hpp"

namespace dronemon {

enum class ScoreSource { detector, tracker };

/// A candidate box with a raw, source-specific confidence.
struct ScoredBox {
    BBox box;
    double score = 0.0;
    ScoreSource source = ScoreSource::detector;

    bool operator==(const ScoredBox&) const = default;
};

}  // namespace dronemon
