#pragma once

#include <optional>
#include <span>
#include <vector>

namespace bwsann {

/// 1-based ranks, ascending, ties receive the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; nullopt when fewer than two points or either side
/// has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation with average-rank tie handling.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace bwsann
