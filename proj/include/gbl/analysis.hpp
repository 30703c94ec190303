#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gbl/learner.hpp"
#include "gbl/transition_graph.hpp"

namespace gbl {

/// Probability of at least one repeated state within `horizon` steps when
/// each state is independently novel with probability `novel_ratio`.
double crossover_probability(double novel_ratio, std::uint32_t horizon);

double pearson_correlation(std::span<const double> xs, std::span<const double> ys);

/// Aggregate of the per-pair last-K estimate windows: per-pair sample
/// mean and std, each averaged across pairs. Only full windows count.
struct StabilityReport {
    double mean_of_means = 0.0;
    double mean_of_stds = 0.0;
    std::size_t pairs = 0;
};

/// Throws when no window is full.
StabilityReport stability_report(const EstimateWindows& windows);
StabilityReport stability_report(const RunMetrics& metrics);
/// Rebuilds the windows from the raw estimate log and reports on them.
StabilityReport stability_report_from_log(std::span<const EstimateLogEntry> log, std::size_t window);

struct PolarPosition {
    double radius = 0.0;
    double angle = 0.0;
};

/// Radial layout rooted at a synthetic meta-initial node whose children
/// are the given initial states. Radius is the BFS depth from the root.
struct RadialLayout {
    std::vector<PolarPosition> positions;  // indexed by StateId
    std::vector<std::uint32_t> depth;      // indexed by StateId; unreached states sit on the outer ring
    std::vector<bool> reached;
    std::vector<StateId> roots;            // meta-root children
    /// State-to-state tree and cross edges (no self-loops), deduplicated,
    /// with summed frequency.
    std::vector<std::pair<std::pair<StateId, StateId>, std::uint64_t>> edges;
    /// States with a transition back to themselves, with summed frequency.
    std::vector<std::pair<StateId, std::uint64_t>> self_loops;
    std::uint32_t outer_ring = 0;
};

RadialLayout compute_radial_layout(const TransitionGraph& graph, std::span<const StateId> initial_states);

/// Initial states recorded in the graph, or states without incoming
/// transitions when none were recorded.
std::vector<StateId> layout_roots(const TransitionGraph& graph);

/// DOT output with pinned node positions (neato -n style). Throws on an
/// empty graph.
void write_dot(std::ostream& os, const TransitionGraph& graph, const RadialLayout& layout);
void export_dot(const TransitionGraph& graph, const RadialLayout& layout, const std::filesystem::path& path);

/// Line-chart SVG of (x, y) series, one polyline per series.
void write_svg_chart(std::ostream& os, const std::string& title,
                     const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series);

}  // namespace gbl
