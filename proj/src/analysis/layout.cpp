#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "gbl/analysis.hpp"

namespace gbl {

std::vector<StateId> layout_roots(const TransitionGraph& graph) {
    auto initial = graph.initial_states();
    if (!initial.empty()) return {initial.begin(), initial.end()};
    std::vector<bool> has_incoming(graph.state_count(), false);
    for (std::size_t p = 0; p < graph.pair_count(); ++p) {
        for (const auto& t : graph.pair(static_cast<PairId>(p)).out)
            if (t.next != graph.pair(static_cast<PairId>(p)).state) has_incoming[t.next] = true;
    }
    std::vector<StateId> roots;
    for (StateId s = 0; s < graph.state_count(); ++s)
        if (!has_incoming[s]) roots.push_back(s);
    return roots;
}

RadialLayout compute_radial_layout(const TransitionGraph& graph, std::span<const StateId> initial_states) {
    const std::size_t n = graph.state_count();
    RadialLayout layout;
    layout.positions.resize(n);
    layout.depth.assign(n, 0);
    layout.reached.assign(n, false);

    // Collapse action nodes into state-to-state adjacency.
    std::vector<std::vector<StateId>> successors(n);
    std::unordered_map<std::uint64_t, std::size_t> edge_index;
    std::unordered_map<StateId, std::size_t> loop_index;
    for (StateId s = 0; s < n; ++s) {
        for (PairId p : graph.pairs_of(s)) {
            for (const auto& t : graph.pair(p).out) {
                if (t.next == s) {
                    auto [it, fresh] = loop_index.try_emplace(s, layout.self_loops.size());
                    if (fresh) layout.self_loops.push_back({s, 0});
                    layout.self_loops[it->second].second += t.frequency;
                    continue;
                }
                auto [it, fresh] = edge_index.try_emplace((std::uint64_t(s) << 32) | t.next, layout.edges.size());
                if (fresh) {
                    layout.edges.push_back({{s, t.next}, 0});
                    successors[s].push_back(t.next);
                }
                layout.edges[it->second].second += t.frequency;
            }
        }
    }

    // BFS tree from the meta-root.
    std::vector<std::vector<StateId>> children(n);
    std::deque<StateId> frontier;
    for (StateId r : initial_states) {
        if (r >= n || layout.reached[r]) continue;
        layout.reached[r] = true;
        layout.depth[r] = 1;
        layout.roots.push_back(r);
        frontier.push_back(r);
    }
    std::vector<StateId> order;
    while (!frontier.empty()) {
        StateId s = frontier.front();
        frontier.pop_front();
        order.push_back(s);
        for (StateId next : successors[s]) {
            if (layout.reached[next]) continue;
            layout.reached[next] = true;
            layout.depth[next] = layout.depth[s] + 1;
            children[s].push_back(next);
            frontier.push_back(next);
        }
    }

    // Sector widths proportional to descendant leaf counts.
    std::vector<double> leaves(n, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (children[*it].empty()) continue;
        double sum = 0.0;
        for (StateId c : children[*it]) sum += leaves[c];
        leaves[*it] = sum;
    }
    auto place = [&](std::span<const StateId> kids, double start, double width, auto&& self) -> void {
        double total = 0.0;
        for (StateId c : kids) total += leaves[c];
        for (StateId c : kids) {
            double w = width * leaves[c] / total;
            layout.positions[c] = {static_cast<double>(layout.depth[c]), start + w / 2.0};
            self(children[c], start, w, self);
            start += w;
        }
    };
    place(layout.roots, 0.0, 2.0 * std::numbers::pi, place);

    std::uint32_t max_depth = 0;
    for (StateId s = 0; s < n; ++s)
        if (layout.reached[s]) max_depth = std::max(max_depth, layout.depth[s]);
    layout.outer_ring = max_depth + 1;
    std::vector<StateId> unreached;
    for (StateId s = 0; s < n; ++s)
        if (!layout.reached[s]) unreached.push_back(s);
    for (std::size_t i = 0; i < unreached.size(); ++i) {
        layout.depth[unreached[i]] = layout.outer_ring;
        layout.positions[unreached[i]] = {static_cast<double>(layout.outer_ring),
                                          2.0 * std::numbers::pi * static_cast<double>(i) /
                                              static_cast<double>(unreached.size())};
    }
    return layout;
}

void write_dot(std::ostream& os, const TransitionGraph& graph, const RadialLayout& layout) {
    if (graph.empty()) throw std::invalid_argument("cannot export an empty graph");
    constexpr double kRingSpacing = 60.0;
    char buf[256];
    os << "digraph transition_graph {\n";
    os << "  graph [layout=neato, overlap=true, splines=false, outputorder=edgesfirst];\n";
    os << "  node [shape=point, width=0.06];\n";
    os << "  edge [arrowsize=0.3, color=\"#00000080\"];\n";
    os << "  root [shape=doublecircle, width=0.12, label=\"\", pos=\"0.000,0.000!\"];\n";
    for (StateId s = 0; s < graph.state_count(); ++s) {
        const auto& p = layout.positions.at(s);
        double x = kRingSpacing * p.radius * std::cos(p.angle);
        double y = kRingSpacing * p.radius * std::sin(p.angle);
        std::snprintf(buf, sizeof buf, "  s%u [pos=\"%.3f,%.3f!\", tooltip=\"%s\"];\n", s, x, y,
                      graph.key(s).hex().c_str());
        os << buf;
    }
    for (StateId r : layout.roots) os << "  root -> s" << r << " [style=dashed];\n";
    for (const auto& [e, f] : layout.edges) {
        std::snprintf(buf, sizeof buf, "  s%u -> s%u [penwidth=%.4f];\n", e.first, e.second,
                      1.0 + std::log(static_cast<double>(f)));
        os << buf;
    }
    for (const auto& [s, f] : layout.self_loops) {
        std::snprintf(buf, sizeof buf, "  s%u -> s%u [penwidth=%.4f, color=red];\n", s, s,
                      1.0 + std::log(static_cast<double>(f)));
        os << buf;
    }
    os << "}\n";
}

void export_dot(const TransitionGraph& graph, const RadialLayout& layout, const std::filesystem::path& path) {
    if (graph.empty()) throw std::invalid_argument("cannot export an empty graph");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_dot(os, graph, layout);
    if (!os) throw std::runtime_error("failed writing " + path.string());
}

void write_svg_chart(std::ostream& os, const std::string& title,
                     const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series) {
    constexpr double W = 640, H = 400, M = 50;
    static constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    for (const auto& [name, pts] : series) {
        for (auto [x, y] : pts) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (first) {
                x0 = x1 = x;
                y0 = y1 = y;
                first = false;
            }
            x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto sx = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
    auto sy = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };

    char buf[256];
    std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n", W, H);
    os << buf;
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">", W / 2);
    os << buf << title << "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n"
                  "<line x1=\"%.0f\" y1=\"%.0f\" x2=\"%.0f\" y2=\"%.0f\" stroke=\"black\"/>\n",
                  M, H - M, W - M, H - M, M, M, M, H - M);
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"10\">%.3g</text>\n"
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"10\">%.3g</text>\n"
                  "<text x=\"%.0f\" y=\"%.0f\" font-size=\"10\" text-anchor=\"end\">%.3g</text>\n",
                  M, H - M + 15, x0, W - M, H - M + 15, x1, M - 4, M + 4, y1);
    os << buf;
    std::size_t i = 0;
    for (const auto& [name, pts] : series) {
        const char* color = kColors[i % std::size(kColors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (auto [x, y] : pts) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(x), sy(y));
            os << buf;
        }
        os << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" font-size=\"11\" fill=\"%s\">", W - M - 100,
                      M + 14.0 * static_cast<double>(i), color);
        os << buf << name << "</text>\n";
        ++i;
    }
    os << "</svg>\n";
}

}  // namespace gbl
