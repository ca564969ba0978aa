#include "pcc/adjacency.hpp"

#include <algorithm>
#include <deque>

#include "pcc/error.hpp"

namespace pcc {

namespace {

void check_square(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw ShapeError("adjacency must be square");
}

}  // namespace

std::optional<std::vector<int>> topological_order(const Eigen::MatrixXd& adjacency) {
    check_square(adjacency);
    const int n = static_cast<int>(adjacency.rows());
    std::vector<int> indegree(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (adjacency(i, j) != 0.0) ++indegree[static_cast<std::size_t>(j)];
    std::deque<int> ready;
    for (int v = 0; v < n; ++v)
        if (indegree[static_cast<std::size_t>(v)] == 0) ready.push_back(v);
    std::vector<int> order;
    while (!ready.empty()) {
        const int v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (int c = 0; c < n; ++c)
            if (adjacency(v, c) != 0.0 && --indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
    }
    if (static_cast<int>(order.size()) != n) return std::nullopt;
    return order;
}

bool is_dag(const Eigen::MatrixXd& adjacency) { return topological_order(adjacency).has_value(); }

std::vector<int> descendants(const Eigen::MatrixXd& adjacency, int j) {
    check_square(adjacency);
    const int n = static_cast<int>(adjacency.rows());
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::deque<int> frontier{j};
    while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop_front();
        for (int c = 0; c < n; ++c) {
            if (adjacency(v, c) != 0.0 && !seen[static_cast<std::size_t>(c)]) {
                seen[static_cast<std::size_t>(c)] = true;
                frontier.push_back(c);
            }
        }
    }
    std::vector<int> out;
    for (int v = 0; v < n; ++v)
        if (seen[static_cast<std::size_t>(v)] && v != j) out.push_back(v);
    return out;
}

std::vector<int> find_cycle(const Eigen::MatrixXd& adjacency) {
    check_square(adjacency);
    const int n = static_cast<int>(adjacency.rows());
    // 0 unvisited, 1 on stack, 2 done
    std::vector<int> color(static_cast<std::size_t>(n), 0);
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    for (int root = 0; root < n; ++root) {
        if (color[static_cast<std::size_t>(root)] != 0) continue;
        std::vector<std::pair<int, int>> stack{{root, 0}};
        color[static_cast<std::size_t>(root)] = 1;
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next >= n) {
                color[static_cast<std::size_t>(v)] = 2;
                stack.pop_back();
                continue;
            }
            const int c = next++;
            if (adjacency(v, c) == 0.0) continue;
            if (color[static_cast<std::size_t>(c)] == 1) {
                std::vector<int> cycle{c};
                for (int w = v; w != c; w = parent[static_cast<std::size_t>(w)]) cycle.push_back(w);
                std::reverse(cycle.begin() + 1, cycle.end());
                return cycle;
            }
            if (color[static_cast<std::size_t>(c)] == 0) {
                color[static_cast<std::size_t>(c)] = 1;
                parent[static_cast<std::size_t>(c)] = v;
                stack.emplace_back(c, 0);
            }
        }
    }
    return {};
}

std::vector<int> non_leaf_vertices(const Eigen::MatrixXd& adjacency) {
    check_square(adjacency);
    std::vector<int> out;
    for (int i = 0; i < adjacency.rows(); ++i)
        if ((adjacency.row(i).array() != 0.0).any()) out.push_back(i);
    return out;
}

}  // namespace pcc
