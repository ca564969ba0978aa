#include "pcc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pcc/adjacency.hpp"
#include "pcc/error.hpp"

namespace pcc {

double mae(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (X.rows() != Y.rows() || X.cols() != Y.cols()) throw ShapeError("mae: shape mismatch");
    if (X.size() == 0) return 0.0;
    return (X - Y).cwiseAbs().mean();
}

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::VectorXd a = A.rowwise().squaredNorm();
    const Eigen::VectorXd b = B.rowwise().squaredNorm();
    Eigen::MatrixXd d = (-2.0 * A * B.transpose()).colwise() + a;
    d.rowwise() += b.transpose();
    return d.cwiseMax(0.0);
}

double mean_kernel(const Eigen::MatrixXd& d2, const std::vector<double>& bandwidths) {
    double total = 0.0;
    for (double s : bandwidths) total += (-d2.array() / (2.0 * s * s)).exp().mean();
    return total / static_cast<double>(bandwidths.size());
}

double population_sd(const Eigen::VectorXd& v) {
    if (v.size() == 0) return 0.0;
    return std::sqrt((v.array() - v.mean()).square().mean());
}

}  // namespace

std::vector<double> default_bandwidths(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    Eigen::MatrixXd pooled(X.rows() + Y.rows(), X.cols());
    pooled << X, Y;
    const Eigen::MatrixXd d2 = squared_distances(pooled, pooled);
    std::vector<double> dist;
    for (Eigen::Index i = 0; i < pooled.rows(); ++i)
        for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) dist.push_back(std::sqrt(d2(i, j)));
    double median = 0.0;
    if (!dist.empty()) {
        const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
        std::nth_element(dist.begin(), mid, dist.end());
        median = *mid;
        if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
    }
    if (median <= 0.0) median = 1.0;
    return {0.25 * median, 0.5 * median, median, 2.0 * median, 4.0 * median};
}

double mmd(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, std::vector<double> bandwidths) {
    if (X.rows() == 0 || Y.rows() == 0) throw DataError("mmd needs at least one sample per set");
    if (X.cols() != Y.cols()) throw ShapeError("mmd: feature dimensions differ");
    if (bandwidths.empty()) bandwidths = default_bandwidths(X, Y);
    for (double s : bandwidths)
        if (!(s > 0.0)) throw ConfigError("mmd bandwidths must be positive");
    const double kxx = mean_kernel(squared_distances(X, X), bandwidths);
    const double kyy = mean_kernel(squared_distances(Y, Y), bandwidths);
    const double kxy = mean_kernel(squared_distances(X, Y), bandwidths);
    return kxx + kyy - 2.0 * kxy;
}

InterventionalMetrics interventional_metrics(const std::vector<InterventionSamples>& truth,
                                             const std::vector<InterventionSamples>& estimate,
                                             const Eigen::MatrixXd& adjacency) {
    InterventionalMetrics out;
    double mean_sum = 0.0;
    double std_sum = 0.0;
    for (const auto& t : truth) {
        const auto des = descendants(adjacency, t.vertex);
        if (des.empty()) continue;
        const auto it = std::find_if(estimate.begin(), estimate.end(),
                                     [&](const InterventionSamples& e) { return e.vertex == t.vertex; });
        if (it == estimate.end()) throw DataError("no estimate for intervention on x" + std::to_string(t.vertex + 1));
        if (it->samples.cols() != t.samples.cols()) throw ShapeError("intervention samples differ in width");
        double m = 0.0;
        double s = 0.0;
        for (int i : des) {
            const double dm = t.samples.col(i).mean() - it->samples.col(i).mean();
            const double ds = population_sd(t.samples.col(i)) - population_sd(it->samples.col(i));
            m += dm * dm;
            s += ds * ds;
        }
        mean_sum += m / static_cast<double>(des.size());
        std_sum += s / static_cast<double>(des.size());
        out.used.push_back(t.vertex);
    }
    if (out.used.empty()) throw DataError("no intervention vertex has descendants");
    out.mean_e = mean_sum / static_cast<double>(out.used.size());
    out.std_e = std_sum / static_cast<double>(out.used.size());
    return out;
}

CounterfactualMetrics counterfactual_metrics(const std::vector<CfPair>& truth,
                                             const std::vector<Eigen::VectorXd>& estimate,
                                             const Eigen::MatrixXd& adjacency) {
    if (truth.size() != estimate.size()) throw DataError("counterfactual estimates do not pair with the truth");
    std::map<int, std::vector<double>> norms;
    std::map<int, std::vector<int>> des_of;
    for (std::size_t r = 0; r < truth.size(); ++r) {
        const auto& p = truth[r];
        if (estimate[r].size() != p.counterfactual.size()) throw ShapeError("counterfactual row width mismatch");
        auto [it, fresh] = des_of.try_emplace(p.do_vertex);
        if (fresh) it->second = descendants(adjacency, p.do_vertex);
        if (it->second.empty()) continue;
        double sq = 0.0;
        for (int i : it->second) {
            const double d = p.counterfactual(i) - estimate[r](i);
            sq += d * d;
        }
        norms[p.do_vertex].push_back(std::sqrt(sq));
    }
    CounterfactualMetrics out;
    for (const auto& [j, t] : norms) {
        const Eigen::Map<const Eigen::VectorXd> v(t.data(), static_cast<Eigen::Index>(t.size()));
        const double size = static_cast<double>(des_of[j].size());
        out.mse += v.mean() / size;
        out.sse += population_sd(v) / size;
    }
    return out;
}

GraphMetrics graph_metrics(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate) {
    if (truth.rows() != truth.cols() || estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw ShapeError("graph metrics need equal square matrices");
    auto binary = [](const Eigen::MatrixXd& m) { return ((m.array() == 0.0) || (m.array() == 1.0)).all(); };
    if (!binary(truth) || !binary(estimate)) throw ConfigError("graph metrics need binary matrices");
    const Eigen::Index n = truth.rows();
    Confusion c;
    int elementwise = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const bool a = truth(i, j) != 0.0;
            const bool at = truth(j, i) != 0.0;
            const bool e = estimate(i, j) != 0.0;
            const bool et = estimate(j, i) != 0.0;
            if (a != e) ++elementwise;
            if (e) {
                if (a) ++c.tp;
                else if (at) ++c.r;
                else ++c.fp;
            } else if (a) {
                ++c.fn;
                if (!(et && !at)) ++c.m;
            } else if (i != j) {
                ++c.tn;
            }
        }
    }
    GraphMetrics g;
    g.confusion = c;
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    g.fdr = ratio(c.fp + c.r, c.fp + c.tp);
    g.tpr = ratio(c.tp, c.tp + c.fn);
    g.fpr = ratio(c.fp + c.r, c.fp + c.tn);
    g.shd = c.r + c.m + c.fp;
    g.nnz = c.tp + c.fp;
    const int den = 2 * c.tp + c.fp + c.r + c.fn;
    g.f1 = den > 0 ? 2.0 * c.tp / den : 1.0;
    g.shd_elementwise = elementwise;
    return g;
}

}  // namespace pcc
