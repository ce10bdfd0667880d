#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "etsfs/core/error.hpp"
#include "etsfs/eval/eval.hpp"

namespace etsfs::eval {

const char* to_string(DmDirection d) {
    switch (d) {
    case DmDirection::FavorsA: return "favors_a";
    case DmDirection::FavorsB: return "favors_b";
    default: return "no_difference";
    }
}

DmResult dm_test(const std::vector<double>& errors_a, const std::vector<double>& errors_b, std::size_t h, Loss loss,
                 double level) {
    if (errors_a.size() != errors_b.size()) throw Error(ErrorCode::DimensionMismatch, "error vectors differ in length");
    if (h < 1 || errors_a.size() <= h) throw Error(ErrorCode::InvalidArgument, "DM test needs more than h errors");
    const std::size_t n = errors_a.size();
    std::vector<double> d(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double a = errors_a[t], b = errors_b[t];
        d[t] = loss == Loss::Squared ? a * a - b * b : std::abs(a) - std::abs(b);
    }
    if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d[0]; }))
        throw Error(ErrorCode::DegenerateDifferential, "loss differential is constant");

    const double nn = static_cast<double>(n);
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= nn;
    auto autocov = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t t = k; t < n; ++t) s += (d[t] - mean) * (d[t - k] - mean);
        return s / nn;
    };
    const double gamma0 = autocov(0);
    double var = gamma0;
    for (std::size_t k = 1; k < h; ++k) var += 2.0 * autocov(k);
    // truncated long-run variance can go negative for h > 1
    if (!(var > 0.0)) var = gamma0;
    if (!(var > 0.0)) throw Error(ErrorCode::DegenerateDifferential, "loss differential has zero variance");

    const double hh = static_cast<double>(h);
    const double dm = mean / std::sqrt(var / nn);
    const double harvey = std::sqrt((nn + 1.0 - 2.0 * hh + hh * (hh - 1.0) / nn) / nn);
    DmResult r;
    r.statistic = harvey * dm;
    const boost::math::students_t dist(nn - 1.0);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic)));
    if (r.p_value < level) r.direction = r.statistic < 0 ? DmDirection::FavorsA : DmDirection::FavorsB;
    return r;
}

double miscoverage(const Embedding2D& sim, const Embedding2D& ref, std::size_t n_bins) {
    if (sim.points.empty() || ref.points.empty()) throw Error(ErrorCode::InvalidArgument, "empty embedding");
    if (n_bins < 1) throw Error(ErrorCode::InvalidArgument, "n_bins must be positive");
    std::array<double, 2> lo{INFINITY, INFINITY}, hi{-INFINITY, -INFINITY};
    for (const auto* e : {&sim, &ref}) {
        for (const auto& p : e->points) {
            for (int k = 0; k < 2; ++k) {
                if (!std::isfinite(p[k])) throw Error(ErrorCode::DegenerateData, "non-finite embedding coordinate");
                lo[k] = std::min(lo[k], p[k]);
                hi[k] = std::max(hi[k], p[k]);
            }
        }
    }
    auto cell = [&](const std::array<double, 2>& p) {
        std::size_t idx[2];
        for (int k = 0; k < 2; ++k) {
            const double w = hi[k] - lo[k];
            const double f = w > 0 ? (p[k] - lo[k]) / w : 0.0;
            idx[k] = std::min(n_bins - 1, static_cast<std::size_t>(f * static_cast<double>(n_bins)));
        }
        return idx[0] * n_bins + idx[1];
    };
    std::set<std::size_t> covered;
    for (const auto& p : sim.points) covered.insert(cell(p));
    std::set<std::size_t> missed;
    for (const auto& p : ref.points) {
        const auto c = cell(p);
        if (!covered.count(c)) missed.insert(c);
    }
    return static_cast<double>(missed.size()) / static_cast<double>(n_bins * n_bins);
}

Pca2 Pca2::fit(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) throw Error(ErrorCode::InvalidArgument, "PCA needs at least two rows");
    const std::size_t p = rows[0].size();
    if (p < 2) throw Error(ErrorCode::InvalidArgument, "PCA needs at least two columns");
    Eigen::MatrixXd x(rows.size(), p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != p) throw Error(ErrorCode::DimensionMismatch, "ragged PCA input");
        for (std::size_t j = 0; j < p; ++j) x(i, j) = rows[i][j];
    }
    Pca2 out;
    out.mean_.resize(p);
    out.scale_.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        const double m = x.col(j).mean();
        const double sd = std::sqrt((x.col(j).array() - m).square().sum() / static_cast<double>(rows.size() - 1));
        out.mean_[j] = m;
        out.scale_[j] = sd > 1e-12 ? sd : 1.0;
        x.col(j) = (x.col(j).array() - m) / out.scale_[j];
    }
    const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(rows.size() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd v = eig.eigenvectors().col(static_cast<Eigen::Index>(p) - 1 - k);
        // fix the sign so the largest-magnitude loading is positive
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        out.axes_[k].assign(v.data(), v.data() + p);
    }
    return out;
}

Embedding2D Pca2::project(const std::vector<std::vector<double>>& rows, std::string source) const {
    Embedding2D e;
    e.source = std::move(source);
    for (const auto& r : rows) {
        if (r.size() != mean_.size()) throw Error(ErrorCode::DimensionMismatch, "PCA input width differs from fit");
        std::array<double, 2> pt{0.0, 0.0};
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double z = (r[j] - mean_[j]) / scale_[j];
            pt[0] += z * axes_[0][j];
            pt[1] += z * axes_[1][j];
        }
        e.points.push_back(pt);
    }
    return e;
}

} // namespace etsfs::eval
