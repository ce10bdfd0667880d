#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "etsfs/core/error.hpp"
#include "etsfs/eval/eval.hpp"

namespace etsfs::eval {

void EvalRecord::validate(bool need_interval) const {
    if (actuals.empty()) throw Error(ErrorCode::InvalidArgument, id + ": empty holdout");
    if (point.size() != actuals.size())
        throw Error(ErrorCode::DimensionMismatch, id + ": forecasts and actuals differ in length");
    if (need_interval && (lower.size() != actuals.size() || upper.size() != actuals.size()))
        throw Error(ErrorCode::DimensionMismatch, id + ": interval bounds and actuals differ in length");
    if (period < 1) throw Error(ErrorCode::InvalidArgument, id + ": period must be >= 1");
}

std::string HorizonBand::label() const {
    return first == last ? std::to_string(first) : std::to_string(first) + "-" + std::to_string(last);
}

std::vector<HorizonBand> parse_bands(const std::string& text) {
    std::vector<HorizonBand> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        HorizonBand b;
        try {
            const auto dash = item.find('-');
            std::size_t used = 0;
            if (dash == std::string::npos) {
                b.first = b.last = std::stoul(item, &used);
                if (used != item.size()) throw std::invalid_argument(item);
            } else {
                const auto lhs = item.substr(0, dash), rhs = item.substr(dash + 1);
                b.first = std::stoul(lhs, &used);
                if (used != lhs.size()) throw std::invalid_argument(item);
                b.last = std::stoul(rhs, &used);
                if (used != rhs.size()) throw std::invalid_argument(item);
            }
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::Config, "bad horizon band '" + item + "'");
        }
        if (b.first < 1 || b.last < b.first) throw Error(ErrorCode::Config, "bad horizon band '" + item + "'");
        out.push_back(b);
    }
    if (out.empty()) throw Error(ErrorCode::Config, "no horizon bands given");
    return out;
}

double naive_scale(const std::vector<double>& history, int period) {
    const auto lag = static_cast<std::size_t>(std::max(1, period));
    if (history.size() <= lag) throw Error(ErrorCode::InvalidArgument, "history must be longer than the period");
    double s = 0.0;
    for (std::size_t t = lag; t < history.size(); ++t) s += std::abs(history[t] - history[t - lag]);
    s /= static_cast<double>(history.size() - lag);
    if (!(s > 0.0)) throw Error(ErrorCode::ZeroDenominator, "in-sample naive error is zero");
    return s;
}

namespace {

HorizonBand full(const EvalRecord& r) { return {1, r.horizon()}; }

void check_band(const EvalRecord& r, const HorizonBand& b) {
    if (b.first < 1 || b.last < b.first || b.last > r.horizon())
        throw Error(ErrorCode::InvalidArgument, r.id + ": band " + b.label() + " exceeds horizon");
}

} // namespace

double mase(const EvalRecord& r) { return mase(r, full(r)); }

double mase(const EvalRecord& r, const HorizonBand& band) {
    r.validate();
    check_band(r, band);
    const double scale = naive_scale(r.history, r.period);
    double s = 0.0;
    for (std::size_t t = band.first - 1; t < band.last; ++t) s += std::abs(r.actuals[t] - r.point[t]);
    return s / static_cast<double>(band.last - band.first + 1) / scale;
}

double smape(const EvalRecord& r) { return smape(r, full(r)); }

double smape(const EvalRecord& r, const HorizonBand& band) {
    r.validate();
    check_band(r, band);
    double s = 0.0;
    for (std::size_t t = band.first - 1; t < band.last; ++t) {
        const double den = std::abs(r.actuals[t]) + std::abs(r.point[t]);
        if (den > 0.0) s += 2.0 * std::abs(r.actuals[t] - r.point[t]) / den;
    }
    return s / static_cast<double>(band.last - band.first + 1);
}

double msis(const EvalRecord& r, double alpha) { return msis(r, full(r), alpha); }

double msis(const EvalRecord& r, const HorizonBand& band, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    r.validate(true);
    check_band(r, band);
    const double scale = naive_scale(r.history, r.period);
    double s = 0.0;
    for (std::size_t t = band.first - 1; t < band.last; ++t) {
        const double y = r.actuals[t], lo = r.lower[t], hi = r.upper[t];
        s += hi - lo;
        if (y < lo) s += 2.0 / alpha * (lo - y);
        if (y > hi) s += 2.0 / alpha * (y - hi);
    }
    return s / static_cast<double>(band.last - band.first + 1) / scale;
}

double accuracy(const std::vector<std::string>& truth, const std::vector<std::string>& pred) {
    if (truth.size() != pred.size()) throw Error(ErrorCode::DimensionMismatch, "label vectors differ in length");
    if (truth.empty()) throw Error(ErrorCode::InvalidArgument, "no labels");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
    return 100.0 * static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::vector<double> f1_per_class(const std::vector<std::string>& truth, const std::vector<std::string>& pred,
                                 const std::vector<std::string>& classes) {
    if (truth.size() != pred.size()) throw Error(ErrorCode::DimensionMismatch, "label vectors differ in length");
    if (classes.empty()) throw Error(ErrorCode::InvalidArgument, "empty class set");
    std::vector<double> out;
    for (const auto& c : classes) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = truth[i] == c, p = pred[i] == c;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        out.push_back(precision + recall > 0 ? 100.0 * 2.0 * precision * recall / (precision + recall) : 0.0);
    }
    return out;
}

double macro_f1(const std::vector<std::string>& truth, const std::vector<std::string>& pred,
                const std::vector<std::string>& classes) {
    const auto f1 = f1_per_class(truth, pred, classes);
    return std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(f1.size());
}

Summary summarize(std::vector<double> values) {
    std::erase_if(values, [](double v) { return !std::isfinite(v); });
    Summary s;
    s.count = values.size();
    if (values.empty()) return {std::nan(""), std::nan(""), 0};
    std::sort(values.begin(), values.end());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    const std::size_t n = values.size();
    s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return s;
}

} // namespace etsfs::eval
