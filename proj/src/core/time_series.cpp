#include "etsfs/core/time_series.hpp"

#include <algorithm>
#include <cmath>

#include "etsfs/core/error.hpp"

namespace etsfs {

TimeSeries::TimeSeries(std::string id, int period, std::vector<double> values)
    : id_(std::move(id)), period_(period), values_(std::move(values)) {
    if (period_ < 1) throw Error(ErrorCode::InvalidArgument, id_ + ": period must be >= 1");
    if (values_.empty()) throw Error(ErrorCode::InvalidArgument, id_ + ": empty series");
    if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }))
        throw Error(ErrorCode::InvalidArgument, id_ + ": series contains non-finite values");
}

bool TimeSeries::has_nonpositive() const {
    return std::any_of(values_.begin(), values_.end(), [](double v) { return v <= 0.0; });
}

} // namespace etsfs
