#pragma once

#include <string>
#include <vector>

namespace etsfs {

/// A univariate series with its seasonal period (1 = non-seasonal).
/// Construction rejects empty or non-finite data.
class TimeSeries {
public:
    TimeSeries(std::string id, int period, std::vector<double> values);

    const std::string& id() const { return id_; }
    int period() const { return period_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    bool has_nonpositive() const;

private:
    std::string id_;
    int period_;
    std::vector<double> values_;
};

} // namespace etsfs
