#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>

namespace oblab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Neumaier-compensated accumulator. All reductions in the library go through
/// this in canonical (left-to-right) order so results are bit-reproducible.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

/// ln(sum exp(x_i)); -inf entries are skipped, all -inf returns -inf.
double log_sum_exp(std::span<const double> xs);

/// Worker count used by parallel_for. Defaults to 1.
void set_thread_count(unsigned k);
unsigned thread_count();

/// Calls body(i) for i in [0, n), split into contiguous chunks across the
/// configured worker count. body must only write to slot i of its outputs.
/// Calls made from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t grain = 64);

/// Ordinary least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

double median(std::span<const double> xs);
double quantile(std::span<const double> xs, double q);

}  // namespace oblab
