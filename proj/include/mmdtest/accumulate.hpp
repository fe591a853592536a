#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mmdtest {

// Neumaier-compensated summation. The O(n^2) kernel sums feed exponent
// estimates that are sensitive to noise near the test threshold, so every
// long accumulation in this library goes through one of these.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

    void reset() { sum_ = 0.0; comp_ = 0.0; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Pairwise (tree) reduction. Deterministic for a fixed input order and
// independent of how the input was produced, which makes parallel
// per-chunk results reproducible after a fixed-order merge.
inline double pairwise_sum(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        CompensatedSum s;
        for (double x : xs) s.add(x);
        return s.value();
    }
    const std::size_t half = n / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

// Streaming log-sum-exp: log(sum_i exp(l_i)) without materializing terms.
// Used where probabilities underflow double range (exact error curves at
// large n have log beta ~ -1000).
class LogSumExp {
public:
    void add(double log_term) {
        if (std::isinf(log_term) && log_term < 0) return;
        if (empty_) {
            max_ = log_term;
            acc_ = 1.0;
            empty_ = false;
            return;
        }
        if (log_term <= max_) {
            acc_ += std::exp(log_term - max_);
        } else {
            acc_ = acc_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }

    // -inf when no finite term was added
    double value() const {
        if (empty_) return -std::numeric_limits<double>::infinity();
        return max_ + std::log(acc_);
    }

private:
    bool empty_ = true;
    double max_ = 0.0;
    double acc_ = 0.0;
};

}  // namespace mmdtest
