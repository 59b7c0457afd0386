// SPDX-License-Identifier: Apache-2.0
//
// Compensated streaming sums. Long Monte Carlo runs add millions of terms of
// similar magnitude, so plain summation loses digits that later cancel.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>

namespace qmimo {

/// Neumaier-compensated sum.
class CompensatedSum
{
  public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    void merge(const CompensatedSum& other)
    {
        add(other.sum_);
        add(other.comp_);
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Mean and standard error of a real sample stream.
class RunningMoment
{
  public:
    void add(double x)
    {
        sum_.add(x);
        squares_.add(x * x);
        ++count_;
    }
    void merge(const RunningMoment& other)
    {
        sum_.merge(other.sum_);
        squares_.merge(other.squares_);
        count_ += other.count_;
    }
    std::size_t count() const { return count_; }
    double mean() const { return count_ == 0 ? 0.0 : sum_.value() / static_cast<double>(count_); }
    double variance() const
    {
        if (count_ < 2) return 0.0;
        const double n = static_cast<double>(count_);
        const double m = mean();
        return std::max(0.0, (squares_.value() / n - m * m) * n / (n - 1.0));
    }
    double standard_error() const
    {
        return count_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(count_));
    }

  private:
    CompensatedSum sum_;
    CompensatedSum squares_;
    std::size_t count_ = 0;
};

/// Complex mean; the standard error reported is that of the magnitude of the
/// mean, sqrt((var_re + var_im) / n).
class ComplexMoment
{
  public:
    void add(std::complex<double> z)
    {
        re_.add(z.real());
        im_.add(z.imag());
    }
    void merge(const ComplexMoment& other)
    {
        re_.merge(other.re_);
        im_.merge(other.im_);
    }
    std::size_t count() const { return re_.count(); }
    std::complex<double> mean() const { return {re_.mean(), im_.mean()}; }
    double standard_error() const
    {
        return std::hypot(re_.standard_error(), im_.standard_error());
    }

  private:
    RunningMoment re_;
    RunningMoment im_;
};

} // namespace qmimo
