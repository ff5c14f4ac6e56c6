#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hyperstab {

// Uniformly sampled vector signal on [t0, t1]. Between samples: cubic Hermite
// when a derivative channel is present, four-point Lagrange otherwise.
class SampledSignal {
public:
    SampledSignal() = default;
    SampledSignal(double t0, double dt, std::size_t count, std::size_t channels, bool with_derivative);
    static SampledSignal over(double t0, double t1, double dt, std::size_t channels, bool with_derivative);

    double t0() const noexcept { return t0_; }
    double t1() const noexcept { return t0_ + dt_ * double(count_ - 1); }
    double dt() const noexcept { return dt_; }
    std::size_t count() const noexcept { return count_; }
    std::size_t channels() const noexcept { return channels_; }
    bool has_derivative() const noexcept { return !deriv_.empty(); }
    double time(std::size_t k) const noexcept { return t0_ + dt_ * double(k); }

    double& sample(std::size_t ch, std::size_t k) { return values_[ch][k]; }
    double sample(std::size_t ch, std::size_t k) const { return values_[ch][k]; }
    double& slope(std::size_t ch, std::size_t k) { return deriv_[ch][k]; }
    double slope(std::size_t ch, std::size_t k) const { return deriv_[ch][k]; }
    const std::vector<double>& channel(std::size_t ch) const { return values_[ch]; }

    bool covers(double t) const noexcept;
    double value(std::size_t ch, double t) const;
    double derivative(std::size_t ch, double t) const;

    void write_csv(const std::string& path) const;
    static SampledSignal read_csv(const std::string& path);

private:
    double position(double t) const;

    double t0_ = 0.0, dt_ = 1.0;
    std::size_t count_ = 0, channels_ = 0;
    std::vector<std::vector<double>> values_, deriv_;
};

}  // namespace hyperstab
