#ifndef PIMD_ESTIMATORS_HPP
#define PIMD_ESTIMATORS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pimd/dynamics.hpp"
#include "pimd/modes.hpp"

namespace pimd {

using ScalarObservable = std::function<double(const Eigen::VectorXd&)>;

struct ObservableSeries {
    std::vector<double> values;
    double dt = 1.0;
    std::string label;
};

struct CorrelationCurve {
    int mode_index = 0;
    std::vector<double> lags; // in time units
    std::vector<double> c;
    std::size_t n_samples = 0;
};

// (1/D) sum_j O(x_N(j beta_D))
inline double loop_observable(const ModeCoordinates& xi, int d_grid,
                              const ScalarObservable& obs) {
    const GridLoop grid = mode_to_grid(xi, d_grid);
    double acc = 0.0;
    for (int j = 0; j < grid.d_grid(); ++j)
        acc += obs(grid.x.row(j).transpose());
    return acc / d_grid;
}

inline double loop_observable(const Eigen::MatrixXd& grid, const ScalarObservable& obs) {
    double acc = 0.0;
    for (int j = 0; j < grid.rows(); ++j)
        acc += obs(grid.row(j).transpose());
    return acc / grid.rows();
}

inline double time_average(const ObservableSeries& series) {
    if (series.values.empty())
        throw std::invalid_argument("time_average: empty series");
    double acc = 0.0;
    for (double v : series.values) acc += v;
    return acc / series.values.size();
}

// C(lag) = <x(t) x(t+lag)>_t / <x(t)^2>_t; raw time averages by default,
// mean subtraction is opt-in.
inline CorrelationCurve autocorrelation(const std::vector<double>& samples, int max_lag,
                                        double dt = 1.0, bool subtract_mean = false,
                                        int mode_index = 0) {
    const std::size_t n = samples.size();
    if (n == 0 || static_cast<std::size_t>(max_lag) >= n)
        throw std::invalid_argument("autocorrelation: series length must exceed max_lag");
    double mean = 0.0;
    if (subtract_mean) {
        for (double v : samples) mean += v;
        mean /= n;
    }
    double norm = 0.0;
    for (double v : samples) norm += (v - mean) * (v - mean);
    norm /= n;
    if (norm == 0.0)
        throw std::domain_error("autocorrelation: zero-variance series");
    CorrelationCurve curve;
    curve.mode_index = mode_index;
    curve.n_samples = n;
    for (int lag = 0; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t)
            acc += (samples[t] - mean) * (samples[t + lag] - mean);
        acc /= (n - lag);
        curve.lags.push_back(lag * dt);
        curve.c.push_back(acc / norm);
    }
    return curve;
}

// least-squares slope of log C vs lag over the window C > threshold;
// returns the positive decay rate
inline double decay_rate_fit(const CorrelationCurve& curve, double threshold = 0.1) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < curve.c.size(); ++i) {
        if (curve.c[i] <= threshold) break;
        xs.push_back(curve.lags[i]);
        ys.push_back(std::log(curve.c[i]));
    }
    if (xs.size() < 3)
        throw std::runtime_error("decay_rate_fit: fewer than 3 lags above threshold");
    const std::size_t n = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return -slope;
}

// Histogram of |q| normalized so sum rho(r_i) dr = 1.
struct RadialHistogram {
    int bins;
    double r_max;
    std::vector<double> counts;
    std::uint64_t total = 0;

    RadialHistogram(int bins_, double r_max_) : bins(bins_), r_max(r_max_), counts(bins_, 0.0) {
        if (bins_ < 1 || !(r_max_ > 0.0))
            throw std::invalid_argument("RadialHistogram: bins >= 1 and r_max > 0 required");
    }

    double dr() const { return r_max / bins; }

    void add(double r) {
        int b = static_cast<int>(r / dr());
        if (b >= 0 && b < bins) counts[b] += 1.0;
        ++total; // out-of-range samples still count toward normalization
    }

    double bin_center(int i) const { return (i + 0.5) * dr(); }

    std::vector<double> density() const {
        std::vector<double> rho(bins, 0.0);
        if (total == 0) return rho;
        for (int i = 0; i < bins; ++i) rho[i] = counts[i] / (total * dr());
        return rho;
    }
};

// --- trajectory observers -------------------------------------------------

// Accumulates the time average of a loop observable, with a batch-means
// standard error estimate.
class TimeAverageObserver : public TrajectoryObserver {
public:
    explicit TimeAverageObserver(ScalarObservable obs, int n_batches = 64)
        : obs_(std::move(obs)), n_batches_(n_batches) {}

    void observe(const PhaseState& state, const SamplerContext& ctx) override {
        const Eigen::MatrixXd grid = ctx.loop.transform.to_grid(state.xi);
        const double v = loop_observable(grid, obs_);
        sum_ += v;
        ++count_;
        batch_.push_back(v);
    }

    double mean() const {
        if (count_ == 0) throw std::invalid_argument("TimeAverageObserver: no samples");
        return sum_ / count_;
    }

    // batch-means standard error of the mean (accounts for autocorrelation)
    double standard_error() const {
        const std::size_t n = batch_.size();
        if (n < static_cast<std::size_t>(2 * n_batches_)) return 0.0;
        const std::size_t len = n / n_batches_;
        std::vector<double> means;
        for (int b = 0; b < n_batches_; ++b) {
            double acc = 0.0;
            for (std::size_t i = b * len; i < (b + 1) * len; ++i) acc += batch_[i];
            means.push_back(acc / len);
        }
        double m = 0.0;
        for (double v : means) m += v;
        m /= n_batches_;
        double var = 0.0;
        for (double v : means) var += (v - m) * (v - m);
        var /= (n_batches_ - 1);
        return std::sqrt(var / n_batches_);
    }

    std::size_t count() const { return count_; }

private:
    ScalarObservable obs_;
    int n_batches_;
    double sum_ = 0.0;
    std::size_t count_ = 0;
    std::vector<double> batch_;
};

// Records selected mode coordinates (component 0) every `stride` observations.
class ModeRecorder : public TrajectoryObserver {
public:
    ModeRecorder(std::vector<int> modes, std::uint64_t stride = 1)
        : modes_(std::move(modes)), stride_(stride), series_(modes_.size()) {}

    void observe(const PhaseState& state, const SamplerContext&) override {
        if (tick_++ % stride_ == 0)
            for (std::size_t i = 0; i < modes_.size(); ++i)
                series_[i].push_back(state.xi(modes_[i], 0));
        }

    const std::vector<double>& series(std::size_t i) const { return series_[i]; }
    const std::vector<int>& modes() const { return modes_; }

private:
    std::vector<int> modes_;
    std::uint64_t stride_;
    std::uint64_t tick_ = 0;
    std::vector<std::vector<double>> series_;
};

// Radial histogram over all beads of the recorded states, with per-bin
// block-mean statistics for uncertainty estimates.
class RadialHistogramObserver : public TrajectoryObserver {
public:
    RadialHistogramObserver(int bins, double r_max, std::uint64_t stride = 1,
                            std::uint64_t block_len = 1024)
        : hist_(bins, r_max), stride_(stride), block_len_(block_len),
          block_(bins, 0.0) {}

    void observe(const PhaseState& state, const SamplerContext& ctx) override {
        if (tick_++ % stride_ != 0) return;
        const Eigen::MatrixXd grid = ctx.loop.transform.to_grid(state.xi);
        for (int j = 0; j < grid.rows(); ++j) {
            const double r = grid.row(j).norm();
            hist_.add(r);
            const int b = static_cast<int>(r / hist_.dr());
            if (b >= 0 && b < hist_.bins) block_[b] += 1.0;
        }
        block_samples_ += static_cast<std::uint64_t>(grid.rows());
        if (++block_fill_ == block_len_) flush_block();
    }

    const RadialHistogram& histogram() const { return hist_; }

    // per-bin standard error of the density via block means
    std::vector<double> density_stderr() const {
        const std::size_t nb = block_means_.size();
        std::vector<double> err(hist_.bins, 0.0);
        if (nb < 4) return err;
        for (int i = 0; i < hist_.bins; ++i) {
            double m = 0.0;
            for (const auto& blk : block_means_) m += blk[i];
            m /= nb;
            double var = 0.0;
            for (const auto& blk : block_means_) var += (blk[i] - m) * (blk[i] - m);
            var /= (nb - 1);
            err[i] = std::sqrt(var / nb);
        }
        return err;
    }

private:
    void flush_block() {
        std::vector<double> density(hist_.bins, 0.0);
        for (int i = 0; i < hist_.bins; ++i)
            density[i] = block_[i] / (block_samples_ * hist_.dr());
        block_means_.push_back(std::move(density));
        std::fill(block_.begin(), block_.end(), 0.0);
        block_fill_ = 0;
        block_samples_ = 0;
    }

    RadialHistogram hist_;
    std::uint64_t stride_;
    std::uint64_t block_len_; // observations per block
    std::uint64_t tick_ = 0;
    std::uint64_t block_fill_ = 0;
    std::uint64_t block_samples_ = 0;
    std::vector<double> block_;
    std::vector<std::vector<double>> block_means_;
};

} // namespace pimd

#endif
