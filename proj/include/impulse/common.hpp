#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace impulse {

// Error taxonomy shared by all solver modules. Every throwing path in the
// library raises SolverError with one of these codes so callers (and the CLI)
// can map failures without string matching.
enum class Errc {
    NonCommensurate,
    DistinctItems,
    InadmissibleTrace,
    InadmissibleRule,
    MissingChild,
    ObstacleViolation,
    Overflow,
    NonPositiveRate,
    NoConvergence,
    TooLarge,
    BadSpec,
    BadModel,
    BadConfig,
};

inline const char* errc_name(Errc e) {
    switch (e) {
        case Errc::NonCommensurate: return "NonCommensurate";
        case Errc::DistinctItems: return "DistinctItems";
        case Errc::InadmissibleTrace: return "InadmissibleTrace";
        case Errc::InadmissibleRule: return "InadmissibleRule";
        case Errc::MissingChild: return "MissingChild";
        case Errc::ObstacleViolation: return "ObstacleViolation";
        case Errc::Overflow: return "Overflow";
        case Errc::NonPositiveRate: return "NonPositiveRate";
        case Errc::NoConvergence: return "NoConvergence";
        case Errc::TooLarge: return "TooLarge";
        case Errc::BadSpec: return "BadSpec";
        case Errc::BadModel: return "BadModel";
        case Errc::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

struct SolverError : std::runtime_error {
    Errc code;
    SolverError(Errc c, const std::string& msg)
        : std::runtime_error(std::string(errc_name(c)) + ": " + msg), code(c) {}
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw SolverError(c, msg); }

inline void require(bool ok, Errc c, const std::string& msg) {
    if (!ok) fail(c, msg);
}

// Node-equality tolerance for detecting Y = O on the lattice; both sides come
// out of the same recursion, so equality holds up to rounding.
inline double eps_eq(double scale) { return 1e-9 * (1.0 + std::abs(scale)); }

// Dense row-major table of trivially copyable cells.
template <typename T>
class Table {
  public:
    Table() = default;
    Table(std::size_t rows, std::size_t cols, T fill = T())
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    T operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<T> data_;
};

// Dense row-major matrix, the only linear-algebra shape the solvers need.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    double* row(std::size_t r) { return data_.data() + r * cols_; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

// y = P * x for a row-stochastic kernel P (S x S) and column vector x.
inline void kernel_apply(const Matrix& p, const std::vector<double>& x, std::vector<double>& y) {
    const std::size_t n = p.rows();
    y.assign(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const double* prow = p.row(s);
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) acc += prow[t] * x[t];
        y[s] = acc;
    }
}

// Worker count for per-slice parallelism, from IMPULSE_THREADS (default 1).
inline int thread_count() {
    const char* env = std::getenv("IMPULSE_THREADS");
    const int n = env ? std::atoi(env) : 1;
    return n < 1 ? 1 : n;
}

// Runs fn(0..n-1); slices must write disjoint state. The first exception is
// rethrown on the calling thread.
template <typename F>
void parallel_for(int n, F&& fn) {
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

// log-space analogue: y_s = log sum_t P(s,t) exp(x_t), stabilised by the row max.
inline void kernel_apply_log(const Matrix& p, const std::vector<double>& logx,
                             std::vector<double>& y) {
    const std::size_t n = p.rows();
    y.assign(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const double* prow = p.row(s);
        double m = -1e308;
        for (std::size_t t = 0; t < n; ++t)
            if (prow[t] > 0.0 && logx[t] > m) m = logx[t];
        if (m <= -1e308) {
            y[s] = -1e308;
            continue;
        }
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t)
            if (prow[t] > 0.0) acc += prow[t] * std::exp(logx[t] - m);
        y[s] = m + std::log(acc);
    }
}

}  // namespace impulse
