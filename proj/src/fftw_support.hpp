#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

namespace levychaos::detail {

// FFTW planning is not thread safe; executing a plan is.
std::mutex& fftw_planner_mutex();

// Smallest n >= lo of the form 2^a 3^b 5^c.
[[nodiscard]] std::size_t good_fft_size(std::size_t lo);

// out[i] = sum_j in[j] kernel[i - j + K] for i, j in [0, width), kernel
// supported on -K..K with K >= width - 1. Direct sums for narrow windows,
// FFT otherwise.
class WindowConvolver {
public:
    WindowConvolver(std::vector<double> kernel, std::size_t width);
    ~WindowConvolver();
    WindowConvolver(WindowConvolver&&) noexcept;
    WindowConvolver& operator=(WindowConvolver&&) noexcept;
    WindowConvolver(const WindowConvolver&) = delete;
    WindowConvolver& operator=(const WindowConvolver&) = delete;

    // Scratch buffers for one thread.
    struct Workspace;
    [[nodiscard]] std::unique_ptr<Workspace, void (*)(Workspace*)> workspace() const;

    void apply(const double* in, double* out, Workspace& ws) const;
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] bool uses_fft() const noexcept { return fft_size_ != 0; }

private:
    struct Plan;
    std::vector<double> kernel_;
    std::size_t width_;
    std::size_t half_;         // K
    std::size_t fft_size_ = 0;
    std::unique_ptr<Plan> plan_;
};

}  // namespace levychaos::detail
