#include "fftw_support.hpp"

#include <fftw3.h>

#include <algorithm>
#include <stdexcept>

#include "levychaos/errors.hpp"

namespace levychaos::detail {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t good_fft_size(std::size_t lo) {
    std::size_t best = 1;
    while (best < lo) best <<= 1;
    for (std::size_t p5 = 1; p5 < best; p5 *= 5)
        for (std::size_t p3 = p5; p3 < best; p3 *= 3) {
            std::size_t n = p3;
            while (n < lo) n <<= 1;
            best = std::min(best, n);
        }
    return best;
}

struct WindowConvolver::Plan {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    fftw_complex* kernel_hat = nullptr;

    ~Plan() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
        if (kernel_hat) fftw_free(kernel_hat);
    }
};

struct WindowConvolver::Workspace {
    double* real = nullptr;
    fftw_complex* spec = nullptr;
};

namespace {

void free_workspace(WindowConvolver::Workspace* ws) {
    if (!ws) return;
    if (ws->real) fftw_free(ws->real);
    if (ws->spec) fftw_free(ws->spec);
    delete ws;
}

constexpr std::size_t kDirectWidth = 96;

}  // namespace

WindowConvolver::WindowConvolver(std::vector<double> kernel, std::size_t width)
    : kernel_(std::move(kernel)), width_(width) {
    if (width_ == 0 || kernel_.size() % 2 == 0) throw ParameterError("kernel must have odd length");
    half_ = kernel_.size() / 2;
    if (half_ + 1 < width_) throw ParameterError("kernel support narrower than the window");
    if (width_ <= kDirectWidth) return;

    fft_size_ = good_fft_size(width_ + 2 * half_);
    plan_ = std::make_unique<Plan>();
    const std::size_t P = fft_size_;
    double* real = fftw_alloc_real(P);
    fftw_complex* spec = fftw_alloc_complex(P / 2 + 1);
    plan_->kernel_hat = fftw_alloc_complex(P / 2 + 1);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan_->forward = fftw_plan_dft_r2c_1d(static_cast<int>(P), real, spec, FFTW_ESTIMATE);
        plan_->backward = fftw_plan_dft_c2r_1d(static_cast<int>(P), spec, real, FFTW_ESTIMATE);
    }
    std::fill(real, real + P, 0.0);
    std::copy(kernel_.begin(), kernel_.end(), real);
    fftw_execute_dft_r2c(plan_->forward, real, plan_->kernel_hat);
    const double scale = 1.0 / static_cast<double>(P);
    for (std::size_t k = 0; k <= P / 2; ++k) {
        plan_->kernel_hat[k][0] *= scale;
        plan_->kernel_hat[k][1] *= scale;
    }
    fftw_free(real);
    fftw_free(spec);
}

WindowConvolver::~WindowConvolver() = default;
WindowConvolver::WindowConvolver(WindowConvolver&&) noexcept = default;
WindowConvolver& WindowConvolver::operator=(WindowConvolver&&) noexcept = default;

std::unique_ptr<WindowConvolver::Workspace, void (*)(WindowConvolver::Workspace*)>
WindowConvolver::workspace() const {
    auto* ws = new Workspace;
    if (fft_size_ != 0) {
        ws->real = fftw_alloc_real(fft_size_);
        ws->spec = fftw_alloc_complex(fft_size_ / 2 + 1);
    }
    return {ws, &free_workspace};
}

void WindowConvolver::apply(const double* in, double* out, Workspace& ws) const {
    const std::size_t W = width_;
    if (fft_size_ == 0) {
        const double* k = kernel_.data() + half_;  // k[m], |m| <= half_
        for (std::size_t i = 0; i < W; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < W; ++j) s += in[j] * k[static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j)];
            out[i] = s;
        }
        return;
    }
    const std::size_t P = fft_size_;
    std::copy(in, in + W, ws.real);
    std::fill(ws.real + W, ws.real + P, 0.0);
    fftw_execute_dft_r2c(plan_->forward, ws.real, ws.spec);
    for (std::size_t k = 0; k <= P / 2; ++k) {
        const double a = ws.spec[k][0], b = ws.spec[k][1];
        const double c = plan_->kernel_hat[k][0], d = plan_->kernel_hat[k][1];
        ws.spec[k][0] = a * c - b * d;
        ws.spec[k][1] = a * d + b * c;
    }
    fftw_execute_dft_c2r(plan_->backward, ws.spec, ws.real);
    std::copy(ws.real + half_, ws.real + half_ + W, out);
}

}  // namespace levychaos::detail
