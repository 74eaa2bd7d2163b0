#include "holofin/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace holofin {
namespace fft {

namespace {

// FFTW planner is not thread-safe; executing a plan on new arrays is.
// FFTW_UNALIGNED keeps the plan valid for any caller buffer and removes the
// alignment dependence that could otherwise select different kernels between
// runs.
class PlanCache {
public:
    fftw_plan get(int h, int w, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(h, w, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> dummy(static_cast<std::size_t>(h) * w);
        fftw_plan p = fftw_plan_dft_2d(
            h, w,
            reinterpret_cast<fftw_complex*>(dummy.data()),
            reinterpret_cast<fftw_complex*>(dummy.data()),
            sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& kv : plans_) fftw_destroy_plan(kv.second);
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

} // namespace

void forward2d(int h, int w, const std::complex<double>* in, std::complex<double>* out) {
    fftw_plan p = cache().get(h, w, FFTW_FORWARD);
    fftw_execute_dft(p,
                     reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void inverse2d(int h, int w, const std::complex<double>* in, std::complex<double>* out) {
    fftw_plan p = cache().get(h, w, FFTW_BACKWARD);
    fftw_execute_dft(p,
                     reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double scale = 1.0 / (static_cast<double>(h) * static_cast<double>(w));
    const std::size_t n = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

} // namespace fft
} // namespace holofin
