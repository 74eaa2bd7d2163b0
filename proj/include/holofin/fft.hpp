#ifndef HOLOFIN_FFT_HPP
#define HOLOFIN_FFT_HPP

#include <complex>
#include <vector>

namespace holofin {

// 2D complex DFT, row-major H x W grids.
//
// Convention (fixed so golden files stay bit-stable): the forward transform
// carries no scaling, the inverse carries 1/(H*W). Plans are cached per size
// and created with FFTW_ESTIMATE so the algorithm choice never depends on
// runtime measurements; execution on distinct buffers is thread-safe.
namespace fft {

void forward2d(int h, int w, const std::complex<double>* in, std::complex<double>* out);
void inverse2d(int h, int w, const std::complex<double>* in, std::complex<double>* out);

inline std::vector<std::complex<double>> forward2d(int h, int w,
                                                   const std::vector<std::complex<double>>& in) {
    std::vector<std::complex<double>> out(in.size());
    forward2d(h, w, in.data(), out.data());
    return out;
}

inline std::vector<std::complex<double>> inverse2d(int h, int w,
                                                   const std::vector<std::complex<double>>& in) {
    std::vector<std::complex<double>> out(in.size());
    inverse2d(h, w, in.data(), out.data());
    return out;
}

} // namespace fft

} // namespace holofin

#endif
