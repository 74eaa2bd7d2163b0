#include "holofin/ops.hpp"

#include <cmath>
#include <complex>

#include "holofin/errors.hpp"
#include "holofin/fft.hpp"

namespace holofin::ad {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape != b.shape) throw config_error(std::string(op) + ": operand shapes differ");
}

// Last two extents of a rank >= 2 tensor, plus the product of the rest.
struct SpatialDims {
    int h, w;
    std::size_t batch;
};

SpatialDims spatial_dims(const Tensor& t, const char* op) {
    if (t.shape.size() < 2) throw config_error(std::string(op) + ": tensor rank must be >= 2");
    int h = t.shape[t.shape.size() - 2];
    int w = t.shape[t.shape.size() - 1];
    std::size_t batch = t.numel() / (static_cast<std::size_t>(h) * w);
    return {h, w, batch};
}

// Shared forward/adjoint machinery for the DFT pair. `inverse` selects the
// scaled inverse transform; the adjoint of each direction is the other one
// rescaled by the grid size.
NodePair dft_pair(Tape& t, NodeId re, NodeId im, bool inverse, const char* name) {
    const Tensor& vre = t.value(re);
    const Tensor& vim = t.value(im);
    require_same_shape(vre, vim, name);
    SpatialDims d = spatial_dims(vre, name);
    const std::size_t plane = static_cast<std::size_t>(d.h) * d.w;

    Tensor out_re(vre.shape), out_im(vre.shape);
    std::vector<std::complex<double>> buf(plane), res(plane);
    for (std::size_t b = 0; b < d.batch; ++b) {
        const std::size_t base = b * plane;
        for (std::size_t i = 0; i < plane; ++i)
            buf[i] = {vre.values[base + i], vim.values[base + i]};
        if (inverse)
            fft::inverse2d(d.h, d.w, buf.data(), res.data());
        else
            fft::forward2d(d.h, d.w, buf.data(), res.data());
        for (std::size_t i = 0; i < plane; ++i) {
            out_re.values[base + i] = res[i].real();
            out_im.values[base + i] = res[i].imag();
        }
    }

    NodeId ore = t.record(std::move(out_re), {re, im}, nullptr);
    NodeId oim = t.record(
        std::move(out_im), {re, im},
        [re, im, ore, inverse, d, plane](Tape& tp, NodeId self) {
            const Tensor& gre = tp.grad(ore);
            const Tensor& gim = tp.grad(self);
            std::vector<double> acc_re(gre.values.size()), acc_im(gre.values.size());
            std::vector<std::complex<double>> buf(plane), res(plane);
            const double n = static_cast<double>(plane);
            for (std::size_t b = 0; b < d.batch; ++b) {
                const std::size_t base = b * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    buf[i] = {gre.values[base + i], gim.values[base + i]};
                if (inverse) {
                    // adjoint of (1/N)·DFT^H is (1/N)·DFT
                    fft::forward2d(d.h, d.w, buf.data(), res.data());
                    for (std::size_t i = 0; i < plane; ++i) res[i] /= n;
                } else {
                    // adjoint of DFT is N·(1/N)·DFT^H = DFT^H
                    fft::inverse2d(d.h, d.w, buf.data(), res.data());
                    for (std::size_t i = 0; i < plane; ++i) res[i] *= n;
                }
                for (std::size_t i = 0; i < plane; ++i) {
                    acc_re[base + i] = res[i].real();
                    acc_im[base + i] = res[i].imag();
                }
            }
            tp.accumulate(re, acc_re);
            tp.accumulate(im, acc_im);
        });
    return {ore, oim};
}

}  // namespace

NodePair fft2(Tape& t, NodeId re, NodeId im) { return dft_pair(t, re, im, false, "fft2"); }

NodePair ifft2(Tape& t, NodeId re, NodeId im) { return dft_pair(t, re, im, true, "ifft2"); }

namespace {

// Maps window row r in [0, 2k] to the wrapped source row for frequency r - k.
inline int wrapped_index(int r, int k, int n) {
    int f = r - k;
    return f >= 0 ? f : f + n;
}

}  // namespace

NodePair spectral_truncate(Tape& t, NodeId re, NodeId im, int k) {
    const Tensor& vre = t.value(re);
    const Tensor& vim = t.value(im);
    require_same_shape(vre, vim, "spectral_truncate");
    SpatialDims d = spatial_dims(vre, "spectral_truncate");
    if (k < 0) throw config_error("spectral_truncate: k must be >= 0");
    const int win = 2 * k + 1;
    if (win > d.h || win > d.w)
        throw config_error("spectral_truncate: window 2k+1 exceeds the grid");

    std::vector<int> out_shape = vre.shape;
    out_shape[out_shape.size() - 2] = win;
    out_shape[out_shape.size() - 1] = win;
    Tensor out_re(out_shape), out_im(out_shape);

    const std::size_t in_plane = static_cast<std::size_t>(d.h) * d.w;
    const std::size_t out_plane = static_cast<std::size_t>(win) * win;
    for (std::size_t b = 0; b < d.batch; ++b)
        for (int r = 0; r < win; ++r) {
            const std::size_t src_row =
                b * in_plane + static_cast<std::size_t>(wrapped_index(r, k, d.h)) * d.w;
            const std::size_t dst_row = b * out_plane + static_cast<std::size_t>(r) * win;
            for (int c = 0; c < win; ++c) {
                const std::size_t src = src_row + wrapped_index(c, k, d.w);
                out_re.values[dst_row + c] = vre.values[src];
                out_im.values[dst_row + c] = vim.values[src];
            }
        }

    NodeId ore = t.record(std::move(out_re), {re, im}, nullptr);
    NodeId oim = t.record(std::move(out_im), {re, im},
                          [re, im, ore, k, d, win, in_plane, out_plane](Tape& tp, NodeId self) {
                              const Tensor& gre = tp.grad(ore);
                              const Tensor& gim = tp.grad(self);
                              std::vector<double> acc_re(d.batch * in_plane, 0.0);
                              std::vector<double> acc_im(d.batch * in_plane, 0.0);
                              for (std::size_t b = 0; b < d.batch; ++b)
                                  for (int r = 0; r < win; ++r) {
                                      const std::size_t dst_row =
                                          b * in_plane +
                                          static_cast<std::size_t>(wrapped_index(r, k, d.h)) * d.w;
                                      const std::size_t src_row =
                                          b * out_plane + static_cast<std::size_t>(r) * win;
                                      for (int c = 0; c < win; ++c) {
                                          const std::size_t dst = dst_row + wrapped_index(c, k, d.w);
                                          acc_re[dst] += gre.values[src_row + c];
                                          acc_im[dst] += gim.values[src_row + c];
                                      }
                                  }
                              tp.accumulate(re, acc_re);
                              tp.accumulate(im, acc_im);
                          });
    return {ore, oim};
}

NodePair spectral_pad(Tape& t, NodeId re, NodeId im, int out_h, int out_w) {
    const Tensor& vre = t.value(re);
    const Tensor& vim = t.value(im);
    require_same_shape(vre, vim, "spectral_pad");
    SpatialDims d = spatial_dims(vre, "spectral_pad");
    if (d.h != d.w || d.h % 2 == 0)
        throw config_error("spectral_pad: input window must be square with odd side");
    const int k = (d.h - 1) / 2;
    const int win = d.h;
    if (win > out_h || win > out_w)
        throw config_error("spectral_pad: window exceeds the output grid");

    std::vector<int> out_shape = vre.shape;
    out_shape[out_shape.size() - 2] = out_h;
    out_shape[out_shape.size() - 1] = out_w;
    Tensor out_re(out_shape), out_im(out_shape);

    const std::size_t in_plane = static_cast<std::size_t>(win) * win;
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
    for (std::size_t b = 0; b < d.batch; ++b)
        for (int r = 0; r < win; ++r) {
            const std::size_t dst_row =
                b * out_plane + static_cast<std::size_t>(wrapped_index(r, k, out_h)) * out_w;
            const std::size_t src_row = b * in_plane + static_cast<std::size_t>(r) * win;
            for (int c = 0; c < win; ++c) {
                const std::size_t dst = dst_row + wrapped_index(c, k, out_w);
                out_re.values[dst] = vre.values[src_row + c];
                out_im.values[dst] = vim.values[src_row + c];
            }
        }

    NodeId ore = t.record(std::move(out_re), {re, im}, nullptr);
    NodeId oim = t.record(std::move(out_im), {re, im},
                          [re, im, ore, k, d, win, out_h, out_w, in_plane, out_plane](
                              Tape& tp, NodeId self) {
                              const Tensor& gre = tp.grad(ore);
                              const Tensor& gim = tp.grad(self);
                              std::vector<double> acc_re(d.batch * in_plane, 0.0);
                              std::vector<double> acc_im(d.batch * in_plane, 0.0);
                              for (std::size_t b = 0; b < d.batch; ++b)
                                  for (int r = 0; r < win; ++r) {
                                      const std::size_t src_row =
                                          b * out_plane +
                                          static_cast<std::size_t>(wrapped_index(r, k, out_h)) *
                                              out_w;
                                      const std::size_t dst_row =
                                          b * in_plane + static_cast<std::size_t>(r) * win;
                                      for (int c = 0; c < win; ++c) {
                                          const std::size_t src =
                                              src_row + wrapped_index(c, k, out_w);
                                          acc_re[dst_row + c] = gre.values[src];
                                          acc_im[dst_row + c] = gim.values[src];
                                      }
                                  }
                              tp.accumulate(re, acc_re);
                              tp.accumulate(im, acc_im);
                          });
    return {ore, oim};
}

namespace {

struct ChannelDims {
    int channels;
    std::size_t plane;
};

ChannelDims channel_dims(const Tensor& t, const char* op) {
    if (t.shape.size() < 2) throw config_error(std::string(op) + ": tensor rank must be >= 2");
    return {t.shape[0], t.numel() / static_cast<std::size_t>(t.shape[0])};
}

}  // namespace

NodePair spaf_weight_mul(Tape& t, NodeId re, NodeId im, NodeId w) {
    const Tensor& vre = t.value(re);
    const Tensor& vim = t.value(im);
    const Tensor& vw = t.value(w);
    require_same_shape(vre, vim, "spaf_weight_mul");
    require_same_shape(vre, vw, "spaf_weight_mul");
    ChannelDims d = channel_dims(vre, "spaf_weight_mul");

    // S = Σ_i F_i, shared by every output channel.
    std::vector<double> s_re(d.plane, 0.0), s_im(d.plane, 0.0);
    for (int c = 0; c < d.channels; ++c) {
        const std::size_t base = static_cast<std::size_t>(c) * d.plane;
        for (std::size_t p = 0; p < d.plane; ++p) {
            s_re[p] += vre.values[base + p];
            s_im[p] += vim.values[base + p];
        }
    }
    Tensor out_re(vre.shape), out_im(vre.shape);
    for (int c = 0; c < d.channels; ++c) {
        const std::size_t base = static_cast<std::size_t>(c) * d.plane;
        for (std::size_t p = 0; p < d.plane; ++p) {
            out_re.values[base + p] = vw.values[base + p] * s_re[p];
            out_im.values[base + p] = vw.values[base + p] * s_im[p];
        }
    }

    NodeId ore = t.record(std::move(out_re), {re, im, w}, nullptr);
    NodeId oim = t.record(
        std::move(out_im), {re, im, w},
        [re, im, w, ore, d, s_re, s_im](Tape& tp, NodeId self) {
            const Tensor& gre = tp.grad(ore);
            const Tensor& gim = tp.grad(self);
            const Tensor& vw = tp.value(w);
            std::vector<double> gw(vw.values.size());
            std::vector<double> gs_re(d.plane, 0.0), gs_im(d.plane, 0.0);
            for (int c = 0; c < d.channels; ++c) {
                const std::size_t base = static_cast<std::size_t>(c) * d.plane;
                for (std::size_t p = 0; p < d.plane; ++p) {
                    gw[base + p] =
                        gre.values[base + p] * s_re[p] + gim.values[base + p] * s_im[p];
                    gs_re[p] += vw.values[base + p] * gre.values[base + p];
                    gs_im[p] += vw.values[base + p] * gim.values[base + p];
                }
            }
            tp.accumulate(w, gw);
            // dS broadcasts back to every input channel.
            std::vector<double> acc(d.plane * d.channels);
            for (int c = 0; c < d.channels; ++c)
                for (std::size_t p = 0; p < d.plane; ++p)
                    acc[static_cast<std::size_t>(c) * d.plane + p] = gs_re[p];
            tp.accumulate(re, acc);
            for (int c = 0; c < d.channels; ++c)
                for (std::size_t p = 0; p < d.plane; ++p)
                    acc[static_cast<std::size_t>(c) * d.plane + p] = gs_im[p];
            tp.accumulate(im, acc);
        });
    return {ore, oim};
}

NodePair spaf_weight_mul_full(Tape& t, NodeId re, NodeId im, NodeId w) {
    const Tensor& vre = t.value(re);
    const Tensor& vim = t.value(im);
    const Tensor& vw = t.value(w);
    require_same_shape(vre, vim, "spaf_weight_mul_full");
    ChannelDims d = channel_dims(vre, "spaf_weight_mul_full");
    if (vw.shape.size() != vre.shape.size() + 1 || vw.shape[0] != d.channels ||
        vw.shape[1] != d.channels ||
        vw.numel() != static_cast<std::size_t>(d.channels) * vre.numel())
        throw config_error("spaf_weight_mul_full: weight must be [C,C,spatial...]");

    Tensor out_re(vre.shape, 0.0), out_im(vre.shape, 0.0);
    for (int j = 0; j < d.channels; ++j) {
        const std::size_t out_base = static_cast<std::size_t>(j) * d.plane;
        for (int i = 0; i < d.channels; ++i) {
            const std::size_t w_base =
                (static_cast<std::size_t>(j) * d.channels + i) * d.plane;
            const std::size_t in_base = static_cast<std::size_t>(i) * d.plane;
            for (std::size_t p = 0; p < d.plane; ++p) {
                out_re.values[out_base + p] += vw.values[w_base + p] * vre.values[in_base + p];
                out_im.values[out_base + p] += vw.values[w_base + p] * vim.values[in_base + p];
            }
        }
    }

    NodeId ore = t.record(std::move(out_re), {re, im, w}, nullptr);
    NodeId oim = t.record(
        std::move(out_im), {re, im, w}, [re, im, w, ore, d](Tape& tp, NodeId self) {
            const Tensor& gre = tp.grad(ore);
            const Tensor& gim = tp.grad(self);
            const Tensor& vw = tp.value(w);
            const Tensor& vre = tp.value(re);
            const Tensor& vim = tp.value(im);
            std::vector<double> gw(vw.values.size());
            std::vector<double> acc_re(vre.values.size(), 0.0);
            std::vector<double> acc_im(vre.values.size(), 0.0);
            for (int j = 0; j < d.channels; ++j) {
                const std::size_t out_base = static_cast<std::size_t>(j) * d.plane;
                for (int i = 0; i < d.channels; ++i) {
                    const std::size_t w_base =
                        (static_cast<std::size_t>(j) * d.channels + i) * d.plane;
                    const std::size_t in_base = static_cast<std::size_t>(i) * d.plane;
                    for (std::size_t p = 0; p < d.plane; ++p) {
                        gw[w_base + p] = gre.values[out_base + p] * vre.values[in_base + p] +
                                         gim.values[out_base + p] * vim.values[in_base + p];
                        acc_re[in_base + p] += vw.values[w_base + p] * gre.values[out_base + p];
                        acc_im[in_base + p] += vw.values[w_base + p] * gim.values[out_base + p];
                    }
                }
            }
            tp.accumulate(w, gw);
            tp.accumulate(re, acc_re);
            tp.accumulate(im, acc_im);
        });
    return {ore, oim};
}

NodePair spaf_weight_mul_complex(Tape& t, NodeId re, NodeId im, NodeId w_re, NodeId w_im) {
    const Tensor& vre = t.value(re);
    const Tensor& vim = t.value(im);
    const Tensor& va = t.value(w_re);
    const Tensor& vb = t.value(w_im);
    require_same_shape(vre, vim, "spaf_weight_mul_complex");
    require_same_shape(vre, va, "spaf_weight_mul_complex");
    require_same_shape(vre, vb, "spaf_weight_mul_complex");
    ChannelDims d = channel_dims(vre, "spaf_weight_mul_complex");

    std::vector<double> s_re(d.plane, 0.0), s_im(d.plane, 0.0);
    for (int c = 0; c < d.channels; ++c) {
        const std::size_t base = static_cast<std::size_t>(c) * d.plane;
        for (std::size_t p = 0; p < d.plane; ++p) {
            s_re[p] += vre.values[base + p];
            s_im[p] += vim.values[base + p];
        }
    }
    Tensor out_re(vre.shape), out_im(vre.shape);
    for (int c = 0; c < d.channels; ++c) {
        const std::size_t base = static_cast<std::size_t>(c) * d.plane;
        for (std::size_t p = 0; p < d.plane; ++p) {
            out_re.values[base + p] = va.values[base + p] * s_re[p] - vb.values[base + p] * s_im[p];
            out_im.values[base + p] = va.values[base + p] * s_im[p] + vb.values[base + p] * s_re[p];
        }
    }

    NodeId ore = t.record(std::move(out_re), {re, im, w_re, w_im}, nullptr);
    NodeId oim = t.record(
        std::move(out_im), {re, im, w_re, w_im},
        [re, im, w_re, w_im, ore, d, s_re, s_im](Tape& tp, NodeId self) {
            const Tensor& gre = tp.grad(ore);
            const Tensor& gim = tp.grad(self);
            const Tensor& va = tp.value(w_re);
            const Tensor& vb = tp.value(w_im);
            std::vector<double> ga(va.values.size()), gb(vb.values.size());
            std::vector<double> gs_re(d.plane, 0.0), gs_im(d.plane, 0.0);
            for (int c = 0; c < d.channels; ++c) {
                const std::size_t base = static_cast<std::size_t>(c) * d.plane;
                for (std::size_t p = 0; p < d.plane; ++p) {
                    const double gr = gre.values[base + p];
                    const double gi = gim.values[base + p];
                    ga[base + p] = gr * s_re[p] + gi * s_im[p];
                    gb[base + p] = -gr * s_im[p] + gi * s_re[p];
                    gs_re[p] += va.values[base + p] * gr + vb.values[base + p] * gi;
                    gs_im[p] += -vb.values[base + p] * gr + va.values[base + p] * gi;
                }
            }
            tp.accumulate(w_re, ga);
            tp.accumulate(w_im, gb);
            std::vector<double> acc(d.plane * d.channels);
            for (int c = 0; c < d.channels; ++c)
                for (std::size_t p = 0; p < d.plane; ++p)
                    acc[static_cast<std::size_t>(c) * d.plane + p] = gs_re[p];
            tp.accumulate(re, acc);
            for (int c = 0; c < d.channels; ++c)
                for (std::size_t p = 0; p < d.plane; ++p)
                    acc[static_cast<std::size_t>(c) * d.plane + p] = gs_im[p];
            tp.accumulate(im, acc);
        });
    return {ore, oim};
}

NodeId conv1x1(Tape& t, NodeId x, NodeId k, NodeId b) {
    const Tensor& vx = t.value(x);
    const Tensor& vk = t.value(k);
    const Tensor& vb = t.value(b);
    ChannelDims d = channel_dims(vx, "conv1x1");
    if (vk.shape.size() != 2 || vk.shape[1] != d.channels)
        throw config_error("conv1x1: kernel must be [Cout, Cin] with Cin matching the input");
    const int cout = vk.shape[0];
    if (vb.shape.size() != 1 || vb.shape[0] != cout)
        throw config_error("conv1x1: bias must be [Cout]");

    std::vector<int> out_shape = vx.shape;
    out_shape[0] = cout;
    Tensor out(out_shape);
    for (int o = 0; o < cout; ++o) {
        const std::size_t out_base = static_cast<std::size_t>(o) * d.plane;
        for (std::size_t p = 0; p < d.plane; ++p) out.values[out_base + p] = vb.values[o];
        for (int i = 0; i < d.channels; ++i) {
            const double kv = vk.values[static_cast<std::size_t>(o) * d.channels + i];
            const std::size_t in_base = static_cast<std::size_t>(i) * d.plane;
            for (std::size_t p = 0; p < d.plane; ++p)
                out.values[out_base + p] += kv * vx.values[in_base + p];
        }
    }

    return t.record(std::move(out), {x, k, b}, [x, k, b, d, cout](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& vx = tp.value(x);
        const Tensor& vk = tp.value(k);
        std::vector<double> gx(vx.values.size(), 0.0);
        std::vector<double> gk(vk.values.size(), 0.0);
        std::vector<double> gb(static_cast<std::size_t>(cout), 0.0);
        for (int o = 0; o < cout; ++o) {
            const std::size_t out_base = static_cast<std::size_t>(o) * d.plane;
            for (std::size_t p = 0; p < d.plane; ++p) gb[o] += g.values[out_base + p];
            for (int i = 0; i < d.channels; ++i) {
                const double kv = vk.values[static_cast<std::size_t>(o) * d.channels + i];
                const std::size_t in_base = static_cast<std::size_t>(i) * d.plane;
                double acc = 0.0;
                for (std::size_t p = 0; p < d.plane; ++p) {
                    gx[in_base + p] += kv * g.values[out_base + p];
                    acc += g.values[out_base + p] * vx.values[in_base + p];
                }
                gk[static_cast<std::size_t>(o) * d.channels + i] = acc;
            }
        }
        tp.accumulate(x, gx);
        tp.accumulate(k, gk);
        tp.accumulate(b, gb);
    });
}

NodeId prelu(Tape& t, NodeId x, NodeId a) {
    const Tensor& vx = t.value(x);
    const Tensor& va = t.value(a);
    const bool shared = va.numel() == 1;
    if (!shared) {
        if (vx.shape.empty() || va.shape.size() != 1 || va.shape[0] != vx.shape[0])
            throw config_error("prelu: slope must be scalar or one entry per leading channel");
    }
    const std::size_t plane = shared ? vx.numel() : vx.numel() / vx.shape[0];

    Tensor out(vx.shape);
    for (std::size_t i = 0; i < vx.numel(); ++i) {
        const double slope = va.values[shared ? 0 : i / plane];
        const double v = vx.values[i];
        out.values[i] = v >= 0.0 ? v : slope * v;
    }

    return t.record(std::move(out), {x, a}, [x, a, shared, plane](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& vx = tp.value(x);
        const Tensor& va = tp.value(a);
        std::vector<double> gx(vx.numel());
        std::vector<double> ga(va.numel(), 0.0);
        for (std::size_t i = 0; i < vx.numel(); ++i) {
            const std::size_t c = shared ? 0 : i / plane;
            const double v = vx.values[i];
            if (v >= 0.0) {
                gx[i] = g.values[i];  // gradient at exactly 0 takes the identity branch
            } else {
                gx[i] = va.values[c] * g.values[i];
                ga[c] += g.values[i] * v;
            }
        }
        tp.accumulate(x, gx);
        tp.accumulate(a, ga);
    });
}

namespace {

NodeId pointwise_binary(Tape& t, NodeId x, NodeId y, const char* name, bool subtract) {
    const Tensor& vx = t.value(x);
    const Tensor& vy = t.value(y);
    require_same_shape(vx, vy, name);
    Tensor out(vx.shape);
    for (std::size_t i = 0; i < vx.numel(); ++i)
        out.values[i] = subtract ? vx.values[i] - vy.values[i] : vx.values[i] + vy.values[i];
    return t.record(std::move(out), {x, y}, [x, y, subtract](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        tp.accumulate(x, g.values);
        if (!subtract) {
            tp.accumulate(y, g.values);
        } else {
            std::vector<double> neg(g.values.size());
            for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -g.values[i];
            tp.accumulate(y, neg);
        }
    });
}

}  // namespace

NodeId add(Tape& t, NodeId x, NodeId y) { return pointwise_binary(t, x, y, "add", false); }

NodeId sub(Tape& t, NodeId x, NodeId y) { return pointwise_binary(t, x, y, "sub", true); }

NodeId mul(Tape& t, NodeId x, NodeId y) {
    const Tensor& vx = t.value(x);
    const Tensor& vy = t.value(y);
    require_same_shape(vx, vy, "mul");
    Tensor out(vx.shape);
    for (std::size_t i = 0; i < vx.numel(); ++i) out.values[i] = vx.values[i] * vy.values[i];
    return t.record(std::move(out), {x, y}, [x, y](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& vx = tp.value(x);
        const Tensor& vy = tp.value(y);
        std::vector<double> gx(g.values.size()), gy(g.values.size());
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            gx[i] = g.values[i] * vy.values[i];
            gy[i] = g.values[i] * vx.values[i];
        }
        tp.accumulate(x, gx);
        tp.accumulate(y, gy);
    });
}

NodeId scale(Tape& t, NodeId x, double c) {
    const Tensor& vx = t.value(x);
    Tensor out(vx.shape);
    for (std::size_t i = 0; i < vx.numel(); ++i) out.values[i] = c * vx.values[i];
    return t.record(std::move(out), {x}, [x, c](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        std::vector<double> gx(g.values.size());
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = c * g.values[i];
        tp.accumulate(x, gx);
    });
}

NodeId abs_op(Tape& t, NodeId x) {
    const Tensor& vx = t.value(x);
    Tensor out(vx.shape);
    for (std::size_t i = 0; i < vx.numel(); ++i) out.values[i] = std::abs(vx.values[i]);
    return t.record(std::move(out), {x}, [x](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& vx = tp.value(x);
        std::vector<double> gx(g.values.size());
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double v = vx.values[i];
            gx[i] = v > 0.0 ? g.values[i] : (v < 0.0 ? -g.values[i] : 0.0);
        }
        tp.accumulate(x, gx);
    });
}

NodeId cabs(Tape& t, NodeId re, NodeId im) {
    const Tensor& vre = t.value(re);
    const Tensor& vim = t.value(im);
    require_same_shape(vre, vim, "cabs");
    Tensor out(vre.shape);
    for (std::size_t i = 0; i < vre.numel(); ++i)
        out.values[i] = std::hypot(vre.values[i], vim.values[i]);
    return t.record(std::move(out), {re, im}, [re, im](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& vre = tp.value(re);
        const Tensor& vim = tp.value(im);
        const Tensor& mag = tp.value(self);
        std::vector<double> gre(g.values.size()), gim(g.values.size());
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            if (mag.values[i] > 0.0) {
                gre[i] = g.values[i] * vre.values[i] / mag.values[i];
                gim[i] = g.values[i] * vim.values[i] / mag.values[i];
            } else {
                gre[i] = 0.0;
                gim[i] = 0.0;
            }
        }
        tp.accumulate(re, gre);
        tp.accumulate(im, gim);
    });
}

NodeId mean(Tape& t, NodeId x) {
    const Tensor& vx = t.value(x);
    double acc = 0.0;
    for (double v : vx.values) acc += v;
    const double n = static_cast<double>(vx.numel());
    return t.record(Tensor::scalar(acc / n), {x}, [x, n](Tape& tp, NodeId self) {
        const double g = tp.grad(self).values[0] / n;
        const Tensor& vx = tp.value(x);
        std::vector<double> gx(vx.numel(), g);
        tp.accumulate(x, gx);
    });
}

NodeId select_channel(Tape& t, NodeId x, int c) {
    const Tensor& vx = t.value(x);
    if (vx.shape.empty() || c < 0 || c >= vx.shape[0])
        throw config_error("select_channel: channel index out of range");
    const std::size_t plane = vx.numel() / vx.shape[0];
    std::vector<int> out_shape = vx.shape;
    out_shape[0] = 1;
    Tensor out(out_shape);
    const std::size_t base = static_cast<std::size_t>(c) * plane;
    for (std::size_t p = 0; p < plane; ++p) out.values[p] = vx.values[base + p];
    return t.record(std::move(out), {x}, [x, c, plane](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        for (std::size_t p = 0; p < plane; ++p)
            tp.accumulate_at(x, static_cast<std::size_t>(c) * plane + p, g.values[p]);
    });
}

}  // namespace holofin::ad
