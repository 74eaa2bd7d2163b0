#include "holofin/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>

#include "holofin/errors.hpp"
#include "holofin/rng.hpp"

namespace holofin::fin {

ad::Tensor rotate_quarter(const ad::Tensor& x, int quarter) {
    if (x.shape.size() != 3) throw config_error("rotate_quarter: expected a [C,H,W] tensor");
    int q = quarter % 4;
    if (q < 0) q += 4;
    const int c = x.shape[0], h = x.shape[1], w = x.shape[2];
    if (q == 0) return x;

    const int oh = (q == 2) ? h : w, ow = (q == 2) ? w : h;
    ad::Tensor out({c, oh, ow});
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    for (int ch = 0; ch < c; ++ch) {
        const double* src = x.values.data() + ch * in_plane;
        double* dst = out.values.data() + ch * out_plane;
        for (int y = 0; y < oh; ++y)
            for (int xx = 0; xx < ow; ++xx) {
                int sy, sx;
                if (q == 1) {  // 90 degrees counter-clockwise
                    sy = xx;
                    sx = w - 1 - y;
                } else if (q == 2) {
                    sy = h - 1 - y;
                    sx = w - 1 - xx;
                } else {  // 270
                    sy = h - 1 - xx;
                    sx = y;
                }
                dst[static_cast<std::size_t>(y) * ow + xx] =
                    src[static_cast<std::size_t>(sy) * w + sx];
            }
    }
    return out;
}

namespace {

void check_samples(const FinConfig& config, const std::vector<TrainSample>& set,
                   const char* which) {
    const std::vector<int> in_shape = {config.hologram_count, config.input_side,
                                       config.input_side};
    const std::vector<int> gt_shape = {2, config.input_side, config.input_side};
    for (const auto& s : set) {
        if (s.input.shape != in_shape || s.target.shape != gt_shape)
            throw config_error(std::string("train_fin: ") + which +
                               " sample shape does not match the config");
    }
}

struct EvalStats {
    double loss = 0.0;
    double amp_rmse = 0.0;
};

EvalStats evaluate(const FinModel& model, const std::vector<TrainSample>& set) {
    EvalStats acc;
    for (const auto& s : set) {
        ad::Tape t;
        ModelNodes nodes = register_parameters(t, model);
        ad::NodeId pred = fin_forward(t, model.config, t.leaf(s.input), nodes);
        ad::NodeId loss = total_loss(t, pred, t.leaf(s.target), model.config.alpha,
                                     model.config.beta, model.config.gamma);
        acc.loss += t.value(loss).values[0];

        const auto& p = t.value(pred).values;
        const std::size_t plane = s.target.numel() / 2;
        double se = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            const double pa = std::hypot(p[i], p[plane + i]);
            const double ga = std::hypot(s.target.values[i], s.target.values[plane + i]);
            se += (pa - ga) * (pa - ga);
        }
        acc.amp_rmse += std::sqrt(se / static_cast<double>(plane));
    }
    const double n = static_cast<double>(set.size());
    acc.loss /= n;
    acc.amp_rmse /= n;
    return acc;
}

}  // namespace

TrainResult train_fin(const FinConfig& config, const std::vector<TrainSample>& train_set,
                      const std::vector<TrainSample>& val_set, const TrainOptions& options) {
    config.validate();
    options.adam.validate();
    if (options.epochs < 1) throw config_error("train_fin: epochs must be >= 1");
    if (options.batch_size < 1) throw config_error("train_fin: batch_size must be >= 1");
    if (train_set.empty()) throw config_error("train_fin: empty training set");
    if (val_set.empty()) throw config_error("train_fin: empty validation set");
    check_samples(config, train_set, "training");
    check_samples(config, val_set, "validation");

    FinModel model = make_model(config, mix_seed(options.seed, 1));
    Rng order_rng(mix_seed(options.seed, 2));
    Rng aug_rng(mix_seed(options.seed, 3));

    ad::AdamState state;
    state.config = options.adam;
    const auto names = model.parameter_names();

    const std::size_t n = train_set.size();
    const std::size_t batches = (n + options.batch_size - 1) / options.batch_size;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        // Fisher-Yates with the raw draws so the ordering is reproducible.
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[order_rng.uniform_int(i)]);

        double loss_sum = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            state.scheduler_time =
                epoch + static_cast<double>(b) / static_cast<double>(batches);
            const std::size_t begin = b * options.batch_size;
            const std::size_t end = std::min(n, begin + options.batch_size);

            ad::Tape t;
            ModelNodes nodes = register_parameters(t, model);
            ad::NodeId batch_sum = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const TrainSample& s = train_set[order[i]];
                const int rot = options.augment ? static_cast<int>(aug_rng.uniform_int(4)) : 0;
                ad::NodeId in = t.leaf(rotate_quarter(s.input, rot));
                ad::NodeId gt = t.leaf(rotate_quarter(s.target, rot));
                ad::NodeId pred = fin_forward(t, config, in, nodes);
                ad::NodeId loss =
                    total_loss(t, pred, gt, config.alpha, config.beta, config.gamma);
                batch_sum = (i == begin) ? loss : ad::add(t, batch_sum, loss);
            }
            const double count = static_cast<double>(end - begin);
            ad::NodeId batch_loss = ad::scale(t, batch_sum, 1.0 / count);
            const double loss_value = t.value(batch_loss).values[0];
            if (!std::isfinite(loss_value))
                throw numeric_error("train_fin: non-finite loss at epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(b));
            loss_sum += loss_value * count;

            t.backward(batch_loss);
            std::vector<ad::Tensor> grads;
            grads.reserve(nodes.ordered.size());
            for (ad::NodeId id : nodes.ordered) grads.push_back(t.grad(id));
            std::vector<const ad::Tensor*> grad_ptrs;
            for (const auto& g : grads) grad_ptrs.push_back(&g);
            ad::adam_step(state, model.parameters(), grad_ptrs, names);
        }

        const EvalStats val = evaluate(model, val_set);
        EpochLog row;
        row.epoch = epoch;
        row.lr = ad::cosine_warm_restart_lr(epoch, options.adam.t0, options.adam.t_mult,
                                            options.adam.eta_max, options.adam.eta_min);
        row.train_loss = loss_sum / static_cast<double>(n);
        row.val_loss = val.loss;
        row.val_amp_rmse = val.amp_rmse;
        result.log.push_back(row);

        if (val.loss < best_val) {
            best_val = val.loss;
            result.model = model;
            result.best_epoch = epoch;
        }
    }

    if (!options.log_csv_path.empty()) write_train_log_csv(options.log_csv_path, result.log);
    return result;
}

void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log) {
    std::ofstream os(path);
    if (!os) throw format_error("train log: cannot open for writing: " + path);
    os << "epoch,lr,train_loss,val_loss,val_amp_rmse\n";
    char line[256];
    for (const auto& row : log) {
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g\n", row.epoch, row.lr,
                      row.train_loss, row.val_loss, row.val_amp_rmse);
        os << line;
    }
    if (!os) throw format_error("train log: write failed: " + path);
}

}  // namespace holofin::fin
