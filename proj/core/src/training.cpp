#include "rnnlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rnnlab/param_visit.hpp"
#include "rnnlab/rng.hpp"

namespace rnnlab {

namespace {

void acc_grads(GradientSet& into, const GradientSet& from) {
    std::vector<std::vector<double>*> dst;
    for_each_array(into, [&](const std::string&, std::vector<double>& a) { dst.push_back(&a); });
    std::size_t k = 0;
    for_each_array(const_cast<const GradientSet&>(from),
                   [&](const std::string&, const std::vector<double>& a) {
                       std::vector<double>& d = *dst[k++];
                       for (std::size_t j = 0; j < a.size(); ++j) d[j] += a[j];
                   });
}

}  // namespace

BatchResult batch_bptt(const NetworkConfig& cfg, const StackParams& params,
                       std::span<const ToyDataset::Sequence* const> batch) {
    BatchResult result;
    result.grads = zeros_like(params);
    for (const ToyDataset::Sequence* seq : batch) {
        BpttResult r = bptt(cfg, params, seq->frames, seq->labels);
        result.loss += r.loss;
        result.counted_frames += r.counted_frames;
        acc_grads(result.grads, r.grads);
    }
    return result;
}

double global_norm(const GradientSet& grads) {
    double sq = 0.0;
    for_each_array(grads, [&](const std::string&, const std::vector<double>& a) {
        for (double v : a) sq += v * v;
    });
    return std::sqrt(sq);
}

void sgd_update(StackParams& params, const GradientSet& grads, double lr, double clip_norm) {
    if (lr < 0.0 || clip_norm <= 0.0) {
        throw std::invalid_argument("sgd_update: lr must be >= 0 and clip_norm > 0");
    }
    const double norm = global_norm(grads);
    const double factor = norm > clip_norm ? clip_norm / norm : 1.0;

    std::vector<std::vector<double>*> dst;
    for_each_array(params, [&](const std::string&, std::vector<double>& a) { dst.push_back(&a); });
    std::size_t k = 0;
    for_each_array(grads, [&](const std::string&, const std::vector<double>& a) {
        std::vector<double>& p = *dst[k++];
        for (std::size_t j = 0; j < a.size(); ++j) p[j] -= lr * factor * a[j];
    });
}

EpochMetrics evaluate(const NetworkConfig& cfg, const StackParams& params,
                      const ToyDataset& data) {
    double total_loss = 0.0;
    std::size_t counted = 0, correct = 0;
    for (const auto& seq : data.sequences) {
        const std::vector<Vector> logits = stack_forward(cfg, params, seq.frames);
        const LossResult r = sequence_loss(logits, seq.labels);
        total_loss += r.total;
        counted += r.counted_frames;
        for (std::size_t t = 0; t < logits.size(); ++t) {
            if (seq.labels[t] == kIgnoreLabel) continue;
            const auto& z = logits[t].data;
            const std::size_t argmax = std::max_element(z.begin(), z.end()) - z.begin();
            if (static_cast<int>(argmax) == seq.labels[t]) ++correct;
        }
    }
    EpochMetrics m;
    m.loss = counted ? total_loss / static_cast<double>(counted) : 0.0;
    m.frame_acc = counted ? static_cast<double>(correct) / static_cast<double>(counted) : 0.0;
    return m;
}

TrainResult train(const TrainConfig& cfg, const NetworkConfig& net, const ToyDataset& data) {
    if (data.sequences.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.lr < 0.0 || cfg.clip_norm <= 0.0 || cfg.epochs < 0 || cfg.batch_size < 1) {
        throw std::invalid_argument("train: bad hyperparameters");
    }
    if (net.input_dim != data.input_dim ||
        net.output_dim != static_cast<std::size_t>(data.num_classes)) {
        throw std::invalid_argument("train: network dims do not match dataset");
    }

    TrainResult result;
    result.params = init_stack_params(net, cfg.init_seed);

    std::vector<std::size_t> order(data.sequences.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto rng = make_rng(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), rng);

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<const ToyDataset::Sequence*> batch;
            for (std::size_t k = start; k < stop; ++k)
                batch.push_back(&data.sequences[order[k]]);

            BatchResult b = batch_bptt(net, result.params, batch);
            if (!std::isfinite(b.loss)) {
                throw std::runtime_error("train: diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch) + ", batch starting at " +
                                         std::to_string(start));
            }
            if (b.counted_frames == 0) continue;
            // Normalize to a per-frame gradient so lr is scale-free.
            const double inv = 1.0 / static_cast<double>(b.counted_frames);
            for_each_array(b.grads, [&](const std::string&, std::vector<double>& a) {
                for (double& v : a) v *= inv;
            });
            sgd_update(result.params, b.grads, cfg.lr, cfg.clip_norm);
        }

        EpochMetrics m = evaluate(net, result.params, data);
        m.epoch = epoch;
        result.history.push_back(m);
    }
    return result;
}

}  // namespace rnnlab
