#include "rnnlab/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "rnnlab/autodiff.hpp"
#include "rnnlab/rng.hpp"

namespace rnnlab {

std::size_t ToyDataset::labeled_frames() const {
    std::size_t n = 0;
    for (const auto& s : sequences)
        for (int y : s.labels)
            if (y != kIgnoreLabel) ++n;
    return n;
}

ToyDataset gen_pseudo_phone_task(int num_seq, int seq_len, int num_classes,
                                 std::size_t input_dim, int min_dwell, int max_dwell,
                                 double noise_std, std::uint64_t seed) {
    if (min_dwell < 1 || min_dwell > max_dwell || max_dwell > 50) {
        throw std::invalid_argument("phone task: dwell bounds must satisfy 1 <= min <= max <= 50");
    }
    if (num_seq < 1 || seq_len < 1 || num_classes < 2 || input_dim == 0) {
        throw std::invalid_argument("phone task: need num_seq, seq_len >= 1, classes >= 2, input_dim >= 1");
    }

    ToyDataset data;
    data.num_classes = num_classes;
    data.input_dim = input_dim;
    data.seed = seed;

    // Fixed unit-norm class means, drawn once.
    auto mean_rng = make_rng(seed, 10);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vector> means;
    for (int c = 0; c < num_classes; ++c) {
        Vector m(input_dim);
        double nrm = 0.0;
        for (double& v : m.data) {
            v = gauss(mean_rng);
            nrm += v * v;
        }
        nrm = std::sqrt(nrm);
        if (nrm == 0.0) nrm = 1.0;
        for (double& v : m.data) v /= nrm;
        means.push_back(std::move(m));
    }

    auto rng = make_rng(seed, 11);
    std::uniform_int_distribution<int> class_dist(0, num_classes - 1);
    std::uniform_int_distribution<int> dwell_dist(min_dwell, max_dwell);
    std::normal_distribution<double> noise(0.0, 1.0);

    for (int s = 0; s < num_seq; ++s) {
        ToyDataset::Sequence sequence;
        sequence.frames.reserve(seq_len);
        sequence.labels.reserve(seq_len);
        int t = 0;
        while (t < seq_len) {
            const int cls = class_dist(rng);
            const int dwell = dwell_dist(rng);
            for (int d = 0; d < dwell && t < seq_len; ++d, ++t) {
                Vector frame = means[cls];
                if (noise_std > 0.0) {
                    for (double& v : frame.data) v += noise_std * noise(rng);
                }
                sequence.frames.push_back(std::move(frame));
                sequence.labels.push_back(cls);
            }
        }
        data.sequences.push_back(std::move(sequence));
    }
    return data;
}

ToyDataset gen_delayed_recall(int num_seq, int delay, int num_symbols, std::uint64_t seed) {
    if (delay < 0 || delay > 50) {
        throw std::invalid_argument("delayed recall: delay must lie in [0, 50]");
    }
    if (num_seq < 1 || num_symbols < 2) {
        throw std::invalid_argument("delayed recall: need num_seq >= 1 and num_symbols >= 2");
    }

    ToyDataset data;
    data.num_classes = num_symbols;
    data.input_dim = static_cast<std::size_t>(num_symbols);
    data.seed = seed;

    // Balanced initial symbols, shuffled order; the query shows an
    // independently drawn symbol that the model must ignore.
    std::vector<int> initial(num_seq);
    for (int s = 0; s < num_seq; ++s) initial[s] = s % num_symbols;
    auto rng = make_rng(seed, 20);
    std::shuffle(initial.begin(), initial.end(), rng);
    std::uniform_int_distribution<int> symbol_dist(0, num_symbols - 1);

    for (int s = 0; s < num_seq; ++s) {
        ToyDataset::Sequence sequence;
        const int T = delay + 2;  // symbol, `delay` blanks, query
        sequence.frames.assign(T, Vector(data.input_dim));
        sequence.labels.assign(T, kIgnoreLabel);
        sequence.frames[0][initial[s]] = 1.0;
        const int query_symbol = symbol_dist(rng);
        sequence.frames[T - 1][query_symbol] = 1.0;
        sequence.labels[T - 1] = initial[s];
        data.sequences.push_back(std::move(sequence));
    }
    return data;
}

double majority_class_accuracy(const ToyDataset& data) {
    std::map<int, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& s : data.sequences) {
        for (int y : s.labels) {
            if (y == kIgnoreLabel) continue;
            ++counts[y];
            ++total;
        }
    }
    if (total == 0) return 0.0;
    std::size_t best = 0;
    for (const auto& [_, n] : counts) best = std::max(best, n);
    return static_cast<double>(best) / static_cast<double>(total);
}

}  // namespace rnnlab
