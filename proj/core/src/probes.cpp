#include "rnnlab/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rnnlab/rng.hpp"

namespace rnnlab {

HistogramReport activation_histogram(const std::vector<StateTrace>& traces, int layer,
                                     int units_per_layer, int bins, double clip,
                                     CellKind kind, std::uint64_t sample_seed) {
    if (traces.empty()) throw std::invalid_argument("activation_histogram: no traces");
    if (bins < 1) throw std::invalid_argument("activation_histogram: bins must be >= 1");
    if (clip <= 0.0) throw std::invalid_argument("activation_histogram: clip must be > 0");
    if (units_per_layer < 1)
        throw std::invalid_argument("activation_histogram: units_per_layer must be >= 1");

    std::vector<const StateTrace*> selected;
    for (const auto& t : traces)
        if (t.layer == layer && !t.steps.empty()) selected.push_back(&t);
    if (selected.empty()) {
        throw std::invalid_argument("activation_histogram: unknown layer " +
                                    std::to_string(layer));
    }
    const std::size_t H = selected.front()->unit_count();
    for (const auto* t : selected) {
        if (t->unit_count() != H)
            throw std::invalid_argument("activation_histogram: traces disagree on unit count");
    }

    HistogramReport report;
    report.layer = layer;
    report.clip = clip;
    // Bounded cells live in (-1, 1); unbounded ones are clipped for display.
    const bool bounded = kind == CellKind::gru;
    report.lo = bounded ? -1.0 : -clip;
    report.hi = bounded ? 1.0 : clip;
    const double width = (report.hi - report.lo) / bins;
    report.edges.resize(bins + 1);
    for (int k = 0; k <= bins; ++k) report.edges[k] = report.lo + width * k;
    report.edges.back() = report.hi;

    std::vector<std::size_t> unit_ids(H);
    std::iota(unit_ids.begin(), unit_ids.end(), 0);
    if (static_cast<std::size_t>(units_per_layer) < H) {
        auto rng = make_rng(sample_seed, 30 + static_cast<std::uint64_t>(layer));
        std::shuffle(unit_ids.begin(), unit_ids.end(), rng);
        unit_ids.resize(units_per_layer);
        std::sort(unit_ids.begin(), unit_ids.end());
    }

    report.pooled.assign(bins, 0);
    for (std::size_t u : unit_ids) {
        HistogramReport::UnitHistogram uh;
        uh.unit = u;
        uh.counts.assign(bins, 0);
        for (const auto* t : selected) {
            for (const auto& step : t->steps) {
                double v = step.c[u];
                if (!bounded) v = std::clamp(v, -clip, clip);
                int idx = static_cast<int>(std::floor((v - report.lo) / width));
                idx = std::clamp(idx, 0, bins - 1);
                ++uh.counts[idx];
                ++report.pooled[idx];
            }
        }
        report.units.push_back(std::move(uh));
    }
    return report;
}

namespace {

// Centered frame-by-unit matrix as rows.
std::vector<std::vector<double>> centered_frames(const StateTrace& trace) {
    const std::size_t T = trace.steps.size();
    const std::size_t H = trace.unit_count();
    std::vector<double> mean(H, 0.0);
    for (const auto& s : trace.steps)
        for (std::size_t u = 0; u < H; ++u) mean[u] += s.c[u];
    for (double& m : mean) m /= static_cast<double>(T);
    std::vector<std::vector<double>> rows(T, std::vector<double>(H));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t u = 0; u < H; ++u) rows[t][u] = trace.steps[t].c[u] - mean[u];
    return rows;
}

// Top eigenvector of a symmetric PSD matrix by power iteration, kept
// orthogonal to the vectors in `against`. Deflation amplifies any leftover
// component along `against` by the eigenvalue ratio, so one Gram-Schmidt
// sweep per iteration is not enough: a single subtraction leaves an O(ulp)
// residual that the next multiply blows up by lambda1/lambda2. Sweeping
// twice pins the overlap at rounding level.
std::vector<double> power_iterate(const std::vector<std::vector<double>>& cov,
                                  const std::vector<std::vector<double>>& against,
                                  std::uint64_t seed) {
    const std::size_t n = cov.size();
    auto rng = make_rng(seed, 50);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = gauss(rng);

    double scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) scale += cov[k][k];

    auto orthogonalize = [&](std::vector<double>& w) {
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (const auto& b : against) {
                double proj = 0.0;
                for (std::size_t k = 0; k < n; ++k) proj += w[k] * b[k];
                for (std::size_t k = 0; k < n; ++k) w[k] -= proj * b[k];
            }
        }
    };
    auto normalize = [&](std::vector<double>& w) {
        double nrm = 0.0;
        for (double x : w) nrm += x * x;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-300) return false;
        for (double& x : w) x /= nrm;
        return true;
    };

    orthogonalize(v);
    if (!normalize(v)) {
        // Degenerate start; any orthonormal completion works, the projected
        // variance is ~0 either way.
        std::fill(v.begin(), v.end(), 0.0);
        if (n > against.size()) v[against.size()] = 1.0;
        orthogonalize(v);
        normalize(v);
        return v;
    }

    std::vector<double> w(n);
    for (int iter = 0; iter < 2000; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += cov[i][j] * v[j];
            w[i] = s;
        }
        orthogonalize(w);
        double nrm = 0.0;
        for (double x : w) nrm += x * x;
        nrm = std::sqrt(nrm);
        // The deflated operator is numerically zero along the remaining
        // subspace: the direction no longer matters.
        if (nrm <= 1e-14 * scale) break;
        for (double& x : w) x /= nrm;
        double delta = 0.0;
        for (std::size_t k = 0; k < n; ++k) delta += (w[k] - v[k]) * (w[k] - v[k]);
        v = w;
        if (delta < 1e-26) break;
    }
    return v;
}

void fix_sign(std::vector<double>& v) {
    std::size_t idx = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (std::abs(v[k]) > std::abs(v[idx])) idx = k;
    if (v[idx] < 0.0)
        for (double& x : v) x = -x;
}

std::vector<std::array<double, 2>> pca_project(const StateTrace& trace) {
    const auto rows = centered_frames(trace);
    const std::size_t T = rows.size();
    const std::size_t H = rows.front().size();

    std::vector<std::vector<double>> cov(H, std::vector<double>(H, 0.0));
    for (const auto& r : rows)
        for (std::size_t a = 0; a < H; ++a)
            for (std::size_t b = a; b < H; ++b) cov[a][b] += r[a] * r[b];
    const double denom = T > 1 ? static_cast<double>(T - 1) : 1.0;
    for (std::size_t a = 0; a < H; ++a)
        for (std::size_t b = a; b < H; ++b) {
            cov[a][b] /= denom;
            cov[b][a] = cov[a][b];
        }

    std::vector<double> v1 = power_iterate(cov, {}, 0);
    fix_sign(v1);
    std::vector<double> v2;
    if (H > 1) {
        v2 = power_iterate(cov, {v1}, 1);
        fix_sign(v2);
    } else {
        v2.assign(1, 0.0);
    }

    std::vector<std::array<double, 2>> points(T);
    for (std::size_t t = 0; t < T; ++t) {
        double x = 0.0, y = 0.0;
        for (std::size_t u = 0; u < H; ++u) {
            x += rows[t][u] * v1[u];
            y += rows[t][u] * v2[u];
        }
        points[t] = {x, y};
    }
    return points;
}

// Exact t-SNE, the O(n^2) variant: per-point bandwidths matched to the
// target perplexity by bisection, then 1000 gradient steps with momentum and
// early exaggeration.
std::vector<std::array<double, 2>> tsne_project(const StateTrace& trace, std::uint64_t seed) {
    const auto rows = centered_frames(trace);
    const std::size_t T = rows.size();
    const std::size_t H = rows.front().size();
    if (T > 2000) throw std::invalid_argument("tsne: limited to 2000 frames");

    std::vector<std::vector<double>> d2(T, std::vector<double>(T, 0.0));
    for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = a + 1; b < T; ++b) {
            double s = 0.0;
            for (std::size_t u = 0; u < H; ++u) {
                const double d = rows[a][u] - rows[b][u];
                s += d * d;
            }
            d2[a][b] = d2[b][a] = s;
        }

    const double perplexity = std::min(30.0, (static_cast<double>(T) - 1.0) / 3.0);
    const double target_entropy = std::log(perplexity);
    std::vector<std::vector<double>> P(T, std::vector<double>(T, 0.0));
    for (std::size_t a = 0; a < T; ++a) {
        double beta = 1.0, beta_lo = 0.0, beta_hi = 1e300;
        std::vector<double> p(T, 0.0);
        for (int it = 0; it < 50; ++it) {
            double sum = 0.0;
            for (std::size_t b = 0; b < T; ++b) {
                p[b] = b == a ? 0.0 : std::exp(-beta * d2[a][b]);
                sum += p[b];
            }
            if (sum <= 0.0) sum = 1e-300;
            double entropy = 0.0;
            for (std::size_t b = 0; b < T; ++b) {
                if (p[b] <= 0.0) continue;
                const double q = p[b] / sum;
                entropy -= q * std::log(q);
            }
            if (std::abs(entropy - target_entropy) < 1e-5) break;
            if (entropy > target_entropy) {
                beta_lo = beta;
                beta = beta_hi >= 1e300 ? beta * 2.0 : (beta + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = (beta + beta_lo) / 2.0;
            }
        }
        double sum = 0.0;
        for (std::size_t b = 0; b < T; ++b) {
            p[b] = b == a ? 0.0 : std::exp(-beta * d2[a][b]);
            sum += p[b];
        }
        if (sum <= 0.0) sum = 1e-300;
        for (std::size_t b = 0; b < T; ++b) P[a][b] = p[b] / sum;
    }
    for (std::size_t a = 0; a < T; ++a)
        for (std::size_t b = a + 1; b < T; ++b) {
            const double v = std::max((P[a][b] + P[b][a]) / (2.0 * T), 1e-12);
            P[a][b] = P[b][a] = v;
        }

    auto rng = make_rng(seed, 60);
    std::normal_distribution<double> gauss(0.0, 1e-2);
    std::vector<std::array<double, 2>> Y(T), velocity(T, {0.0, 0.0});
    for (auto& y : Y) y = {gauss(rng), gauss(rng)};

    const int iters = 1000, exaggerate_until = 250;
    const double lr = 200.0;
    std::vector<std::vector<double>> qnum(T, std::vector<double>(T, 0.0));
    for (int iter = 0; iter < iters; ++iter) {
        const double exaggeration = iter < exaggerate_until ? 12.0 : 1.0;
        const double momentum = iter < exaggerate_until ? 0.5 : 0.8;

        double qsum = 0.0;
        for (std::size_t a = 0; a < T; ++a)
            for (std::size_t b = a + 1; b < T; ++b) {
                const double dx = Y[a][0] - Y[b][0], dy = Y[a][1] - Y[b][1];
                const double q = 1.0 / (1.0 + dx * dx + dy * dy);
                qnum[a][b] = qnum[b][a] = q;
                qsum += 2.0 * q;
            }
        if (qsum <= 0.0) qsum = 1e-300;

        for (std::size_t a = 0; a < T; ++a) {
            double gx = 0.0, gy = 0.0;
            for (std::size_t b = 0; b < T; ++b) {
                if (a == b) continue;
                const double q = std::max(qnum[a][b] / qsum, 1e-12);
                const double coeff = 4.0 * (exaggeration * P[a][b] - q) * qnum[a][b];
                gx += coeff * (Y[a][0] - Y[b][0]);
                gy += coeff * (Y[a][1] - Y[b][1]);
            }
            velocity[a][0] = momentum * velocity[a][0] - lr * gx;
            velocity[a][1] = momentum * velocity[a][1] - lr * gy;
        }
        for (std::size_t a = 0; a < T; ++a) {
            Y[a][0] += velocity[a][0];
            Y[a][1] += velocity[a][1];
        }
    }
    return Y;
}

}  // namespace

double trace_smoothness(const StateTrace& trace) {
    const std::size_t T = trace.steps.size();
    if (T < 2) throw std::invalid_argument("trace_smoothness: need at least 2 frames");
    const std::size_t H = trace.unit_count();

    std::vector<double> mean(H, 0.0);
    for (const auto& s : trace.steps)
        for (std::size_t u = 0; u < H; ++u) mean[u] += s.c[u];
    for (double& m : mean) m /= static_cast<double>(T);

    double step_sum = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t) {
        double s = 0.0;
        for (std::size_t u = 0; u < H; ++u) {
            const double d = trace.steps[t + 1].c[u] - trace.steps[t].c[u];
            s += d * d;
        }
        step_sum += std::sqrt(s);
    }
    double disp_sum = 0.0;
    for (const auto& s : trace.steps) {
        double d2 = 0.0;
        for (std::size_t u = 0; u < H; ++u) {
            const double d = s.c[u] - mean[u];
            d2 += d * d;
        }
        disp_sum += std::sqrt(d2);
    }

    const double mean_step = step_sum / static_cast<double>(T - 1);
    const double mean_disp = disp_sum / static_cast<double>(T);
    if (mean_disp == 0.0) return 0.0;
    return mean_step / mean_disp;
}

TraceProjection project_trace(const StateTrace& trace, ProjectionMethod method,
                              std::uint64_t tsne_seed) {
    if (trace.steps.size() < 3)
        throw std::invalid_argument("project_trace: need at least 3 frames");
    TraceProjection proj;
    proj.layer = trace.layer;
    proj.method = method;
    proj.points = method == ProjectionMethod::pca ? pca_project(trace)
                                                  : tsne_project(trace, tsne_seed);
    proj.smoothness = trace_smoothness(trace);
    return proj;
}

PerturbationReport perturbation_probe(const NetworkConfig& cfg, const StackParams& params,
                                      std::span<const Vector> seq, int noise_pos,
                                      int noise_len, double noise_std, double epsilon,
                                      std::uint64_t noise_seed) {
    const int T = static_cast<int>(seq.size());
    if (T == 0) throw std::invalid_argument("perturbation_probe: empty sequence");
    if (noise_pos < 0 || noise_pos > T || noise_len < 0) {
        throw std::invalid_argument("perturbation_probe: insertion at " +
                                    std::to_string(noise_pos) + "+" +
                                    std::to_string(noise_len) + " out of range for " +
                                    std::to_string(T) + " frames");
    }
    if (noise_std < 0.0 || epsilon <= 0.0) {
        throw std::invalid_argument("perturbation_probe: need noise_std >= 0 and epsilon > 0");
    }

    std::vector<Vector> noisy;
    noisy.reserve(seq.size() + noise_len);
    noisy.insert(noisy.end(), seq.begin(), seq.begin() + noise_pos);
    auto rng = make_rng(noise_seed, 70);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 0; k < noise_len; ++k) {
        Vector frame(cfg.input_dim);
        for (double& v : frame.data) v = noise_std * gauss(rng);
        noisy.push_back(std::move(frame));
    }
    noisy.insert(noisy.end(), seq.begin() + noise_pos, seq.end());

    StateRecorder clean_rec(cfg.layers), noisy_rec(cfg.layers);
    stack_forward(cfg, params, seq, &clean_rec);
    stack_forward(cfg, params, noisy, &noisy_rec);

    // The sustain window: a decay is accepted once |delta| stays below
    // epsilon for this many consecutive aligned frames (or to sequence end).
    constexpr int kSustain = 5;
    auto decay_of = [&](const std::vector<double>& curve) {
        const int span = static_cast<int>(curve.size()) - noise_pos;
        for (int d = 0; d <= span; ++d) {
            bool quiet = true;
            for (int j = d; j < std::min(d + kSustain, span); ++j) {
                if (curve[noise_pos + j] >= epsilon) {
                    quiet = false;
                    break;
                }
            }
            if (quiet) return d;
        }
        return span;
    };

    PerturbationReport report;
    report.noise_pos = noise_pos;
    report.noise_len = noise_len;
    report.noise_std = noise_std;
    report.epsilon = epsilon;

    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const StateTrace* clean = nullptr;
        const StateTrace* pert = nullptr;
        for (const auto& t : clean_rec.traces())
            if (t.layer == static_cast<int>(l)) clean = &t;
        for (const auto& t : noisy_rec.traces())
            if (t.layer == static_cast<int>(l)) pert = &t;

        PerturbationReport::Layer out;
        out.layer = static_cast<int>(l);
        const std::size_t H = clean->unit_count();
        out.abs_delta.assign(H, std::vector<double>(T, 0.0));
        for (int t = 0; t < T; ++t) {
            const int aligned = t < noise_pos ? t : t + noise_len;
            for (std::size_t u = 0; u < H; ++u) {
                out.abs_delta[u][t] =
                    std::abs(pert->steps[aligned].c[u] - clean->steps[t].c[u]);
            }
        }
        out.decay_len.resize(H);
        std::vector<double> max_curve(T, 0.0);
        for (std::size_t u = 0; u < H; ++u) {
            out.decay_len[u] = decay_of(out.abs_delta[u]);
            for (int t = 0; t < T; ++t)
                max_curve[t] = std::max(max_curve[t], out.abs_delta[u][t]);
        }
        out.layer_decay_len = decay_of(max_curve);
        report.layers.push_back(std::move(out));
    }
    return report;
}

double median_decay_length(const PerturbationReport::Layer& layer) {
    if (layer.decay_len.empty()) return 0.0;
    std::vector<int> sorted = layer.decay_len;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

}  // namespace rnnlab
