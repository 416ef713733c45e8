#include "emrecon/eval.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "emrecon/parallel.hpp"

namespace emrecon {

ErrorReport error_report(const std::vector<ScalarField>& recon,
                         const std::vector<ScalarField>& truth) {
    if (recon.size() != truth.size())
        throw std::invalid_argument("error_report: frame count mismatch");
    if (recon.empty()) throw std::invalid_argument("error_report: no frames");

    ErrorReport r;
    double pooled_sum = 0.0, pooled_sq = 0.0;
    std::size_t pooled_n = 0;
    for (std::size_t f = 0; f < recon.size(); ++f) {
        if (recon[f].shape != truth[f].shape)
            throw std::invalid_argument("error_report: shape mismatch at frame " +
                                        std::to_string(f));
        double acc = 0.0;
        for (std::size_t i = 0; i < recon[f].values.size(); ++i) {
            const double d = std::abs(recon[f].values[i] - truth[f].values[i]);
            acc += d;
            pooled_sum += d;
            pooled_sq += d * d;
        }
        pooled_n += recon[f].values.size();
        r.per_frame_mae.push_back(acc / recon[f].values.size());
    }
    for (double m : r.per_frame_mae) r.mean_mae += m;
    r.mean_mae /= r.per_frame_mae.size();

    double var_frames = 0.0;
    for (double m : r.per_frame_mae) var_frames += (m - r.mean_mae) * (m - r.mean_mae);
    r.sigma_frames = std::sqrt(var_frames / r.per_frame_mae.size());

    const double pooled_mean = pooled_sum / pooled_n;
    r.sigma_pooled = std::sqrt(std::max(0.0, pooled_sq / pooled_n - pooled_mean * pooled_mean));
    r.accuracy = 100.0 * (1.0 - r.mean_mae);
    return r;
}

namespace {

std::mutex fftw_mutex;  // FFTW planning is not thread-safe

struct HilbertPlan {
    fftw_plan fwd{}, inv{};
    int n = 0;

    explicit HilbertPlan(int n_) : n(n_) {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fftw_complex* buf = fftw_alloc_complex(n);
        fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
        inv = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_free(buf);
    }
    ~HilbertPlan() {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }
    HilbertPlan(const HilbertPlan&) = delete;
    HilbertPlan& operator=(const HilbertPlan&) = delete;
};

/// In-place analytic signal of the mean-removed series in buf.
void analytic_inplace(const HilbertPlan& plan, fftw_complex* buf) {
    const int n = plan.n;
    fftw_execute_dft(plan.fwd, buf, buf);
    // Double positive frequencies, zero negative ones; DC and (for even n)
    // Nyquist stay as they are.
    const int pos_hi = (n + 1) / 2;            // last strictly positive bin + 1
    for (int i = 1; i < pos_hi; ++i) {
        buf[i][0] *= 2.0;
        buf[i][1] *= 2.0;
    }
    for (int i = n / 2 + 1; i < n; ++i) {
        buf[i][0] = 0.0;
        buf[i][1] = 0.0;
    }
    fftw_execute_dft(plan.inv, buf, buf);
    const double inv_n = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        buf[i][0] *= inv_n;
        buf[i][1] *= inv_n;
    }
}

}  // namespace

std::vector<std::complex<double>> analytic_signal(const std::vector<double>& series) {
    const int n = static_cast<int>(series.size());
    if (n < 2) throw std::invalid_argument("analytic_signal: series too short");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= n;

    HilbertPlan plan(n);
    fftw_complex* buf = fftw_alloc_complex(n);
    for (int i = 0; i < n; ++i) {
        buf[i][0] = series[i] - mean;
        buf[i][1] = 0.0;
    }
    analytic_inplace(plan, buf);
    std::vector<std::complex<double>> out(n);
    for (int i = 0; i < n; ++i) out[i] = {buf[i][0], buf[i][1]};
    fftw_free(buf);
    return out;
}

std::vector<double> hilbert_phase(const std::vector<double>& series, int min_len) {
    if (static_cast<int>(series.size()) < min_len)
        throw std::invalid_argument("hilbert_phase: series too short (min " +
                                    std::to_string(min_len) + " frames)");
    const auto sig = analytic_signal(series);
    double amp = 0.0;
    for (const auto& z : sig) amp = std::max(amp, std::abs(z));
    if (amp < 1e-12)
        throw std::invalid_argument("hilbert_phase: zero-amplitude series, phase undefined");
    std::vector<double> phase(sig.size());
    for (std::size_t i = 0; i < sig.size(); ++i) phase[i] = std::arg(sig[i]);
    return phase;
}

PhaseStack hilbert_phase_fields(const std::vector<ScalarField>& u_frames, int min_len) {
    const int n = static_cast<int>(u_frames.size());
    if (n < min_len)
        throw std::invalid_argument("hilbert_phase_fields: need at least " +
                                    std::to_string(min_len) + " frames");
    const GridShape shape = u_frames.front().shape;
    for (const auto& f : u_frames)
        if (f.shape != shape)
            throw std::invalid_argument("hilbert_phase_fields: frames must share one shape");

    PhaseStack out;
    out.valid = ScalarField(shape, 1.0);
    out.phase.assign(n, ScalarField(shape));
    const std::size_t cells = shape.cell_count();

    HilbertPlan plan(n);
#pragma omp parallel num_threads(worker_count())
    {
        fftw_complex* buf = fftw_alloc_complex(n);
#pragma omp for schedule(static)
        for (std::size_t cell = 0; cell < cells; ++cell) {
            double mean = 0.0;
            for (int t = 0; t < n; ++t) mean += u_frames[t].values[cell];
            mean /= n;
            double spread = 0.0;
            for (int t = 0; t < n; ++t) {
                buf[t][0] = u_frames[t].values[cell] - mean;
                buf[t][1] = 0.0;
                spread = std::max(spread, std::abs(buf[t][0]));
            }
            if (spread < 1e-12) {
                out.valid.values[cell] = 0.0;
                for (int t = 0; t < n; ++t) out.phase[t].values[cell] = 0.0;
                continue;
            }
            analytic_inplace(plan, buf);
            for (int t = 0; t < n; ++t)
                out.phase[t].values[cell] = std::atan2(buf[t][1], buf[t][0]);
        }
        fftw_free(buf);
    }
    return out;
}

namespace {

double wrap_pi(double a) {
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

/// Winding of one 2D plaquette with corner phases p00..p01 (loop order).
int plaquette_winding(double p00, double p10, double p11, double p01) {
    const double w = wrap_pi(p10 - p00) + wrap_pi(p11 - p10) + wrap_pi(p01 - p11) +
                     wrap_pi(p00 - p01);
    if (w > std::numbers::pi) return 1;
    if (w < -std::numbers::pi) return -1;
    return 0;
}

}  // namespace

std::vector<FilamentPoint> phase_singularities_frame(const ScalarField& phase,
                                                     const ScalarField* valid) {
    if (phase.shape.ndim() != 2)
        throw std::invalid_argument("phase_singularities_frame: 2D fields only");
    std::vector<FilamentPoint> out;
    const int nx = phase.shape.nx(), ny = phase.shape.ny();
    for (int y = 0; y + 1 < ny; ++y)
        for (int x = 0; x + 1 < nx; ++x) {
            if (valid && (valid->at(x, y) == 0.0 || valid->at(x + 1, y) == 0.0 ||
                          valid->at(x + 1, y + 1) == 0.0 || valid->at(x, y + 1) == 0.0))
                continue;
            const int w = plaquette_winding(phase.at(x, y), phase.at(x + 1, y),
                                            phase.at(x + 1, y + 1), phase.at(x, y + 1));
            if (w != 0) out.push_back({x + 0.5, y + 0.5, 0.0, w});
        }
    return out;
}

FilamentSet phase_singularities(const PhaseStack& stack) {
    FilamentSet out;
    out.shape = stack.valid.shape;
    for (const auto& p : stack.phase)
        out.per_frame.push_back(phase_singularities_frame(p, &stack.valid));
    return out;
}

FilamentSet filaments_3d(const PhaseStack& stack) {
    const GridShape& g = stack.valid.shape;
    if (g.ndim() != 3) throw std::invalid_argument("filaments_3d: 3D phase volumes required");
    const int nx = g.nx(), ny = g.ny(), nz = g.nz();

    FilamentSet out;
    out.shape = g;
    out.per_frame.resize(stack.phase.size());

#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::size_t f = 0; f < stack.phase.size(); ++f) {
        const ScalarField& phi = stack.phase[f];
        const ScalarField& valid = stack.valid;
        std::map<std::tuple<int, int, int>, int> voxels;

        auto probe = [&](int x0, int y0, int z0, int ax_a, int ax_b) {
            // plaquette spanning unit steps along axes ax_a, ax_b from (x0,y0,z0)
            int c[3] = {x0, y0, z0};
            auto at = [&](int da, int db) {
                int p[3] = {c[0], c[1], c[2]};
                p[ax_a] += da;
                p[ax_b] += db;
                return g.index(p[0], p[1], p[2]);
            };
            if (valid.values[at(0, 0)] == 0.0 || valid.values[at(1, 0)] == 0.0 ||
                valid.values[at(1, 1)] == 0.0 || valid.values[at(0, 1)] == 0.0)
                return;
            const int w =
                plaquette_winding(phi.values[at(0, 0)], phi.values[at(1, 0)],
                                  phi.values[at(1, 1)], phi.values[at(0, 1)]);
            if (w != 0) {
                double p[3] = {static_cast<double>(c[0]), static_cast<double>(c[1]),
                               static_cast<double>(c[2])};
                p[ax_a] += 0.5;
                p[ax_b] += 0.5;
                const auto key = std::make_tuple(static_cast<int>(std::lround(p[0])),
                                                 static_cast<int>(std::lround(p[1])),
                                                 static_cast<int>(std::lround(p[2])));
                auto it = voxels.find(key);
                if (it == voxels.end()) voxels.emplace(key, w);
            }
        };

        for (int z = 0; z < nz; ++z)
            for (int y = 0; y + 1 < ny; ++y)
                for (int x = 0; x + 1 < nx; ++x) probe(x, y, z, 0, 1);
        for (int z = 0; z + 1 < nz; ++z)
            for (int y = 0; y < ny; ++y)
                for (int x = 0; x + 1 < nx; ++x) probe(x, y, z, 0, 2);
        for (int z = 0; z + 1 < nz; ++z)
            for (int y = 0; y + 1 < ny; ++y)
                for (int x = 0; x < nx; ++x) probe(x, y, z, 1, 2);

        std::vector<FilamentPoint> pts;
        for (const auto& [key, w] : voxels)
            pts.push_back({static_cast<double>(std::get<0>(key)),
                           static_cast<double>(std::get<1>(key)),
                           static_cast<double>(std::get<2>(key)), w});
        out.per_frame[f] = std::move(pts);
    }
    return out;
}

namespace {

double directed_mean_nn(const std::vector<FilamentPoint>& from,
                        const std::vector<FilamentPoint>& to) {
    double acc = 0.0;
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to) {
            const double d2 = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) +
                              (p.z - q.z) * (p.z - q.z);
            best = std::min(best, d2);
        }
        acc += std::sqrt(best);
    }
    return acc / from.size();
}

}  // namespace

FilamentDistance filament_distance(const FilamentSet& truth, const FilamentSet& recon) {
    if (truth.shape != recon.shape)
        throw std::invalid_argument("filament_distance: sets from different grids");
    if (truth.per_frame.size() != recon.per_frame.size())
        throw std::invalid_argument("filament_distance: frame count mismatch");

    FilamentDistance out;
    double acc = 0.0;
    int both_empty = 0;
    for (std::size_t f = 0; f < truth.per_frame.size(); ++f) {
        const auto& a = truth.per_frame[f];
        const auto& b = recon.per_frame[f];
        if (a.empty() && b.empty()) {
            ++both_empty;
            continue;
        }
        if (a.empty() || b.empty()) {
            ++out.frames_excluded;
            continue;
        }
        acc += 0.5 * (directed_mean_nn(a, b) + directed_mean_nn(b, a));
        ++out.frames_used;
    }
    if (out.frames_used > 0)
        out.mean = acc / out.frames_used;
    else if (out.frames_excluded == 0)
        out.empty = both_empty > 0 || truth.per_frame.empty();
    return out;
}

int filament_component_count(const std::vector<FilamentPoint>& points) {
    const int n = static_cast<int>(points.size());
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (std::abs(points[i].x - points[j].x) <= 1.0 &&
                std::abs(points[i].y - points[j].y) <= 1.0 &&
                std::abs(points[i].z - points[j].z) <= 1.0)
                parent[find(i)] = find(j);
        }
    int count = 0;
    for (int i = 0; i < n; ++i)
        if (find(i) == i) ++count;
    return count;
}

}  // namespace emrecon
