#include "emrecon/mech.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "emrecon/parallel.hpp"

namespace emrecon {

namespace {

constexpr double kDegenerateLen = 1e-9;

struct Exit2d {
    double x, y;   // material exit point on the unit square boundary
    int face;      // 0:-x 1:+x 2:-y 3:+y
    double lambda; // parameter along that face
};

Exit2d square_exit(double dx, double dy) {
    const double inf = std::numeric_limits<double>::infinity();
    const double tx = std::abs(dx) > 1e-15 ? 0.5 / std::abs(dx) : inf;
    const double ty = std::abs(dy) > 1e-15 ? 0.5 / std::abs(dy) : inf;
    const double t = std::min(tx, ty);
    Exit2d e{0.5 + t * dx, 0.5 + t * dy, 0, 0.0};
    if (tx <= ty) {
        e.face = dx > 0 ? 1 : 0;
        e.lambda = std::clamp(e.y, 0.0, 1.0);
    } else {
        e.face = dy > 0 ? 3 : 2;
        e.lambda = std::clamp(e.x, 0.0, 1.0);
    }
    return e;
}

double attach_point(const Attachment& a, const std::vector<double>& pos, int ndim, int c) {
    double v = 0.0;
    for (int i = 0; i < a.count; ++i) v += a.w[i] * pos[static_cast<std::size_t>(a.idx[i]) * ndim + c];
    return v;
}

double attach_distance(const Attachment& a, const Attachment& b, const std::vector<double>& pos,
                       int ndim) {
    double s = 0.0;
    for (int c = 0; c < ndim; ++c) {
        const double d = attach_point(b, pos, ndim, c) - attach_point(a, pos, ndim, c);
        s += d * d;
    }
    return std::sqrt(s);
}

double shoelace(const MechState& st, int cx, int cy) {
    const auto i00 = st.particle_index(cx, cy) * 2;
    const auto i10 = st.particle_index(cx + 1, cy) * 2;
    const auto i11 = st.particle_index(cx + 1, cy + 1) * 2;
    const auto i01 = st.particle_index(cx, cy + 1) * 2;
    const double* p = st.pos.data();
    return 0.5 * ((p[i00] * p[i10 + 1] - p[i10] * p[i00 + 1]) +
                  (p[i10] * p[i11 + 1] - p[i11] * p[i10 + 1]) +
                  (p[i11] * p[i01 + 1] - p[i01] * p[i11 + 1]) +
                  (p[i01] * p[i00 + 1] - p[i00] * p[i01 + 1]));
}

}  // namespace

void MechParams::validate() const {
    if (k_edge < 0 || k_center < 0) throw std::invalid_argument("MechParams: stiffness must be >= 0");
    if (gamma < 0) throw std::invalid_argument("MechParams: gamma must be >= 0");
    if (mass <= 0) throw std::invalid_argument("MechParams: mass must be > 0");
    if (dt <= 0) throw std::invalid_argument("MechParams: dt must be > 0");
    if (!(max_contraction > 0 && max_contraction < 1))
        throw std::invalid_argument("MechParams: max_contraction must be in (0,1)");
    if (c_act < 0) throw std::invalid_argument("MechParams: c_act must be >= 0");
}

void MechState::record_frame(int time_index) {
    history.emplace_back(time_index, pos);
    while (history.size() > history_limit) history.pop_front();
}

MechState build_lattice(const GridShape& cells, const FiberConfig& fibers,
                        const MechParams& params) {
    params.validate();
    for (int d : cells.dims)
        if (d < 1) throw std::invalid_argument("build_lattice: cell dims must be >= 1");

    MechState st;
    st.cells = cells;
    const int ndim = cells.ndim();
    const int nx = cells.nx(), ny = cells.ny(), nz = (ndim == 3) ? cells.nz() : 1;
    const int px = nx + 1, py = ny + 1, pz = (ndim == 3) ? nz + 1 : 1;
    const double h = cells.spacing;

    st.rest.resize(static_cast<std::size_t>(px) * py * pz * ndim);
    for (int z = 0; z < pz; ++z)
        for (int y = 0; y < py; ++y)
            for (int x = 0; x < px; ++x) {
                const std::size_t i = st.particle_index(x, y, z) * ndim;
                st.rest[i] = x * h;
                st.rest[i + 1] = y * h;
                if (ndim == 3) st.rest[i + 2] = z * h;
            }
    st.pos = st.rest;
    st.prev = st.rest;

    // Edge springs along each axis.
    auto add_edge = [&](int ax, int ay, int az, int bx, int by, int bz) {
        EdgeSpring e;
        e.a = static_cast<int>(st.particle_index(ax, ay, az));
        e.b = static_cast<int>(st.particle_index(bx, by, bz));
        double s = 0.0;
        for (int c = 0; c < ndim; ++c) {
            const double d = st.rest[static_cast<std::size_t>(e.b) * ndim + c] -
                             st.rest[static_cast<std::size_t>(e.a) * ndim + c];
            s += d * d;
        }
        e.rest_len = std::sqrt(s);
        st.edges.push_back(e);
    };
    for (int z = 0; z < pz; ++z)
        for (int y = 0; y < py; ++y)
            for (int x = 0; x < nx; ++x) add_edge(x, y, z, x + 1, y, z);
    for (int z = 0; z < pz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < px; ++x) add_edge(x, y, z, x, y + 1, z);
    if (ndim == 3)
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < py; ++y)
                for (int x = 0; x < px; ++x) add_edge(x, y, z, x, y, z + 1);

    // Fiber direction per cell.
    st.fiber.resize(cells.cell_count() * ndim);
    for (int z = 0; z < nz; ++z) {
        double angle_deg = fibers.angle_deg;
        if (ndim == 3 && fibers.mode == FiberConfig::Mode::sheet_stack3d)
            angle_deg = nz > 1 ? fibers.total_rotation_deg * z / (nz - 1) : 0.0;
        const double th = angle_deg * std::numbers::pi / 180.0;
        const double c = std::cos(th), s = std::sin(th);
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const std::size_t i = cells.index(x, y, z) * ndim;
                st.fiber[i] = c;
                st.fiber[i + 1] = s;
                if (ndim == 3) st.fiber[i + 2] = 0.0;
            }
    }

    // Center springs: the fiber-aligned active spring first, then the
    // orthogonal passive one(s). Endpoints attach where the axis through the
    // cell center exits the cell, with weights fixed in material coordinates.
    auto face_attach_2d = [&](int cx, int cy, const Exit2d& e) {
        Attachment a;
        a.count = 2;
        switch (e.face) {
            case 0:
                a.idx[0] = static_cast<int>(st.particle_index(cx, cy));
                a.idx[1] = static_cast<int>(st.particle_index(cx, cy + 1));
                break;
            case 1:
                a.idx[0] = static_cast<int>(st.particle_index(cx + 1, cy));
                a.idx[1] = static_cast<int>(st.particle_index(cx + 1, cy + 1));
                break;
            case 2:
                a.idx[0] = static_cast<int>(st.particle_index(cx, cy));
                a.idx[1] = static_cast<int>(st.particle_index(cx + 1, cy));
                break;
            default:
                a.idx[0] = static_cast<int>(st.particle_index(cx, cy + 1));
                a.idx[1] = static_cast<int>(st.particle_index(cx + 1, cy + 1));
                break;
        }
        a.w[0] = 1.0 - e.lambda;
        a.w[1] = e.lambda;
        return a;
    };

    // In 3D the in-plane axes exit through side faces at mid-height; the
    // bilinear face weights split the 2D edge weights between both z-levels.
    auto face_attach_3d_inplane = [&](int cx, int cy, int cz, const Exit2d& e) {
        Attachment a;
        a.count = 4;
        int x0, y0, x1, y1;
        switch (e.face) {
            case 0: x0 = cx; y0 = cy; x1 = cx; y1 = cy + 1; break;
            case 1: x0 = cx + 1; y0 = cy; x1 = cx + 1; y1 = cy + 1; break;
            case 2: x0 = cx; y0 = cy; x1 = cx + 1; y1 = cy; break;
            default: x0 = cx; y0 = cy + 1; x1 = cx + 1; y1 = cy + 1; break;
        }
        a.idx[0] = static_cast<int>(st.particle_index(x0, y0, cz));
        a.idx[1] = static_cast<int>(st.particle_index(x1, y1, cz));
        a.idx[2] = static_cast<int>(st.particle_index(x0, y0, cz + 1));
        a.idx[3] = static_cast<int>(st.particle_index(x1, y1, cz + 1));
        a.w[0] = 0.5 * (1.0 - e.lambda);
        a.w[1] = 0.5 * e.lambda;
        a.w[2] = 0.5 * (1.0 - e.lambda);
        a.w[3] = 0.5 * e.lambda;
        return a;
    };

    auto add_center = [&](int cell, const Attachment& a, const Attachment& b, bool active) {
        CenterSpring cs;
        cs.p0 = a;
        cs.p1 = b;
        cs.cell = cell;
        cs.active = active;
        cs.rest_len = attach_distance(a, b, st.rest, ndim);
        st.centers.push_back(cs);
    };

    st.rest_measure.resize(cells.cell_count());
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const int cell = static_cast<int>(cells.index(x, y, z));
                const double fx = st.fiber[static_cast<std::size_t>(cell) * ndim];
                const double fy = st.fiber[static_cast<std::size_t>(cell) * ndim + 1];
                if (ndim == 2) {
                    for (int axis = 0; axis < 2; ++axis) {
                        const double dx = axis == 0 ? fx : -fy;
                        const double dy = axis == 0 ? fy : fx;
                        const Exit2d ea = square_exit(dx, dy);
                        const Exit2d eb = square_exit(-dx, -dy);
                        add_center(cell, face_attach_2d(x, y, ea), face_attach_2d(x, y, eb),
                                   axis == 0);
                    }
                } else {
                    for (int axis = 0; axis < 2; ++axis) {
                        const double dx = axis == 0 ? fx : -fy;
                        const double dy = axis == 0 ? fy : fx;
                        const Exit2d ea = square_exit(dx, dy);
                        const Exit2d eb = square_exit(-dx, -dy);
                        add_center(cell, face_attach_3d_inplane(x, y, z, ea),
                                   face_attach_3d_inplane(x, y, z, eb), axis == 0);
                    }
                    Attachment bot, top;
                    bot.count = top.count = 4;
                    bot.idx[0] = static_cast<int>(st.particle_index(x, y, z));
                    bot.idx[1] = static_cast<int>(st.particle_index(x + 1, y, z));
                    bot.idx[2] = static_cast<int>(st.particle_index(x, y + 1, z));
                    bot.idx[3] = static_cast<int>(st.particle_index(x + 1, y + 1, z));
                    top.idx[0] = static_cast<int>(st.particle_index(x, y, z + 1));
                    top.idx[1] = static_cast<int>(st.particle_index(x + 1, y, z + 1));
                    top.idx[2] = static_cast<int>(st.particle_index(x, y + 1, z + 1));
                    top.idx[3] = static_cast<int>(st.particle_index(x + 1, y + 1, z + 1));
                    for (int i = 0; i < 4; ++i) bot.w[i] = top.w[i] = 0.25;
                    add_center(cell, bot, top, false);
                }
                if (ndim == 2) {
                    const auto i00 = st.particle_index(x, y) * 2;
                    const auto i10 = st.particle_index(x + 1, y) * 2;
                    const auto i11 = st.particle_index(x + 1, y + 1) * 2;
                    const auto i01 = st.particle_index(x, y + 1) * 2;
                    const double* p = st.rest.data();
                    st.rest_measure[cell] =
                        0.5 * ((p[i00] * p[i10 + 1] - p[i10] * p[i00 + 1]) +
                               (p[i10] * p[i11 + 1] - p[i11] * p[i10 + 1]) +
                               (p[i11] * p[i01 + 1] - p[i01] * p[i11 + 1]) +
                               (p[i01] * p[i00 + 1] - p[i00] * p[i01 + 1]));
                } else {
                    st.rest_measure[cell] = st.centers[static_cast<std::size_t>(cell) * 3].rest_len;
                }
            }

    // CSR adjacency: particle -> (spring slot, signed weight). Edge springs
    // occupy slots [0, E), center springs [E, E+C).
    const std::size_t n_particles = st.particle_count();
    std::vector<std::vector<std::pair<int, double>>> adj(n_particles);
    for (std::size_t i = 0; i < st.edges.size(); ++i) {
        adj[st.edges[i].a].emplace_back(static_cast<int>(i), 1.0);
        adj[st.edges[i].b].emplace_back(static_cast<int>(i), -1.0);
    }
    const int edge_count = static_cast<int>(st.edges.size());
    for (std::size_t i = 0; i < st.centers.size(); ++i) {
        const CenterSpring& cs = st.centers[i];
        for (int j = 0; j < cs.p0.count; ++j)
            adj[cs.p0.idx[j]].emplace_back(edge_count + static_cast<int>(i), cs.p0.w[j]);
        for (int j = 0; j < cs.p1.count; ++j)
            adj[cs.p1.idx[j]].emplace_back(edge_count + static_cast<int>(i), -cs.p1.w[j]);
    }
    st.adj_offsets.resize(n_particles + 1);
    st.adj_offsets[0] = 0;
    for (std::size_t p = 0; p < n_particles; ++p)
        st.adj_offsets[p + 1] = st.adj_offsets[p] + static_cast<int>(adj[p].size());
    st.adjacency.reserve(st.adj_offsets[n_particles]);
    for (std::size_t p = 0; p < n_particles; ++p)
        for (const auto& e : adj[p]) st.adjacency.push_back(e);

    st.spring_force.resize((st.edges.size() + st.centers.size()) * ndim);
    st.scratch_pos.resize(st.pos.size());
    return st;
}

void mech_step(MechState& st, const ScalarField& Ta_norm, const MechParams& params) {
    const int ndim = st.ndim();
    if (Ta_norm.shape != st.cells)
        throw std::invalid_argument("mech_step: T_a field must live on the cell grid");

    const std::size_t n_edges = st.edges.size();
    const std::size_t n_centers = st.centers.size();
    double* sf = st.spring_force.data();
    const double* pos = st.pos.data();
    bool blowup = false;

#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::size_t i = 0; i < n_edges; ++i) {
        const EdgeSpring& e = st.edges[i];
        double d[3] = {0, 0, 0};
        double len2 = 0.0;
        for (int c = 0; c < ndim; ++c) {
            d[c] = pos[static_cast<std::size_t>(e.b) * ndim + c] -
                   pos[static_cast<std::size_t>(e.a) * ndim + c];
            len2 += d[c] * d[c];
        }
        const double len = std::sqrt(len2);
        if (len < kDegenerateLen) {
            blowup = true;
            continue;
        }
        const double f = params.k_edge * (len - e.rest_len) / len;
        for (int c = 0; c < ndim; ++c) sf[i * ndim + c] = f * d[c];
    }

#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::size_t i = 0; i < n_centers; ++i) {
        const CenterSpring& cs = st.centers[i];
        double d[3] = {0, 0, 0};
        double len2 = 0.0;
        for (int c = 0; c < ndim; ++c) {
            d[c] = attach_point(cs.p1, st.pos, ndim, c) - attach_point(cs.p0, st.pos, ndim, c);
            len2 += d[c] * d[c];
        }
        const double len = std::sqrt(len2);
        if (len < kDegenerateLen) {
            blowup = true;
            continue;
        }
        double rest = cs.rest_len;
        if (cs.active) {
            const double contraction =
                std::min(params.c_act * Ta_norm.values[cs.cell], params.max_contraction);
            rest *= 1.0 - contraction;
        }
        const double f = params.k_center * (len - rest) / len;
        for (int c = 0; c < ndim; ++c) sf[(n_edges + i) * ndim + c] = f * d[c];
    }

    if (blowup) throw MechBlowupError("mech_step: degenerate spring (mechanical blow-up)");

    if (ndim == 2) {
        const int nx = st.cells.nx(), ny = st.cells.ny();
        double min_area = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(min : min_area) num_threads(worker_count())
        for (int cy = 0; cy < ny; ++cy)
            for (int cx = 0; cx < nx; ++cx) min_area = std::min(min_area, shoelace(st, cx, cy));
        if (!(min_area > 0.0))
            throw MechBlowupError("mech_step: inverted cell (area <= 0, mechanical blow-up)");
    }

    const std::size_t n_particles = st.particle_count();
    const double dt = params.dt;
    const double inv_m_dt2 = dt * dt / params.mass;
    const double damp = params.gamma / dt;
    double* out = st.scratch_pos.data();
    const double* prev = st.prev.data();
    double check_sum = 0.0;

#pragma omp parallel for schedule(static) reduction(+ : check_sum) num_threads(worker_count())
    for (std::size_t p = 0; p < n_particles; ++p) {
        double F[3] = {0, 0, 0};
        for (int a = st.adj_offsets[p]; a < st.adj_offsets[p + 1]; ++a) {
            const auto& [slot, w] = st.adjacency[a];
            for (int c = 0; c < ndim; ++c) F[c] += w * sf[static_cast<std::size_t>(slot) * ndim + c];
        }
        for (int c = 0; c < ndim; ++c) {
            const std::size_t i = p * ndim + c;
            F[c] -= damp * (pos[i] - prev[i]);
            out[i] = 2.0 * pos[i] - prev[i] + F[c] * inv_m_dt2;
            check_sum += out[i];
        }
    }
    if (!std::isfinite(check_sum))
        throw MechBlowupError("mech_step: non-finite particle positions (mechanical blow-up)");

    std::swap(st.prev, st.pos);
    std::swap(st.pos, st.scratch_pos);
    remove_net_translation(st);
}

void remove_net_translation(MechState& st) {
    const int ndim = st.ndim();
    const std::size_t n = st.particle_count();
    double shift[3] = {0, 0, 0};
    for (std::size_t p = 0; p < n; ++p)
        for (int c = 0; c < ndim; ++c) shift[c] += st.pos[p * ndim + c] - st.rest[p * ndim + c];
    for (int c = 0; c < ndim; ++c) shift[c] /= static_cast<double>(n);
    if (shift[0] == 0.0 && shift[1] == 0.0 && (ndim < 3 || shift[2] == 0.0)) return;
    for (std::size_t p = 0; p < n; ++p)
        for (int c = 0; c < ndim; ++c) st.pos[p * ndim + c] -= shift[c];
}

ScalarField cell_area_ratio(const MechState& st) {
    const int ndim = st.ndim();
    ScalarField out(st.cells);
    if (ndim == 2) {
        const int nx = st.cells.nx(), ny = st.cells.ny();
        bool degenerate = false;
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (int cy = 0; cy < ny; ++cy)
            for (int cx = 0; cx < nx; ++cx) {
                const double a = shoelace(st, cx, cy);
                if (!(a > 0.0)) degenerate = true;
                out.values[st.cells.index(cx, cy)] = a / st.rest_measure[st.cells.index(cx, cy)];
            }
        if (degenerate) throw MechBlowupError("cell_area_ratio: degenerate cell (area <= 0)");
    } else {
        const std::size_t n_cells = st.cells.cell_count();
        bool degenerate = false;
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (std::size_t cell = 0; cell < n_cells; ++cell) {
            const CenterSpring& cs = st.centers[cell * 3];  // active fiber spring is first
            const double len = attach_distance(cs.p0, cs.p1, st.pos, 3);
            if (!(len > 0.0)) degenerate = true;
            const double lam = len / cs.rest_len;
            out.values[cell] = lam * lam;
        }
        if (degenerate) throw MechBlowupError("cell_area_ratio: degenerate cell (fiber stretch <= 0)");
    }
    return out;
}

DisplacementField displacements(const MechState& st, DispReference ref, int frame_index) {
    const int ndim = st.ndim();
    const std::vector<double>* reference = nullptr;
    if (ref == DispReference::Chi0) {
        reference = &st.rest;
    } else if (ref == DispReference::PreviousFrame) {
        if (st.history.empty())
            throw std::runtime_error("displacements: no previous frame retained");
        reference = &st.history.back().second;
    } else {
        for (const auto& [t, p] : st.history)
            if (t == frame_index) {
                reference = &p;
                break;
            }
        if (!reference)
            throw std::runtime_error("displacements: frame " + std::to_string(frame_index) +
                                     " not retained");
    }

    DisplacementField out(st.cells);
    const int nx = st.cells.nx(), ny = st.cells.ny(), nz = st.ndim() == 3 ? st.cells.nz() : 1;
    const double inv_corners = ndim == 2 ? 0.25 : 0.125;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                double acc[3] = {0, 0, 0};
                for (int dz = 0; dz < (ndim == 3 ? 2 : 1); ++dz)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t p = st.particle_index(x + dx, y + dy, z + dz) * ndim;
                            for (int c = 0; c < ndim; ++c)
                                acc[c] += st.pos[p + c] - (*reference)[p + c];
                        }
                const std::size_t i = st.cells.index(x, y, z) * ndim;
                for (int c = 0; c < ndim; ++c) out.vectors[i + c] = acc[c] * inv_corners;
            }
    return out;
}

double net_rotation_deg(const MechState& st) {
    const int ndim = st.ndim();
    const std::size_t n = st.particle_count();
    double c0[3] = {0, 0, 0}, c1[3] = {0, 0, 0};
    for (std::size_t p = 0; p < n; ++p)
        for (int c = 0; c < ndim; ++c) {
            c0[c] += st.rest[p * ndim + c];
            c1[c] += st.pos[p * ndim + c];
        }
    for (int c = 0; c < ndim; ++c) {
        c0[c] /= static_cast<double>(n);
        c1[c] /= static_cast<double>(n);
    }
    double cross = 0.0, dot = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const double rx = st.rest[p * ndim] - c0[0];
        const double ry = st.rest[p * ndim + 1] - c0[1];
        const double dx = st.pos[p * ndim] - c1[0];
        const double dy = st.pos[p * ndim + 1] - c1[1];
        cross += rx * dy - ry * dx;
        dot += rx * dx + ry * dy;
    }
    return std::atan2(cross, dot) * 180.0 / std::numbers::pi;
}

double mech_energy(const MechState& st, const MechParams& params, const ScalarField* Ta_norm) {
    const int ndim = st.ndim();
    double elastic = 0.0;
    for (const EdgeSpring& e : st.edges) {
        double len2 = 0.0;
        for (int c = 0; c < ndim; ++c) {
            const double d = st.pos[static_cast<std::size_t>(e.b) * ndim + c] -
                             st.pos[static_cast<std::size_t>(e.a) * ndim + c];
            len2 += d * d;
        }
        const double stretch = std::sqrt(len2) - e.rest_len;
        elastic += 0.5 * params.k_edge * stretch * stretch;
    }
    for (const CenterSpring& cs : st.centers) {
        double rest = cs.rest_len;
        if (cs.active && Ta_norm) {
            const double contraction =
                std::min(params.c_act * Ta_norm->values[cs.cell], params.max_contraction);
            rest *= 1.0 - contraction;
        }
        const double stretch = attach_distance(cs.p0, cs.p1, st.pos, ndim) - rest;
        elastic += 0.5 * params.k_center * stretch * stretch;
    }
    double kinetic = 0.0;
    const double inv_dt2 = 1.0 / (params.dt * params.dt);
    for (std::size_t i = 0; i < st.pos.size(); ++i) {
        const double v2 = (st.pos[i] - st.prev[i]) * (st.pos[i] - st.prev[i]) * inv_dt2;
        kinetic += 0.5 * params.mass * v2;
    }
    return elastic + kinetic;
}

}  // namespace emrecon
