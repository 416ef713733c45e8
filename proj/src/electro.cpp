#include "emrecon/electro.hpp"

#include <cmath>
#include <string>

#include "emrecon/parallel.hpp"

namespace emrecon {

void ElectroParams::validate(int ndim) const {
    if (k <= 0) throw std::invalid_argument("ElectroParams: k must be > 0");
    if (k_T < 0) throw std::invalid_argument("ElectroParams: k_T must be >= 0");
    if (G_s < 0) throw std::invalid_argument("ElectroParams: G_s must be >= 0");
    if (dt <= 0) throw std::invalid_argument("ElectroParams: dt must be > 0");
    if (h <= 0) throw std::invalid_argument("ElectroParams: h must be > 0");
    if (T_max <= 0) throw std::invalid_argument("ElectroParams: T_max must be > 0");
    const double dt_max = h * h / (2.0 * ndim * D);
    if (D > 0 && dt > dt_max)
        throw std::invalid_argument("ElectroParams: dt violates diffusion stability bound dt <= h^2/(2*ndim*D)");
}

ScalarField laplacian(const ScalarField& f, double h) {
    const GridShape& s = f.shape;
    ScalarField out(s);
    const double inv_h2 = 1.0 / (h * h);
    const int nx = s.nx(), ny = s.ny(), nz = s.nz();
    const int ndim = s.ndim();
    const double* in = f.values.data();
    double* o = out.values.data();

    for (int z = 0; z < nz; ++z) {
        const int zm = (ndim == 3) ? (z > 0 ? z - 1 : 0) : 0;
        const int zp = (ndim == 3) ? (z < nz - 1 ? z + 1 : nz - 1) : 0;
        for (int y = 0; y < ny; ++y) {
            const int ym = y > 0 ? y - 1 : 0;
            const int yp = y < ny - 1 ? y + 1 : ny - 1;
            const std::size_t row = s.index(0, y, z);
            const std::size_t row_ym = s.index(0, ym, z);
            const std::size_t row_yp = s.index(0, yp, z);
            const std::size_t row_zm = s.index(0, y, zm);
            const std::size_t row_zp = s.index(0, y, zp);
            for (int x = 0; x < nx; ++x) {
                const int xm = x > 0 ? x - 1 : 0;
                const int xp = x < nx - 1 ? x + 1 : nx - 1;
                double sum = in[row + xm] + in[row + xp] + in[row_ym + x] + in[row_yp + x] -
                             2.0 * ndim * in[row + x];
                if (ndim == 3) sum += in[row_zm + x] + in[row_zp + x];
                o[row + x] = sum * inv_h2;
            }
        }
    }
    return out;
}

double stretch_current(double u_cell, double A_cell, const ElectroParams& p) {
    if (!(A_cell > 0.0))
        throw SimDivergenceError("stretch_current: cell area ratio <= 0 (mechanical blow-up)");
    return p.G_s * (std::sqrt(A_cell) - 1.0) * (u_cell - p.E_s);
}

void electro_step_into(const ElectroState& in, const ScalarField& area, const ElectroParams& p,
                       ElectroState& out) {
    const GridShape& s = in.shape();
    if (area.shape != s) throw std::invalid_argument("electro_step: state and A shape mismatch");
    if (out.shape() != s) throw std::invalid_argument("electro_step: output shape mismatch");

    const int nx = s.nx(), ny = s.ny(), nz = s.nz();
    const int ndim = s.ndim();
    const double inv_h2 = 1.0 / (p.h * p.h);
    const double dt = p.dt;

    const double* u = in.u.values.data();
    const double* v = in.v.values.data();
    const double* Ta = in.Ta.values.data();
    const double* A = area.values.data();
    double* un = out.u.values.data();
    double* vn = out.v.values.data();
    double* Tn = out.Ta.values.data();

    double sum_u = 0.0, sum_v = 0.0, sum_T = 0.0;

#pragma omp parallel for schedule(static) reduction(+ : sum_u, sum_v, sum_T) \
    num_threads(worker_count()) collapse(2)
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            const int zm = (ndim == 3) ? (z > 0 ? z - 1 : 0) : 0;
            const int zp = (ndim == 3) ? (z < nz - 1 ? z + 1 : nz - 1) : 0;
            const int ym = y > 0 ? y - 1 : 0;
            const int yp = y < ny - 1 ? y + 1 : ny - 1;
            const std::size_t row = s.index(0, y, z);
            const std::size_t row_ym = s.index(0, ym, z);
            const std::size_t row_yp = s.index(0, yp, z);
            const std::size_t row_zm = s.index(0, y, zm);
            const std::size_t row_zp = s.index(0, y, zp);
            double su = 0.0, sv = 0.0, st = 0.0;
            for (int x = 0; x < nx; ++x) {
                const int xm = x > 0 ? x - 1 : 0;
                const int xp = x < nx - 1 ? x + 1 : nx - 1;
                const std::size_t i = row + x;
                const double ui = u[i];
                const double vi = v[i];
                const double Ti = Ta[i];

                double lap = u[row + xm] + u[row + xp] + u[row_ym + x] + u[row_yp + x] -
                             2.0 * ndim * ui;
                if (ndim == 3) lap += u[row_zm + x] + u[row_zp + x];
                lap *= inv_h2;

                const double Is = p.G_s * (std::sqrt(A[i]) - 1.0) * (ui - p.E_s);
                double u_next =
                    ui + dt * (p.D * lap - p.k * ui * (ui - p.a) * (ui - 1.0) - ui * vi - Is);
                if (u_next < 0.0) u_next = 0.0;

                const double eps_uv = p.eps0 + p.mu1 * vi / (ui + p.mu2);
                const double v_next = vi + dt * (eps_uv * (p.k * ui * (p.a + 1.0 - ui) - vi));

                const double eps_T = ui >= p.u_switch ? p.eps_Ta_low : p.eps_Ta_high;
                const double T_next = Ti + dt * (eps_T * (p.k_T * ui - Ti));

                un[i] = u_next;
                vn[i] = v_next;
                Tn[i] = T_next;
                su += u_next;
                sv += v_next;
                st += T_next;
            }
            sum_u += su;
            sum_v += sv;
            sum_T += st;
        }
    }

    if (!std::isfinite(sum_u) || !std::isfinite(sum_v) || !std::isfinite(sum_T)) {
        const char* var = !std::isfinite(sum_u) ? "u" : (!std::isfinite(sum_v) ? "v" : "Ta");
        throw SimDivergenceError(std::string("electro_step: non-finite values in variable ") + var);
    }
}

ElectroState electro_step(const ElectroState& in, const ScalarField& area,
                          const ElectroParams& p) {
    ElectroState out(in.shape());
    electro_step_into(in, area, p, out);
    return out;
}

ScalarField normalize_Ta(const ScalarField& Ta, double T_max) {
    if (T_max <= 0.0) throw std::invalid_argument("normalize_Ta: T_max must be > 0");
    ScalarField out(Ta.shape);
    for (std::size_t i = 0; i < Ta.values.size(); ++i) {
        double v = Ta.values[i] / T_max;
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        out.values[i] = v;
    }
    return out;
}

}  // namespace emrecon
