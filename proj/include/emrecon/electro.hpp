#pragma once

#include "emrecon/field.hpp"

namespace emrecon {

/// Thrown when an integrator produces non-finite values or a cell degenerates.
class SimDivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameters of the two-variable excitation model with active stress and a
/// stretch-activated current. All dynamic variables are dimensionless.
struct ElectroParams {
    double a = 0.1;        // excitation threshold
    double k = 8.0;        // reaction strength
    double eps0 = 0.002;   // recovery epsilon(u,v) = eps0 + mu1*v/(u+mu2)
    double mu1 = 0.2;
    double mu2 = 0.3;
    double k_T = 0.5;      // active-stress gain
    double eps_Ta_low = 0.1;   // epsilon(u) for u >= u_switch
    double eps_Ta_high = 1.0;  // epsilon(u) for u <  u_switch
    double u_switch = 0.05;
    double G_s = 0.0;      // stretch-channel conductance
    double E_s = 1.0;      // stretch equilibrium potential
    double D = 1.0;        // diffusion coefficient
    double dt = 0.05;      // explicit Euler step
    double h = 1.0;        // grid spacing
    double T_max = 0.45;   // active-stress normalization ceiling

    void validate(int ndim) const;
};

struct ElectroState {
    ScalarField u, v, Ta;

    explicit ElectroState(const GridShape& s) : u(s), v(s), Ta(s) {}
    const GridShape& shape() const { return u.shape; }
};

/// 5-point (2D) / 7-point (3D) Laplacian with no-flux boundaries, divided by h^2.
ScalarField laplacian(const ScalarField& f, double h);

/// Stretch-activated current I_s = G_s * (sqrt(A) - 1) * (u - E_s).
/// Throws SimDivergenceError for A <= 0 (degenerate/inverted cell).
double stretch_current(double u_cell, double A_cell, const ElectroParams& p);

/// One explicit Euler step of (u, v, Ta) given the per-cell area ratio A.
/// u is clamped at 0 from below after the update. Throws SimDivergenceError
/// naming the variable that went non-finite.
void electro_step_into(const ElectroState& in, const ScalarField& area, const ElectroParams& p,
                       ElectroState& out);

ElectroState electro_step(const ElectroState& in, const ScalarField& area,
                          const ElectroParams& p);

/// Active stress scaled by T_max and clamped to [0, 1].
ScalarField normalize_Ta(const ScalarField& Ta, double T_max);

}  // namespace emrecon
