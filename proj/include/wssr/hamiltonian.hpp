#ifndef WSSR_HAMILTONIAN_HPP
#define WSSR_HAMILTONIAN_HPP

#include <wssr/system.hpp>
#include <wssr/wavefunction.hpp>

namespace wssr {

//
// E_L = -1/2 sum_i [lap_i log|Psi| + |grad_i log|Psi||^2] + V(x)
//
template <WavefunctionModel Model>
double local_energy(const MolecularSystem& sys, const Model& psi, const ElectronConfiguration& x,
                    double fd_step = default_fd_step)
{
    const auto d = grad_r_and_laplacian_log_psi(psi, x, fd_step);
    double grad_sq = 0.0;
    for (const auto& g : d.gradients)
        grad_sq += g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
    const double kinetic = -0.5 * (d.laplacian_sum + grad_sq);
    return kinetic + potential_energy(sys, x);
}

} // namespace wssr

#endif
