#ifndef WSSR_SYSTEM_HPP
#define WSSR_SYSTEM_HPP
//
// Nuclei, electron configurations, built-in presets and the Coulomb potential.
// Atomic units throughout (Bohr, Hartree).
//

#include <wssr/error.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace wssr {

using Vec3 = std::array<double, 3>;

inline double distance(const Vec3& a, const Vec3& b) noexcept
{
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

enum class Spin : int { up = 0, down = 1 };

struct Nucleus {
    Vec3 position{};
    int charge = 1;
};

struct MolecularSystem {
    std::vector<Nucleus> nuclei;
    std::size_t n_up = 0;
    std::size_t n_down = 0;
    // adds sum_{I<J} Z_I Z_J / |R_I - R_J| to reported energies
    bool include_nuclear_repulsion = true;

    std::size_t electron_count() const noexcept { return n_up + n_down; }

    void validate() const
    {
        if (nuclei.empty())
            throw Error(ErrorCode::InvalidArgument, "system needs at least one nucleus");
        for (const auto& n : nuclei) {
            if (n.charge < 1)
                throw Error(ErrorCode::InvalidArgument, "nuclear charge must be >= 1");
            for (double c : n.position)
                if (!std::isfinite(c))
                    throw Error(ErrorCode::NonFinite, "nucleus position must be finite");
        }
        if (electron_count() < 1)
            throw Error(ErrorCode::InvalidArgument, "system needs at least one electron");
    }
};

// electrons 0..n_up-1 are spin up, the rest spin down
struct ElectronConfiguration {
    std::vector<Vec3> positions;
    std::vector<Spin> spins;

    std::size_t size() const noexcept { return positions.size(); }

    friend bool operator==(const ElectronConfiguration&, const ElectronConfiguration&) = default;
};

inline std::vector<Spin> spin_assignment(const MolecularSystem& sys)
{
    std::vector<Spin> s(sys.electron_count(), Spin::down);
    for (std::size_t i = 0; i < sys.n_up; ++i)
        s[i] = Spin::up;
    return s;
}

inline double nuclear_repulsion(const MolecularSystem& sys)
{
    double e = 0.0;
    for (std::size_t I = 0; I < sys.nuclei.size(); ++I)
        for (std::size_t J = I + 1; J < sys.nuclei.size(); ++J)
            e += static_cast<double>(sys.nuclei[I].charge * sys.nuclei[J].charge) /
                 distance(sys.nuclei[I].position, sys.nuclei[J].position);
    return e;
}

constexpr double coalescence_guard = 1e-12;

//
// -sum_{I,i} Z_I / |r_i - R_I| + sum_{i<j} 1 / |r_i - r_j|   (+ nuclear repulsion when enabled)
//
inline double potential_energy(const MolecularSystem& sys, const ElectronConfiguration& x)
{
    double v = 0.0;
    for (const auto& nuc : sys.nuclei)
        for (const auto& r : x.positions) {
            const double d = distance(r, nuc.position);
            if (d < coalescence_guard)
                throw Error(ErrorCode::CoalescencePoint, "electron on top of a nucleus");
            v -= nuc.charge / d;
        }
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double d = distance(x.positions[i], x.positions[j]);
            if (d < coalescence_guard)
                throw Error(ErrorCode::CoalescencePoint, "two electrons coincide");
            v += 1.0 / d;
        }
    if (sys.include_nuclear_repulsion)
        v += nuclear_repulsion(sys);
    return v;
}

//
// presets
//

inline const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names{"H", "He", "Be", "O", "Ne", "LiH", "Li2"};
    return names;
}

inline std::optional<MolecularSystem> preset(const std::string& name)
{
    const auto atom = [](int z, std::size_t up, std::size_t down) {
        return MolecularSystem{{Nucleus{{0.0, 0.0, 0.0}, z}}, up, down, true};
    };
    if (name == "H")
        return atom(1, 1, 0);
    if (name == "He")
        return atom(2, 1, 1);
    if (name == "Be")
        return atom(4, 2, 2);
    if (name == "O")
        return atom(8, 5, 3);
    if (name == "Ne")
        return atom(10, 5, 5);
    if (name == "LiH")
        return MolecularSystem{{Nucleus{{0.0, 0.0, 0.0}, 3}, Nucleus{{0.0, 0.0, 3.015}, 1}}, 2, 2, true};
    if (name == "Li2")
        return MolecularSystem{{Nucleus{{0.0, 0.0, 0.0}, 3}, Nucleus{{0.0, 0.0, 5.051}, 3}}, 3, 3, true};
    return std::nullopt;
}

} // namespace wssr

#endif
