#ifndef WSSR_SAMPLER_HPP
#define WSSR_SAMPLER_HPP
//
// Metropolis-Hastings sampling of |Psi|^2 with an ensemble of walkers.
//
// Each walker owns its random stream (seeded from the run seed and the walker
// index), so results do not depend on how walkers are spread across threads.
//

#include <wssr/estimators.hpp>
#include <wssr/hamiltonian.hpp>
#include <wssr/wavefunction.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace wssr {

// fn(i) for i in [0, count), statically partitioned over `threads` workers
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn)
{
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                const std::size_t lo = t * chunk;
                const std::size_t hi = std::min(count, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i)
                    fn(i);
            }
            catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct WalkerRng {
    std::mt19937_64 engine;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> uniform{0.0, 1.0};

    WalkerRng() = default;

    WalkerRng(std::uint64_t run_seed, std::uint64_t walker)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                          static_cast<std::uint32_t>(walker), static_cast<std::uint32_t>(walker >> 32),
                          0x5eedu};
        engine.seed(seq);
    }
};

struct SamplerSettings {
    std::size_t walkers = 2048;
    std::size_t burn_in = 1000;
    std::size_t thinning = 10;
    double proposal_std = 0.5;
    bool adapt_during_burn_in = true;
    std::size_t threads = 1;
};

struct WalkerEnsemble {
    std::vector<ElectronConfiguration> walkers;
    std::vector<WalkerRng> rngs;
    std::vector<double> log_abs;
    std::vector<std::uint64_t> accepted;
    std::vector<std::uint64_t> proposed;
    double proposal_std = 0.5;
    bool burned_in = false;
    std::size_t threads = 1;

    std::size_t size() const noexcept { return walkers.size(); }

    std::uint64_t total_accepted() const noexcept
    {
        std::uint64_t s = 0;
        for (auto a : accepted)
            s += a;
        return s;
    }
    std::uint64_t total_proposed() const noexcept
    {
        std::uint64_t s = 0;
        for (auto p : proposed)
            s += p;
        return s;
    }
    double acceptance_rate() const noexcept
    {
        const auto p = total_proposed();
        return p ? static_cast<double>(total_accepted()) / static_cast<double>(p) : 0.0;
    }

    // recompute the cached log|Psi| (needed after every parameter update)
    template <WavefunctionModel Model>
    void refresh(const Model& model)
    {
        parallel_for(size(), threads, [&](std::size_t w) { log_abs[w] = model.log_psi(walkers[w]).log_abs; });
        for (double v : log_abs)
            if (std::isnan(v))
                throw Error(ErrorCode::NumericalAbort, "log|Psi| is NaN for a walker");
    }
};

//
// electrons start near nuclei, nucleus I receiving a share proportional to Z_I
//
template <WavefunctionModel Model>
WalkerEnsemble make_ensemble(const MolecularSystem& sys, const Model& model, std::size_t count, std::uint64_t seed,
                             double proposal_std = 0.5, std::size_t threads = 1)
{
    sys.validate();
    if (count == 0)
        throw Error(ErrorCode::InvalidArgument, "walker count must be positive");
    std::vector<std::size_t> slots;
    for (std::size_t I = 0; I < sys.nuclei.size(); ++I)
        for (int z = 0; z < sys.nuclei[I].charge; ++z)
            slots.push_back(I);

    WalkerEnsemble ens;
    ens.proposal_std = proposal_std;
    ens.threads = threads;
    ens.accepted.assign(count, 0);
    ens.proposed.assign(count, 0);
    ens.log_abs.assign(count, 0.0);
    const auto spins = spin_assignment(sys);
    for (std::size_t w = 0; w < count; ++w) {
        WalkerRng rng(seed, w);
        ElectronConfiguration x;
        x.spins = spins;
        for (std::size_t e = 0; e < spins.size(); ++e) {
            const auto& R = sys.nuclei[slots[e % slots.size()]].position;
            x.positions.push_back({R[0] + rng.normal(rng.engine), R[1] + rng.normal(rng.engine),
                                   R[2] + rng.normal(rng.engine)});
        }
        ens.walkers.push_back(std::move(x));
        ens.rngs.push_back(std::move(rng));
    }
    ens.refresh(model);
    return ens;
}

//
// One all-electron Gaussian move per walker, accepted with
// min(1, exp(2 (log|Psi(x')| - log|Psi(x)|))). Every walker draws the same
// number of variates per step whatever the outcome.
//
template <WavefunctionModel Model>
void metropolis_step(WalkerEnsemble& ens, const Model& model, double proposal_std)
{
    if (!(proposal_std >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "proposal_std must be nonnegative");
    std::atomic<bool> saw_nan{false};
    parallel_for(ens.size(), ens.threads, [&](std::size_t w) {
        auto& rng = ens.rngs[w];
        ElectronConfiguration trial = ens.walkers[w];
        for (auto& r : trial.positions)
            for (double& c : r)
                c += proposal_std * rng.normal(rng.engine);
        const double u = rng.uniform(rng.engine);
        const double lp = model.log_psi(trial).log_abs;
        ++ens.proposed[w];
        if (std::isnan(lp)) {
            saw_nan = true;
            return;
        }
        const double log_ratio = 2.0 * (lp - ens.log_abs[w]);
        if (log_ratio >= 0.0 || std::log(u) < log_ratio) {
            ens.walkers[w] = std::move(trial);
            ens.log_abs[w] = lp;
            ++ens.accepted[w];
        }
    });
    if (saw_nan)
        throw Error(ErrorCode::NumericalAbort, "log|Psi| evaluated to NaN during sampling");
}

//
// Burn-in with multiplicative step-size adaptation towards 50% acceptance;
// the step size is frozen afterwards.
//
template <WavefunctionModel Model>
void burn_in(WalkerEnsemble& ens, const Model& model, std::size_t steps, bool adapt = true)
{
    for (std::size_t s = 0; s < steps; ++s) {
        const auto acc0 = ens.total_accepted();
        metropolis_step(ens, model, ens.proposal_std);
        if (adapt) {
            const double rate = static_cast<double>(ens.total_accepted() - acc0) / static_cast<double>(ens.size());
            ens.proposal_std = std::clamp(ens.proposal_std * std::exp(0.5 * (rate - 0.5)), 1e-3, 10.0);
        }
    }
    ens.burned_in = true;
}

//
// Burn-in once per run, then one configuration per walker every `thinning`
// steps (walkers in fixed order) until `n_samples` are collected.
//
template <WavefunctionModel Model>
std::vector<ElectronConfiguration> sample_configs(WalkerEnsemble& ens, const Model& model,
                                                  const SamplerSettings& settings, std::size_t n_samples)
{
    if (settings.thinning == 0 && n_samples > ens.size())
        throw Error(ErrorCode::InvalidArgument, "thinning = 0 cannot draw more samples than walkers");
    if (!ens.burned_in)
        burn_in(ens, model, settings.burn_in, settings.adapt_during_burn_in);
    std::vector<ElectronConfiguration> out;
    out.reserve(n_samples);
    while (out.size() < n_samples) {
        for (std::size_t t = 0; t < settings.thinning; ++t)
            metropolis_step(ens, model, ens.proposal_std);
        for (std::size_t w = 0; w < ens.size() && out.size() < n_samples; ++w)
            out.push_back(ens.walkers[w]);
    }
    return out;
}

// configurations plus their local energies and theta log-derivatives
template <ParameterizedModel Model>
SampleBatch sample_batch(WalkerEnsemble& ens, const Model& model, const MolecularSystem& sys,
                         const SamplerSettings& settings, std::size_t n_samples, double fd_step = default_fd_step)
{
    SampleBatch batch;
    batch.configs = sample_configs(ens, model, settings, n_samples);
    const std::size_t N = batch.configs.size();
    batch.local_energies.assign(N, 0.0);
    batch.theta_logderivs.assign(N, {});
    parallel_for(N, ens.threads, [&](std::size_t n) {
        batch.local_energies[n] = local_energy(sys, model, batch.configs[n], fd_step);
        batch.theta_logderivs[n] = model.grad_theta_log_psi(batch.configs[n]);
    });
    return batch;
}

} // namespace wssr

#endif
