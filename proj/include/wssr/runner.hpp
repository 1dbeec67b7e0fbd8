#ifndef WSSR_RUNNER_HPP
#define WSSR_RUNNER_HPP
//
// The VMC outer loop: sample, assemble estimators, precondition, update,
// with trace and checkpoint emission.
//

#include <wssr/checkpoint.hpp>
#include <wssr/config.hpp>
#include <wssr/estimators.hpp>
#include <wssr/hamiltonian.hpp>
#include <wssr/optimizers.hpp>
#include <wssr/sampler.hpp>
#include <wssr/trace.hpp>
#include <wssr/wavefunction.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

namespace wssr {

inline AceWavefunction build_wavefunction(const RunConfig& c)
{
    return AceWavefunction::for_system(c.system, c.basis, c.correlation_order, c.degree_cap, c.jastrow);
}

class Runner {
public:
    explicit Runner(RunConfig config)
        : config_(std::move(config))
        , wf_(build_wavefunction(config_))
    {
        wf_.initialize_near_slater(config_.init_noise, config_.seed);
        state_.theta = wf_.parameters();
        state_.ensemble = make_ensemble(config_.system, wf_, config_.sampler.walkers, config_.seed,
                                        config_.sampler.proposal_std, config_.sampler.threads);
        burn_in(state_.ensemble, wf_, config_.sampler.burn_in, config_.sampler.adapt_during_burn_in);
    }

    Runner(RunConfig config, RunState resumed)
        : config_(std::move(config))
        , wf_(build_wavefunction(config_))
    {
        const auto mismatch = [](const std::string& m) { throw Error(ErrorCode::ConfigError, "checkpoint " + m); };
        if (resumed.theta.size() != wf_.parameter_count())
            mismatch("has " + std::to_string(resumed.theta.size()) + " parameters, config gives " +
                     std::to_string(wf_.parameter_count()));
        if (resumed.ensemble.size() != config_.sampler.walkers)
            mismatch("has " + std::to_string(resumed.ensemble.size()) + " walkers, config gives " +
                     std::to_string(config_.sampler.walkers));
        for (const auto& w : resumed.ensemble.walkers)
            if (w.size() != config_.system.electron_count())
                mismatch("electron count differs from the config");
        if (resumed.trace.size() != resumed.step)
            mismatch("trace length differs from its step counter");
        state_ = std::move(resumed);
        state_.ensemble.threads = config_.sampler.threads;
        wf_.set_parameters(state_.theta);
    }

    const RunConfig& config() const noexcept { return config_; }
    const RunState& state() const noexcept { return state_; }
    const AceWavefunction& wavefunction() const noexcept { return wf_; }

    // one optimizer step; the state is left untouched when it throws
    TraceRecord step()
    {
        const auto t0 = std::chrono::steady_clock::now();
        RunState next = state_;
        AceWavefunction wf = wf_;
        auto& ens = next.ensemble;
        const auto acc0 = ens.total_accepted();
        const auto prop0 = ens.total_proposed();

        const SampleBatch batch =
            sample_batch(ens, wf, config_.system, config_.sampler, config_.sampler.walkers, config_.fd_step);
        const EstimatorBundle bundle = assemble(batch, config_.clip_std);

        TraceRecord rec;
        rec.step = next.step + 1;
        rec.raw_energy = bundle.raw_loss;
        rec.clipped_energy = bundle.loss;
        rec.energy_variance = bundle.raw_variance;
        rec.acceptance_rate = static_cast<double>(ens.total_accepted() - acc0) /
                              static_cast<double>(ens.total_proposed() - prop0);

        const double eta = config_.schedule(next.step);
        const auto& name = config_.optimizer;
        if (name == "sgd")
            next.theta = sgd_update(next.theta, bundle, eta);
        else if (name == "sr")
            next.theta = full_sr_update(next.theta, bundle, eta, config_.sr);
        else if (name == "minsr")
            next.theta = minsr_update(next.theta, bundle, eta, config_.minsr_epsilon);
        else if (name == "spring")
            next.theta = spring_update(next.theta, bundle, eta, next.spring, config_.spring);
        else {
            auto r = name == "rssr" ? rssr_step(next.theta, bundle, eta, next.wssr, config_.wssr)
                                    : wssr_step(next.theta, bundle, eta, next.wssr, config_.wssr);
            next.theta = std::move(r.theta);
            rec.effective_rank = r.diagnostics.effective_rank;
            rec.r_max = r.diagnostics.r_max;
            rec.ssi_iterations = r.diagnostics.ssi.iterations_used;
            rec.sigma_drift = r.diagnostics.sigma_drift;
            rec.projector_drift = r.diagnostics.projector_drift;
        }
        for (double v : next.theta)
            if (!std::isfinite(v))
                throw Error(ErrorCode::NumericalAbort, "parameters became non-finite at step " +
                                                           std::to_string(rec.step));
        wf.set_parameters(next.theta);
        ens.refresh(wf);

        next.step = rec.step;
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        next.trace.push_back(rec);
        state_ = std::move(next);
        wf_ = std::move(wf);
        return rec;
    }

private:
    RunConfig config_;
    AceWavefunction wf_;
    RunState state_;
};

struct RunPaths {
    std::filesystem::path trace;
    std::filesystem::path checkpoint;

    explicit RunPaths(const std::filesystem::path& out)
        : trace(out / "trace.csv")
        , checkpoint(out / "checkpoint.bin")
    {
    }
};

//
// Runs to config.steps, appending to trace.csv and checkpointing into the
// output directory. Exit status: 0 success, 2 config error, 3 numerical abort
// (the last good state is written as the checkpoint), 1 other failures.
//
inline int run_to_completion(const RunConfig& config, const std::optional<std::filesystem::path>& resume,
                             std::ostream& log)
{
    try {
        std::optional<Runner> runner;
        if (resume)
            runner.emplace(config, read_checkpoint(*resume));
        else
            runner.emplace(config);
        if (runner->state().step > config.steps)
            throw Error(ErrorCode::ConfigError, "checkpoint is already past run.steps");

        const RunPaths paths(config.out);
        std::filesystem::create_directories(config.out);
        std::ofstream trace(paths.trace, std::ios::binary | std::ios::trunc);
        if (!trace)
            throw Error(ErrorCode::Io, "cannot write " + paths.trace.string());
        write_trace(trace, runner->state().trace);
        trace.flush();

        while (runner->state().step < config.steps) {
            TraceRecord rec;
            try {
                rec = runner->step();
            }
            catch (const Error& e) {
                if (e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::Io)
                    throw;
                write_checkpoint(paths.checkpoint, runner->state());
                log << "numerical abort at step " << runner->state().step + 1 << ": " << e.what() << "\n"
                    << "last good state written to " << paths.checkpoint.string() << "\n";
                return 3;
            }
            trace << to_csv_row(rec) << '\n';
            trace.flush();
            const bool periodic = config.checkpoint_every > 0 && rec.step % config.checkpoint_every == 0;
            if (periodic || rec.step == config.steps)
                write_checkpoint(paths.checkpoint, runner->state());
        }
        const auto& tr = runner->state().trace;
        if (!tr.empty()) {
            std::vector<double> e;
            for (const auto& r : tr)
                e.push_back(r.raw_energy);
            const auto smooth = smooth_trace(e, config.effective_smoothing_window());
            log << "steps " << tr.back().step << ", final energy " << format_double(tr.back().raw_energy)
                << ", smoothed " << format_double(smooth.back()) << " (window "
                << config.effective_smoothing_window() << ")\n";
        }
        return 0;
    }
    catch (const Error& e) {
        log << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? 2 : 1;
    }
    catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

inline std::string describe_checkpoint(const RunState& s)
{
    std::ostringstream out;
    out << "completed steps   " << s.step << "\n";
    out << "parameters        " << s.theta.size() << "\n";
    out << "walkers           " << s.ensemble.size() << "\n";
    if (!s.ensemble.walkers.empty())
        out << "electrons         " << s.ensemble.walkers.front().size() << "\n";
    out << "proposal std      " << format_double(s.ensemble.proposal_std) << "\n";
    out << "acceptance        " << format_double(s.ensemble.acceptance_rate()) << "\n";
    out << "wssr r_max        " << s.wssr.r_max << "\n";
    out << "wssr history rank " << s.wssr.Lbar.size() << "\n";
    out << "spring momentum   " << (s.spring.prev_update.empty() ? "none" : "stored") << "\n";
    if (!s.trace.empty()) {
        const auto& last = s.trace.back();
        out << "last raw energy   " << format_double(last.raw_energy) << "\n";
        out << "last variance     " << format_double(last.energy_variance) << "\n";
    }
    return out.str();
}

} // namespace wssr

#endif
