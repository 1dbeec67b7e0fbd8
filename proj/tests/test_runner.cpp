#include "scenarios.hpp"

#include <wssr/runner.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace wssr;
using namespace wssr::testing;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "wssr_test_runner" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// small helium setup for fast determinism checks
RunConfig small_helium(const std::string& optimizer, std::size_t steps, const std::string& out)
{
    return parse_config_text("[system]\npreset = He\n"
                             "[wavefunction]\nlmax = 0\n"
                             "[sampler]\nwalkers = 24\nburn_in = 30\nthinning = 2\n"
                             "[optimizer]\nname = " + optimizer + "\n"
                             "[wssr]\ninitial_rank = 12\n"
                             "[run]\nsteps = " + std::to_string(steps) + "\nseed = 5\nout = " + out + "\n");
}

// trace rows without the wall-clock column
std::vector<std::string> comparable_rows(const std::filesystem::path& csv)
{
    std::ifstream in(csv);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line))
        rows.push_back(line.substr(0, line.rfind(',')));
    return rows;
}

bool same_record(const TraceRecord& a, const TraceRecord& b)
{
    auto strip = [](TraceRecord r) {
        r.wall_ms = 0;
        return to_csv_row(r);
    };
    return strip(a) == strip(b);
}

} // namespace

TEST(Runner, HydrogenExactOrbitalIsZeroVariance)
{
    Runner r(scenarios::hydrogen_exact(10000, 3));
    for (int k = 0; k < 3; ++k) {
        const auto rec = r.step();
        EXPECT_LT(std::abs(rec.raw_energy + 0.5), 1e-6);
        EXPECT_LT(std::abs(rec.clipped_energy + 0.5), 1e-6);
        EXPECT_LT(rec.energy_variance, 1e-8);
    }
    EXPECT_EQ(r.state().theta, r.wavefunction().parameters());
    EXPECT_EQ(r.state().theta, std::vector<double>{1.0});
}

TEST(Runner, OneRecordPerStep)
{
    Runner r(small_helium("wssr", 4, "unused"));
    for (std::uint64_t k = 1; k <= 4; ++k)
        EXPECT_EQ(r.step().step, k);
    ASSERT_EQ(r.state().trace.size(), 4u);
    EXPECT_EQ(r.state().trace.back().step, 4u);
    EXPECT_TRUE(std::isnan(r.state().trace[0].sigma_drift));
    EXPECT_TRUE(std::isfinite(r.state().trace[1].sigma_drift));
    for (const auto& t : r.state().trace) {
        EXPECT_GT(t.acceptance_rate, 0.0);
        EXPECT_GE(t.effective_rank, 1u);
        EXPECT_LE(t.effective_rank, t.r_max);
    }
}

TEST(Runner, CachedLogPsiMatchesAfterUpdates)
{
    Runner r(small_helium("sgd", 3, "unused"));
    for (int k = 0; k < 3; ++k)
        r.step();
    const auto& e = r.state().ensemble;
    for (std::size_t w = 0; w < e.size(); ++w)
        EXPECT_NEAR(e.log_abs[w], r.wavefunction().log_psi(e.walkers[w]).log_abs, 1e-10);
}

TEST(Runner, ResumeReproducesNextRecord)
{
    for (const std::string opt : {"sgd", "sr", "minsr", "spring", "wssr", "rssr"}) {
        Runner full(small_helium(opt, 6, "unused"));
        for (int k = 0; k < 6; ++k)
            full.step();

        Runner first(small_helium(opt, 6, "unused"));
        for (int k = 0; k < 3; ++k)
            first.step();
        Runner resumed(small_helium(opt, 6, "unused"), decode_checkpoint(encode_checkpoint(first.state())));
        for (int k = 0; k < 3; ++k)
            resumed.step();

        ASSERT_EQ(resumed.state().trace.size(), 6u) << opt;
        for (std::size_t k = 0; k < 6; ++k)
            EXPECT_TRUE(same_record(full.state().trace[k], resumed.state().trace[k])) << opt << " step " << k + 1;
        EXPECT_EQ(full.state().theta, resumed.state().theta) << opt;
    }
}

TEST(Runner, ResumeRejectsMismatchedConfig)
{
    Runner r(small_helium("sgd", 2, "unused"));
    r.step();
    auto other = small_helium("sgd", 2, "unused");
    other.sampler.walkers = 25;
    try {
        Runner bad(other, r.state());
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    }
}

TEST(RunToCompletion, WritesTraceAndCheckpoint)
{
    const auto dir = scratch("complete");
    auto cfg = scenarios::hydrogen_exact(200, 5, (dir / "out").string());
    std::ostringstream log;
    ASSERT_EQ(run_to_completion(cfg, std::nullopt, log), 0) << log.str();
    const auto rows = comparable_rows(dir / "out" / "trace.csv");
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0] + ",wall_ms", trace_header);
    EXPECT_EQ(rows.back().substr(0, 2), "5,");
    const auto state = read_checkpoint(dir / "out" / "checkpoint.bin");
    EXPECT_EQ(state.step, 5u);
    EXPECT_NE(describe_checkpoint(state).find("completed steps   5"), std::string::npos);
}

TEST(RunToCompletion, ResumedTraceFileMatches)
{
    const auto dir = scratch("resume");
    std::ostringstream log;
    auto whole = small_helium("wssr", 6, (dir / "whole").string());
    ASSERT_EQ(run_to_completion(whole, std::nullopt, log), 0) << log.str();

    auto part = small_helium("wssr", 3, (dir / "part").string());
    ASSERT_EQ(run_to_completion(part, std::nullopt, log), 0) << log.str();
    auto rest = small_helium("wssr", 6, (dir / "part").string());
    ASSERT_EQ(run_to_completion(rest, dir / "part" / "checkpoint.bin", log), 0) << log.str();

    EXPECT_EQ(comparable_rows(dir / "whole" / "trace.csv"), comparable_rows(dir / "part" / "trace.csv"));
}

TEST(RunToCompletion, PeriodicCheckpoints)
{
    const auto dir = scratch("periodic");
    auto cfg = small_helium("sgd", 5, (dir / "out").string());
    cfg.checkpoint_every = 2;
    std::ostringstream log;
    ASSERT_EQ(run_to_completion(cfg, std::nullopt, log), 0);
    EXPECT_EQ(read_checkpoint(dir / "out" / "checkpoint.bin").step, 5u);
}

TEST(RunToCompletion, NonFiniteStateExitsThree)
{
    const auto dir = scratch("diverge");
    Runner r(small_helium("sgd", 2, "unused"));
    r.step();
    RunState bad = r.state();
    for (double& t : bad.theta)
        t = 1e300;
    write_checkpoint(dir / "bad.bin", bad);

    std::ostringstream log;
    EXPECT_EQ(run_to_completion(small_helium("sgd", 5, (dir / "out").string()), dir / "bad.bin", log), 3)
        << log.str();
    EXPECT_NE(log.str().find("numerical abort at step 2"), std::string::npos) << log.str();
    const auto state = read_checkpoint(dir / "out" / "checkpoint.bin");
    EXPECT_EQ(state.step, 1u);
    EXPECT_EQ(state.trace.size(), 1u);
}

TEST(RunToCompletion, BadResumeFileIsNotAConfigError)
{
    const auto dir = scratch("badresume");
    std::ofstream(dir / "junk.bin") << "not a checkpoint";
    std::ostringstream log;
    EXPECT_EQ(run_to_completion(small_helium("sgd", 2, (dir / "out").string()), dir / "junk.bin", log), 1);
}
