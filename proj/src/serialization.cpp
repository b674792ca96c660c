#include "rarepath/serialization.hpp"

#include <charconv>
#include <numeric>

namespace rarepath {

namespace {

std::string num(double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double mean_of(const std::vector<double>& v)
{
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

nlohmann::json to_json(const EstimateResult& r, bool include_timing)
{
    nlohmann::json j{
        {"p_hat", r.p_hat},
        {"m", r.m},
        {"ci_low", r.ci_low},
        {"ci_high", r.ci_high},
        {"n_particles", r.n_particles},
        {"hm_iterations", r.hm_iterations},
        {"diagnostics",
         {{"kill_log", r.kill_log}, {"acceptance_log", r.acceptance_log}, {"tie_warnings", r.tie_warnings}}},
    };
    if (include_timing) j["wall_time"] = r.wall_time;
    return j;
}

nlohmann::json to_json(const McResult& r, bool include_timing)
{
    nlohmann::json j{
        {"successes", r.successes}, {"trials", r.trials},         {"p_tilde", r.p_tilde},
        {"ci_low", r.ci_low},       {"ci_high", r.ci_high},       {"confidence", r.confidence},
    };
    if (include_timing) j["wall_time"] = r.wall_time;
    return j;
}

std::string estimate_csv_header()
{
    return "rep,p_hat,m,ci_low,ci_high,n_particles,hm_iterations,wall_time,tie_warnings,mean_acceptance";
}

std::string to_csv_row(std::size_t replicate, const EstimateResult& r)
{
    return std::to_string(replicate) + "," + num(r.p_hat) + "," + std::to_string(r.m) + "," + num(r.ci_low) + "," +
           num(r.ci_high) + "," + std::to_string(r.n_particles) + "," + std::to_string(r.hm_iterations) + "," +
           num(r.wall_time) + "," + std::to_string(r.tie_warnings) + "," + num(mean_of(r.acceptance_log));
}

std::string mc_csv_header() { return "rep,successes,trials,p_tilde,ci_low,ci_high,wall_time"; }

std::string to_csv_row(std::size_t replicate, const McResult& r)
{
    return std::to_string(replicate) + "," + std::to_string(r.successes) + "," + std::to_string(r.trials) + "," +
           num(r.p_tilde) + "," + num(r.ci_low) + "," + num(r.ci_high) + "," + num(r.wall_time);
}

} // namespace rarepath
