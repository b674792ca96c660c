#include "rarepath/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rarepath/analytic_model.hpp"

namespace rarepath {

namespace {

std::string_view trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected)
{
    throw ConfigError("bad value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                      std::string(expected));
}

double to_real(std::string_view key, std::string_view v)
{
    double out = 0.0;
    auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || end != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a real number");
    return out;
}

/// Accepts plain integers and integral reals such as 1e6.
std::uint64_t to_count(std::string_view key, std::string_view v)
{
    std::uint64_t out = 0;
    auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec == std::errc{} && end == v.data() + v.size()) return out;
    double d = 0.0;
    auto [end2, ec2] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec2 != std::errc{} || end2 != v.data() + v.size() || !(d >= 0.0) || d >= 0x1p63 || d != std::floor(d))
        bad_value(key, v, "a non-negative integer");
    return static_cast<std::uint64_t>(d);
}

std::int64_t to_int(std::string_view key, std::string_view v)
{
    if (!v.empty() && v.front() == '-') return -static_cast<std::int64_t>(to_count(key, v.substr(1)));
    return static_cast<std::int64_t>(to_count(key, v));
}

std::string unquote(std::string_view v)
{
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
}

} // namespace

std::string_view to_string(ModelKind k) noexcept
{
    switch (k) {
    case ModelKind::one_d: return "one_d";
    case ModelKind::two_d: return "two_d";
    case ModelKind::analytic: return "analytic";
    }
    return "?";
}

std::string_view to_string(MethodKind k) noexcept
{
    switch (k) {
    case MethodKind::last_particle: return "last_particle";
    case MethodKind::simple_mc: return "simple_mc";
    case MethodKind::vlmc: return "vlmc";
    case MethodKind::ideal: return "ideal";
    }
    return "?";
}

std::string_view to_string(TieRule t) noexcept
{
    return t == TieRule::kill_all ? "kill_all" : "one_per_iteration";
}

TieRule parse_tie_rule(std::string_view s)
{
    for (auto t : {TieRule::one_per_iteration, TieRule::kill_all})
        if (s == to_string(t)) return t;
    throw ConfigError("unknown tie_rule '" + std::string(s) + "' (one_per_iteration, kill_all)");
}

ModelKind parse_model_kind(std::string_view s)
{
    for (auto k : {ModelKind::one_d, ModelKind::two_d, ModelKind::analytic})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown model '" + std::string(s) + "' (one_d, two_d, analytic)");
}

MethodKind parse_method_kind(std::string_view s)
{
    for (auto k : {MethodKind::last_particle, MethodKind::simple_mc, MethodKind::vlmc, MethodKind::ideal})
        if (s == to_string(k)) return k;
    throw ConfigError("unknown method '" + std::string(s) + "' (last_particle, simple_mc, vlmc, ideal)");
}

void ExperimentConfig::set(std::string_view key, std::string_view raw)
{
    const std::string value = unquote(trim(raw));
    const std::string_view v = value;
    auto real = [&] { return to_real(key, v); };
    auto count = [&] { return to_count(key, v); };

    if (key == "model") model = parse_model_kind(v);
    else if (key == "method") method = parse_method_kind(v);
    else if (key == "N") N = count();
    else if (key == "T") {
        const auto t = to_int(key, v);
        if (t > 1'000'000'000) bad_value(key, v, "a smaller iteration count");
        T = static_cast<int>(t);
    }
    else if (key == "J") J = count();
    else if (key == "level") level = real();
    else if (key == "replicates") replicates = count();
    else if (key == "seed") seed = count();
    else if (key == "out") out = value;
    else if (key == "confidence") confidence = real();
    else if (key == "workers") workers = static_cast<int>(to_int(key, v));
    else if (key == "max_iterations") max_iterations = to_int(key, v);
    else if (key == "tie_rule") ties = parse_tie_rule(v);
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "vlmc_stop_after") vlmc_stop_after = count();
    else if (key == "p_ref") p_ref = real();
    else if (key == "p_target") p_target_ = real();
    else if (key == "mc_replicates") mc_replicates = count();
    else if (key == "mc_J") mc_J = count();
    // 1D model
    else if (key == "A") one_d.A = real();
    else if (key == "B") one_d.B = real();
    else if (key == "sigma2") one_d.sigma2 = real();
    else if (key == "P") one_d.P = real();
    else if (key == "source") one_d.source = real();
    else if (key == "Q") { one_d_kernel.Q = real(); q_set_ = true; }
    // 2D model
    else if (key == "L") two_d.L = real();
    else if (key == "l") two_d.l = real();
    else if (key == "l_d") two_d.l_d = real();
    else if (key == "d_x") two_d.d_x = real();
    else if (key == "s_x") two_d.s_x = real();
    else if (key == "lambda_w") two_d.lambda_w = real();
    else if (key == "lambda_p") two_d.lambda_p = real();
    else if (key == "P_w") two_d.P_w = real();
    else if (key == "P_p") two_d.P_p = real();
    else if (key == "Q_w") two_d_kernel.Q_w = real();
    else if (key == "Q_p") two_d_kernel.Q_p = real();
    // shared by both kernels; only the configured model reads it
    else if (key == "sigma2_tilde") one_d_kernel.sigma2_tilde = two_d_kernel.sigma2_tilde = real();
    else if (key == "step_sd") analytic_step_sd = real();
    else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

void ExperimentConfig::finalize()
{
    if (model == ModelKind::one_d && one_d.P == 0.0 && !q_set_) one_d_kernel.Q = 0.0;
    if (p_target_) {
        if (model != ModelKind::analytic) throw ConfigError("p_target is only meaningful for the analytic model");
        if (!(*p_target_ > 0.0 && *p_target_ < 1.0)) throw ConfigError("p_target must lie in (0, 1)");
        level = normal_isf(*p_target_);
        if (!p_ref) p_ref = *p_target_;
    }

    try {
        if (model == ModelKind::one_d) {
            one_d.validate();
            one_d_kernel.validate(one_d);
        } else if (model == ModelKind::two_d) {
            two_d.validate();
            two_d_kernel.validate();
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (model == ModelKind::analytic && !(analytic_step_sd > 0.0)) throw ConfigError("step_sd must be positive");
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0, 1)");
    if (workers < 0) throw ConfigError("workers must be non-negative");
    if (max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
    if (p_ref && !(*p_ref > 0.0 && *p_ref <= 1.0)) throw ConfigError("p_ref must lie in (0, 1]");

    switch (method) {
    case MethodKind::ideal:
        if (model != ModelKind::analytic) throw ConfigError("the ideal method needs the analytic model");
        [[fallthrough]];
    case MethodKind::last_particle:
        if (N < 2) throw ConfigError("N must be at least 2");
        if (method == MethodKind::last_particle && T < 1) throw ConfigError("T must be at least 1");
        break;
    case MethodKind::simple_mc:
    case MethodKind::vlmc:
        if (J < 1) throw ConfigError("J must be at least 1");
        break;
    }
    if (mc_replicates > 0 && companion_trials() < 1) throw ConfigError("mc_J must be at least 1");
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig cfg)
{
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            else if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        try {
            cfg.set(key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

nlohmann::json to_json(const ExperimentConfig& c)
{
    nlohmann::json j{
        {"model", to_string(c.model)},
        {"method", to_string(c.method)},
        {"N", c.N},
        {"T", c.T},
        {"J", c.J},
        {"level", c.level},
        {"replicates", c.replicates},
        {"seed", c.seed},
        {"confidence", c.confidence},
        {"max_iterations", c.max_iterations},
        {"tie_rule", to_string(c.ties)},
    };
    if (c.p_ref) j["p_ref"] = *c.p_ref;
    if (c.mc_replicates) {
        j["mc_replicates"] = c.mc_replicates;
        j["mc_J"] = c.companion_trials();
    }
    switch (c.model) {
    case ModelKind::one_d:
        j["params"] = {{"A", c.one_d.A},
                       {"B", c.one_d.B},
                       {"sigma2", c.one_d.sigma2},
                       {"P", c.one_d.P},
                       {"source", c.one_d.source},
                       {"sigma2_tilde", c.one_d_kernel.sigma2_tilde},
                       {"Q", c.one_d_kernel.Q}};
        break;
    case ModelKind::two_d:
        j["params"] = {{"L", c.two_d.L},
                       {"l", c.two_d.l},
                       {"l_d", c.two_d.l_d},
                       {"d_x", c.two_d.d_x},
                       {"s_x", c.two_d.s_x},
                       {"lambda_w", c.two_d.lambda_w},
                       {"lambda_p", c.two_d.lambda_p},
                       {"P_w", c.two_d.P_w},
                       {"P_p", c.two_d.P_p},
                       {"sigma2_tilde", c.two_d_kernel.sigma2_tilde},
                       {"Q_w", c.two_d_kernel.Q_w},
                       {"Q_p", c.two_d_kernel.Q_p}};
        break;
    case ModelKind::analytic: j["params"] = {{"step_sd", c.analytic_step_sd}}; break;
    }
    return j;
}

} // namespace rarepath
