#include "rarepath/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>

#include <omp.h>

#include "rarepath/analytic_model.hpp"
#include "rarepath/serialization.hpp"

namespace rarepath {

namespace {

bool is_particle_method(MethodKind m) { return m == MethodKind::last_particle || m == MethodKind::ideal; }

template <class F>
void with_model(const ExperimentConfig& c, F&& f)
{
    switch (c.model) {
    case ModelKind::one_d: f(Model1D(c.one_d, c.one_d_kernel)); break;
    case ModelKind::two_d: f(Model2D(c.two_d, c.two_d_kernel)); break;
    case ModelKind::analytic: f(AnalyticModel(c.analytic_step_sd)); break;
    }
}

std::filesystem::path checkpoint_path(const ExperimentConfig& c, std::size_t index)
{
    if (c.replicates == 1) return c.checkpoint;
    return c.checkpoint + "." + std::to_string(index);
}

std::vector<ReplicateRecord> run_all(const ExperimentConfig& cfg, MethodKind method, std::size_t count)
{
    std::vector<ReplicateRecord> out(count);
    if (cfg.workers == 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = run_replicate(cfg, method, i);
        return out;
    }
    const int threads = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::size_t i = 0; i < count; ++i) {
        try {
            out[i] = run_replicate(cfg, method, i);
        } catch (...) {
#pragma omp critical(rarepath_harness_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

nlohmann::json to_json(const Summary& s, bool include_timing)
{
    nlohmann::json j{{"completed", s.completed}, {"aborted", s.aborted}, {"mean", s.mean}, {"sd", s.sd}};
    if (s.geometric_mean) j["geometric_mean"] = *s.geometric_mean;
    if (s.rmse) j["rmse"] = *s.rmse;
    if (include_timing) j["mean_wall_time"] = s.mean_wall_time;
    if (s.asymptotic_band) j["asymptotic_band"] = {s.asymptotic_band->first, s.asymptotic_band->second};
    if (s.coverage) j["coverage"] = *s.coverage;
    if (s.pooled) j["pooled"] = to_json(*s.pooled, include_timing);
    return j;
}

nlohmann::json to_json(const std::vector<ReplicateRecord>& recs, bool include_timing)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : recs) {
        nlohmann::json j{{"index", r.index}, {"ok", r.ok()}};
        if (!r.ok()) {
            j["error"] = r.error;
            if (r.abort_iteration >= 0) j["abort_iteration"] = r.abort_iteration;
        }
        if (r.lp) j["result"] = to_json(*r.lp, include_timing);
        if (r.mc) j["result"] = to_json(*r.mc, include_timing);
        arr.push_back(std::move(j));
    }
    return arr;
}

const EstimateResult* first_particle_result(const ExperimentReport& r)
{
    for (const auto& rec : r.replicates)
        if (rec.ok() && rec.lp) return &*rec.lp;
    return nullptr;
}

void require_particle(const ExperimentReport& r, std::string_view id)
{
    if (!is_particle_method(r.config.method))
        throw std::invalid_argument(std::string(id) + " needs a particle method (last_particle or ideal)");
}

/// Reference of the I_p band: p_ref when known, else the empirical mean.
double band_center(const ExperimentReport& r)
{
    return r.config.p_ref ? *r.config.p_ref : r.summary.mean;
}

} // namespace

double ReplicateRecord::estimate() const
{
    if (lp) return lp->p_hat;
    if (mc) return mc->p_tilde;
    throw std::logic_error("replicate has no result");
}

double ReplicateRecord::wall_time() const
{
    if (lp) return lp->wall_time;
    if (mc) return mc->wall_time;
    return 0.0;
}

double coverage_check(std::span<const double> estimates, double p_ref, std::size_t n_particles)
{
    if (estimates.empty()) throw std::invalid_argument("coverage_check needs at least one estimate");
    std::size_t inside = 0;
    for (double p : estimates) {
        const auto [lo, hi] = confidence_interval(p, n_particles);
        if (lo <= p_ref && p_ref <= hi) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(estimates.size());
}

ReplicateRecord run_replicate(const ExperimentConfig& cfg, MethodKind method, std::size_t index)
{
    ReplicateRecord rec;
    rec.index = index;
    const StreamKey root(cfg.seed);
    const DriverOptions opts{cfg.max_iterations, cfg.ties};
    try {
        with_model(cfg, [&](const auto& model) {
            using M = std::decay_t<decltype(model)>;
            switch (method) {
            case MethodKind::last_particle:
                rec.lp = run_practical(model, cfg.N, cfg.T, cfg.level, root.child({0, index}), opts);
                break;
            case MethodKind::ideal:
                if constexpr (ExactConditionalModel<M>)
                    rec.lp = run_ideal(model, cfg.N, cfg.level, root.child({0, index}), opts);
                else
                    throw ConfigError("the ideal method needs the analytic model");
                break;
            case MethodKind::simple_mc:
                rec.mc = simple_mc(model, cfg.J, cfg.level, root.child({1, index}), cfg.confidence);
                break;
            case MethodKind::vlmc: {
                VlmcOptions o;
                o.confidence = cfg.confidence;
                if (!cfg.checkpoint.empty()) o.checkpoint = checkpoint_path(cfg, index);
                if (cfg.vlmc_stop_after) o.stop_after_batches = cfg.vlmc_stop_after;
                auto r = run_vlmc(model, cfg.J, cfg.level, root.child({2, index}).value(), o);
                if (r) rec.mc = *r;
                else rec.error = "interrupted; rerun with the same checkpoint to resume";
                break;
            }
            }
        });
    } catch (const ConfigError&) {
        throw;
    } catch (const EstimationAborted& e) {
        rec.error = e.what();
        rec.abort_iteration = e.iteration();
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

Summary summarize(std::span<const ReplicateRecord> records, const ExperimentConfig& cfg, MethodKind method)
{
    Summary s;
    std::vector<double> est;
    double time = 0.0;
    for (const auto& r : records) {
        if (!r.ok()) {
            ++s.aborted;
            continue;
        }
        est.push_back(r.estimate());
        time += r.wall_time();
    }
    s.completed = est.size();
    if (est.empty()) return s;

    const double n = static_cast<double>(est.size());
    s.mean = std::accumulate(est.begin(), est.end(), 0.0) / n;
    if (est.size() > 1) {
        double ss = 0.0;
        for (double e : est) ss += (e - s.mean) * (e - s.mean);
        s.sd = std::sqrt(ss / (n - 1.0));
    }
    if (std::all_of(est.begin(), est.end(), [](double e) { return e > 0.0; })) {
        double lsum = 0.0;
        for (double e : est) lsum += std::log(e);
        s.geometric_mean = std::exp(lsum / n);
    }
    if (cfg.p_ref) s.rmse = rmse(est, *cfg.p_ref);
    s.mean_wall_time = time / n;

    if (is_particle_method(method)) {
        const double center = cfg.p_ref ? *cfg.p_ref : s.mean;
        if (center > 0.0 && center <= 1.0) s.asymptotic_band = confidence_interval(center, cfg.N);
        if (cfg.p_ref) s.coverage = coverage_check(est, *cfg.p_ref, cfg.N);
    } else {
        std::uint64_t hits = 0, trials = 0;
        for (const auto& r : records)
            if (r.ok()) {
                hits += r.mc->successes;
                trials += r.mc->trials;
            }
        s.pooled = make_mc_result(hits, trials, cfg.confidence, time);
    }
    return s;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg)
{
    ExperimentReport rep;
    rep.config = cfg;
    rep.replicates = run_all(cfg, cfg.method, cfg.replicates);
    rep.summary = summarize(rep.replicates, cfg, cfg.method);

    if (cfg.mc_replicates > 0) {
        ExperimentConfig mc_cfg = cfg;
        mc_cfg.J = cfg.companion_trials();
        rep.companion = run_all(mc_cfg, MethodKind::simple_mc, cfg.mc_replicates);
        rep.companion_summary = summarize(rep.companion, mc_cfg, MethodKind::simple_mc);
        const auto& a = *rep.companion_summary;
        const auto& b = rep.summary;
        if (is_particle_method(cfg.method) && a.rmse && b.rmse && *a.rmse > 0.0 && *b.rmse > 0.0 &&
            a.mean_wall_time > 0.0 && b.mean_wall_time > 0.0)
            rep.quality_ratio = quality_ratio(a.mean_wall_time, *a.rmse, b.mean_wall_time, *b.rmse);
    }
    return rep;
}

nlohmann::json to_json(const ExperimentReport& r, bool include_timing)
{
    nlohmann::json j{
        {"config", to_json(r.config)},
        {"summary", to_json(r.summary, include_timing)},
        {"replicates", to_json(r.replicates, include_timing)},
    };
    if (r.companion_summary) {
        j["companion"] = {{"method", "simple_mc"},
                          {"summary", to_json(*r.companion_summary, include_timing)},
                          {"replicates", to_json(r.companion, include_timing)}};
    }
    if (include_timing && r.quality_ratio) j["quality_ratio"] = *r.quality_ratio;
    return j;
}

void write_replicates_csv(const ExperimentReport& r, std::ostream& os)
{
    const bool particle = is_particle_method(r.config.method);
    os << (particle ? estimate_csv_header() : mc_csv_header()) << '\n';
    for (const auto& rec : r.replicates) {
        if (!rec.ok()) continue;
        os << (particle ? to_csv_row(rec.index, *rec.lp) : to_csv_row(rec.index, *rec.mc)) << '\n';
    }
}

std::vector<std::string_view> figure_ids() { return {"fig1", "fig2", "fig3", "fig4", "fig5", "table_quality"}; }

void emit_figure_data(const ExperimentReport& r, std::string_view id, std::ostream& os)
{
    const auto num = [](double v) {
        char buf[32];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, end);
    };

    if (id == "fig1" || id == "fig3") {
        require_particle(r, id);
        const auto [lo, hi] = confidence_interval(band_center(r), r.config.N);
        os << "rep,p_hat,I_p_low,I_p_high\n";
        for (const auto& rec : r.replicates)
            if (rec.ok()) os << rec.index << ',' << num(rec.lp->p_hat) << ',' << num(lo) << ',' << num(hi) << '\n';
    } else if (id == "fig2" || id == "fig5") {
        require_particle(r, id);
        if (!r.companion_summary) throw std::invalid_argument(std::string(id) + " needs mc_replicates > 0");
        const auto [lo, hi] = confidence_interval(band_center(r), r.config.N);
        os << "method,rep,estimate,ci_low,ci_high\n";
        for (const auto& rec : r.replicates)
            if (rec.ok())
                os << "last_particle," << rec.index << ',' << num(rec.lp->p_hat) << ',' << num(lo) << ',' << num(hi)
                   << '\n';
        for (const auto& rec : r.companion)
            if (rec.ok())
                os << "simple_mc," << rec.index << ',' << num(rec.mc->p_tilde) << ',' << num(rec.mc->ci_low) << ','
                   << num(rec.mc->ci_high) << '\n';
    } else if (id == "fig4") {
        require_particle(r, id);
        const EstimateResult* lp = first_particle_result(r);
        if (!lp) throw std::runtime_error("fig4: no completed replicate");
        os << "level_iteration,mean_acceptance\n";
        for (std::size_t k = 0; k < lp->acceptance_log.size(); ++k)
            os << k + 1 << ',' << num(lp->acceptance_log[k]) << '\n';
    } else if (id == "table_quality") {
        require_particle(r, id);
        if (!r.companion_summary || !r.config.p_ref)
            throw std::invalid_argument("table_quality needs mc_replicates > 0 and p_ref");
        if (!r.quality_ratio) throw std::runtime_error("table_quality: quality ratio undefined (zero RMSE or time)");
        const auto& mc = *r.companion_summary;
        const auto& lp = r.summary;
        os << "time_mc,rmse_mc,time_lp,rmse_lp,ratio\n"
           << num(mc.mean_wall_time) << ',' << num(*mc.rmse) << ',' << num(lp.mean_wall_time) << ',' << num(*lp.rmse)
           << ',' << num(*r.quality_ratio) << '\n';
    } else {
        throw std::invalid_argument("unknown figure id '" + std::string(id) + "'");
    }
}

} // namespace rarepath
