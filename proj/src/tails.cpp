#include "rovella/tails.hpp"

#include <algorithm>

#include "rovella/errors.hpp"
#include "rovella/orbit.hpp"
#include "rovella/parallel.hpp"

namespace rovella {

double TailTable::fraction(std::size_t n) const {
    return total == 0 ? 0.0 : static_cast<double>(survivors.at(n)) / static_cast<double>(total);
}

nlohmann::json TailTable::to_json() const {
    return {{"name", name},
            {"total", total},
            {"survivors", survivors},
            {"fit", fit ? fit->to_json() : nlohmann::json(nullptr)}};
}

std::optional<ExpFit> fit_tail(const TailTable& table, std::size_t min_survivors) {
    if (table.survivors.size() < 2 || table.total == 0) return std::nullopt;
    const auto mode = static_cast<std::size_t>(
        std::max_element(table.survivors.begin() + 1, table.survivors.end()) - table.survivors.begin());
    std::size_t last = mode;
    for (std::size_t n = mode; n < table.survivors.size() && table.survivors[n] >= min_survivors; ++n) last = n;
    std::vector<double> fractions(table.survivors.size());
    for (std::size_t n = 0; n < fractions.size(); ++n) fractions[n] = table.fraction(n);
    try {
        return fit_exponential_range(fractions, mode, last, 0.0);
    } catch (const InsufficientData&) {
        return std::nullopt;
    }
}

EnsembleTails ensemble_tails(const MapFamily& family, const HyperbolicConfig& cfg, const EnsembleParams& params) {
    cfg.validate();
    if (params.n_max < 1) throw ParamError("n_max must be positive");
    const auto nn = static_cast<std::size_t>(params.n_max) + 1;
    const CriticalNeighborhoods visits = tilde_b(family, 0.0, cfg.delta);
    const CriticalNeighborhoods region = tilde_b(family, 0.0, cfg.delta0 / 2);

    struct Part {
        std::vector<std::size_t> bad, hyp, ret;
        std::size_t total = 0;
        std::size_t singular = 0;
    };
    constexpr std::size_t kChunk = 2048;
    std::vector<Part> parts(chunk_count(params.samples, kChunk));
    for_each_chunk(params.samples, kChunk, params.workers, [&](std::size_t c, std::size_t begin, std::size_t end) {
        Part& part = parts[c];
        part.bad.assign(nn, 0);
        part.hyp.assign(nn, 0);
        part.ret.assign(nn, 0);
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint64_t s = derive_seed(params.seed, i);
            const double x0 = 2 * unit_interval(mix64(s ^ 0x5851F42D4C957F2DULL)) - 1;
            if (x0 == 0) {
                ++part.singular;
                continue;
            }
            const OrbitTrace tr = iterate(family, NoiseStream(s, params.eps), x0, params.n_max, cfg.delta, visits,
                                          SingularPolicy::truncate);
            if (tr.truncated) {
                ++part.singular;
                continue;
            }
            ++part.total;
            long long depth_sum = 0;
            for (std::size_t n = 0; n < nn; ++n) {
                if (n > 0) depth_sum += tr.depths[n - 1];
                if (static_cast<double>(depth_sum) >= cfg.c * static_cast<double>(n)) ++part.bad[n];
            }
            const auto times = hyperbolic_times(tr.depths, tr.length(), cfg.c_prime);
            const std::size_t h = times.empty() ? nn : static_cast<std::size_t>(times.front());
            std::size_t h_star = nn;
            for (int t : times) {
                if (region.contains(tr.points[static_cast<std::size_t>(t)])) {
                    h_star = static_cast<std::size_t>(t);
                    break;
                }
            }
            for (std::size_t n = 0; n < std::min(h, nn); ++n) ++part.hyp[n];
            for (std::size_t n = 0; n < std::min(h_star, nn); ++n) ++part.ret[n];
        }
    });

    EnsembleTails out;
    out.samples = params.samples;
    out.bad_set.name = "bad_set";
    out.first_hyperbolic.name = "first_hyperbolic_time";
    out.first_return.name = "first_hyperbolic_return";
    for (TailTable* t : {&out.bad_set, &out.first_hyperbolic, &out.first_return}) t->survivors.assign(nn, 0);
    std::size_t total = 0;
    for (const Part& part : parts) {
        total += part.total;
        out.singular_hits += part.singular;
        for (std::size_t n = 0; n < nn; ++n) {
            out.bad_set.survivors[n] += part.bad[n];
            out.first_hyperbolic.survivors[n] += part.hyp[n];
            out.first_return.survivors[n] += part.ret[n];
        }
    }
    for (TailTable* t : {&out.bad_set, &out.first_hyperbolic, &out.first_return}) {
        t->total = total;
        t->fit = fit_tail(*t, params.min_survivors);
    }
    return out;
}

}  // namespace rovella
