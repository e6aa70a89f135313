#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mixprec/analysis.hpp"
#include "mixprec/rules.hpp"

namespace mixprec {

/// Genetic search settings; population and iteration counts follow the
/// published configuration.
struct SearchParams {
    int population_size = 30;
    int generations = 30;
    int tournament_size = 4;
    std::uint64_t seed = 4242;
    std::vector<RewriteRule> rules = default_rules();
};

/// Worst-case roundoff bound as a fitness; candidates whose analysis fails
/// (division by a zero range and the like) compare worse than everything.
struct Fitness {
    bool finite = false;
    Rational value;

    static Fitness infinite() { return {}; }
    static Fitness of(Rational v) { return {true, std::move(v)}; }

    bool operator<(const Fitness& o) const {
        if (finite != o.finite) return finite;
        if (!finite) return false;
        return value < o.value;
    }
    bool operator==(const Fitness& o) const {
        return finite == o.finite && (!finite || value == o.value);
    }
};

/// Uniform-double worst-case roundoff error of a pure expression over the
/// given input box, with interval ranges. The rewriting search always scores
/// against double precision; the actual assignment comes later.
inline Fitness rewrite_fitness(const ExprPtr& e, const std::map<std::string, Interval>& inputs) {
    FunctionSpec probe;
    probe.name = "_fitness";
    for (const auto& [name, iv] : inputs) {
        probe.params.push_back(name);
        probe.input_ranges.emplace(name, iv);
    }
    probe.body = e;
    try {
        RangeMap rm = compute_ranges(probe, RangeMethod::Interval);
        TypeConfig cfg = TypeConfig::uniform(probe.params, Precision::Float64);
        return Fitness::of(roundoff_error(probe, rm, cfg).bound);
    } catch (const Error&) {
        return Fitness::infinite();
    }
}

namespace detail {

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    return n == 0 ? 0 : rng() % n;
}

inline RangeQuery make_range_query(const std::map<std::string, Interval>& inputs) {
    return [&inputs](const ExprPtr& sub) -> Interval {
        FunctionSpec probe;
        probe.body = sub;
        for (const auto& [name, iv] : inputs) {
            probe.params.push_back(name);
            probe.input_ranges.emplace(name, iv);
        }
        RangeMap rm = compute_ranges(probe, RangeMethod::Interval);
        return rm.at(sub.get());
    };
}

} // namespace detail

/// Applies one uniformly chosen (node, rule) application; the expression
/// comes back unchanged when no rule fires anywhere.
inline ExprPtr mutate(const ExprPtr& e, const std::vector<RewriteRule>& rules,
                      std::mt19937_64& rng, const RangeQuery& range) {
    std::vector<RuleApplication> apps = enumerate_applications(e, rules, range);
    if (apps.empty()) return e;
    return apply_application(e, apps[detail::uniform_below(rng, apps.size())]);
}

struct GeneticResult {
    ExprPtr best;
    Fitness best_fitness;
    Fitness original_fitness;
    ExprPtr original; // let-inlined input the search ran on
    int evaluations = 0;
};

/// Evolves the let-inlined body through identity mutations with tournament
/// selection and no crossover, keeping the best expression seen whose
/// operation count does not exceed the original's. Ties prefer fewer
/// operations, then the earlier discovery.
inline GeneticResult genetic_search(const FunctionSpec& f, const SearchParams& params) {
    ExprPtr original = inline_lets(f.body);
    const int budget = count_ops(original);
    RangeQuery range = detail::make_range_query(f.input_ranges);

    std::map<std::string, Fitness> memo;
    int evaluations = 0;
    auto fitness_of = [&](const ExprPtr& e) {
        std::string key = to_source(e);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        ++evaluations;
        Fitness fit = rewrite_fitness(e, f.input_ranges);
        memo.emplace(std::move(key), fit);
        return fit;
    };

    struct Individual {
        ExprPtr expr;
        Fitness fit;
        int ops;
    };

    Fitness original_fitness = fitness_of(original);
    Individual best{original, original_fitness, budget};

    auto consider = [&](const Individual& cand) {
        if (cand.ops > budget) return;
        if (cand.fit < best.fit || (cand.fit == best.fit && cand.ops < best.ops)) best = cand;
    };

    std::mt19937_64 rng(params.seed);
    std::vector<Individual> pop(static_cast<size_t>(params.population_size),
                                Individual{original, original_fitness, budget});

    for (int gen = 0; gen < params.generations; ++gen) {
        std::vector<Individual> next;
        next.reserve(pop.size());
        for (int i = 0; i < params.population_size; ++i) {
            // tournament: sample uniformly, fittest wins, first wins ties
            size_t winner = detail::uniform_below(rng, pop.size());
            for (int t = 1; t < params.tournament_size; ++t) {
                size_t idx = detail::uniform_below(rng, pop.size());
                if (pop[idx].fit < pop[winner].fit) winner = idx;
            }
            ExprPtr mutated = mutate(pop[winner].expr, params.rules, rng, range);
            Individual child{mutated, fitness_of(mutated), count_ops(mutated)};
            consider(child);
            next.push_back(std::move(child));
        }
        pop = std::move(next);
    }

    return {best.expr, best.fit, original_fitness, original, evaluations};
}

} // namespace mixprec
