#ifndef CPZREPAIR_COUNTEREXAMPLE_SAMPLING_HPP
#define CPZREPAIR_COUNTEREXAMPLE_SAMPLING_HPP

// Start-state and parameter sampling for the observe-repair loop: naive
// samples from a formula's region, and active samples from the symmetric
// difference of the constraint before and after a repair.

#include "cpzrepair/predicates.hpp"

#include <cstdint>
#include <vector>

namespace cpzrepair {

struct SamplerConfig
{
    double p_naive = 0.1;
    int max_rejections = 100;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument when out of range.
    void validate() const;
};

struct Sample
{
    State state;
    ParamBinding theta;
    bool naive = true;      // not from the difference region
    bool fallback = false;  // region infeasible; uniform state instead
};

/// Uniform draw: every ObjectRef parameter gets an object uniformly.
ParamBinding sample_theta(const std::vector<ParamSpec>& params, const StateSpace& space, Rng& rng);

/// Draw θ, then a state in f's region: a cover element is picked uniformly,
/// sample_point gives its constrained coordinates, everything else is
/// uniform. Object poses come from `world` when given (they anchor the
/// regions). Falls back to a uniform state when no valid point is found.
Sample naive_sample(const Formula& f, const EvalContext& ctx, const std::vector<ParamSpec>& params, Rng& rng,
                    const State* world = nullptr);

/// Alternates old-not-new / new-not-old per call; p_naive of the calls,
/// and every call whose difference search runs out of rejections, return a
/// naive sample of `phi_new`.
class ActiveSampler
{
public:
    explicit ActiveSampler(SamplerConfig cfg = {});

    Sample next(const Formula& phi_old, const Formula& phi_new, const EvalContext& ctx,
                const std::vector<ParamSpec>& params, Rng& rng, const State* world = nullptr);

    const SamplerConfig& config() const { return cfg_; }

private:
    SamplerConfig cfg_;
    bool old_first_ = true;
};

}  // namespace cpzrepair

#endif  // CPZREPAIR_COUNTEREXAMPLE_SAMPLING_HPP
