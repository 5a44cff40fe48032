#include "jsq/stopping.hpp"

namespace jsq
{
    std::string to_string(StoppingKind kind)
    {
        switch (kind)
        {
        case StoppingKind::tau1:
            return "tau1";
        case StoppingKind::tau2:
            return "tau2";
        case StoppingKind::tau_s:
            return "tau_s";
        case StoppingKind::sigma:
            return "sigma";
        case StoppingKind::theta:
            return "theta";
        }
        return "?";
    }

    StoppingTimeRecord StoppingTimeRecord::from_rule(const StoppingRule& rule, const ScalingRegime& regime)
    {
        std::int64_t threshold = 0;
        switch (rule.kind)
        {
        case StoppingKind::tau1:
            threshold = idle_threshold(regime, rule.level);
            break;
        case StoppingKind::tau2:
        case StoppingKind::tau_s:
        case StoppingKind::sigma:
            threshold = space_threshold(regime, rule.level);
            break;
        case StoppingKind::theta:
            threshold = 0;
            break;
        }
        if (threshold < 0)
        {
            throw ValidationError("stopping-time level must be non-negative");
        }
        return StoppingTimeRecord(rule.kind, rule.level, threshold);
    }

    bool StoppingTimeRecord::observe(const StateView& state, double t_real)
    {
        if (t_hit_)
        {
            return false;
        }
        bool hit = false;
        switch (kind_)
        {
        case StoppingKind::tau1:
            hit = state.idle == threshold_;
            break;
        case StoppingKind::tau2:
            hit = state.q2 == threshold_;
            break;
        case StoppingKind::tau_s:
            hit = state.total == threshold_;
            break;
        case StoppingKind::sigma:
        case StoppingKind::theta:
            break;
        }
        if (hit)
        {
            t_hit_ = t_real;
        }
        return hit;
    }

    void StoppingTimeRecord::mark(double t_real)
    {
        if (!t_hit_)
        {
            t_hit_ = t_real;
        }
    }
}
