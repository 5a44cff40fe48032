#include "jsq/functional.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jsq
{
    namespace
    {
        struct KindName
        {
            FunctionalKind kind;
            std::string_view name;
            bool parameterised;
        };

        constexpr KindName kKinds[] = {
            {FunctionalKind::time, "time", false},
            {FunctionalKind::idle, "idle", false},
            {FunctionalKind::centered_total, "centered_total", false},
            {FunctionalKind::q2, "q2", false},
            {FunctionalKind::qbar3, "qbar3", false},
            {FunctionalKind::qbar3_positive, "qbar3_positive", false},
            {FunctionalKind::idle_zero, "idle_zero", false},
            {FunctionalKind::idle_equals, "idle_eq", true},
            {FunctionalKind::total_equals, "total_eq", true},
            {FunctionalKind::x_positive_pow, "x_pos_pow", true},
            {FunctionalKind::x_at_most, "x_le", true},
        };

        double positive_pow(double x, double p)
        {
            return x > 0.0 ? std::pow(x, p) : 0.0;
        }
    }

    Functional Functional::parse(std::string_view text)
    {
        const auto colon = text.find(':');
        const auto head = text.substr(0, colon);
        for (const auto& k : kKinds)
        {
            if (k.name != head)
            {
                continue;
            }
            Functional f;
            f.kind = k.kind;
            if (k.parameterised != (colon != std::string_view::npos))
            {
                throw ValidationError("functional '" + std::string(text) +
                                      (k.parameterised ? "' needs a ':value' argument" : "' takes no argument"));
            }
            if (k.parameterised)
            {
                const auto arg = std::string(text.substr(colon + 1));
                try
                {
                    std::size_t used = 0;
                    f.param = std::stod(arg, &used);
                    if (used != arg.size())
                    {
                        throw std::invalid_argument(arg);
                    }
                }
                catch (const std::exception&)
                {
                    throw ValidationError("bad argument in functional '" + std::string(text) + "'");
                }
                if (f.kind == FunctionalKind::x_positive_pow && !(f.param > 0.0))
                {
                    throw ValidationError("x_pos_pow needs p > 0");
                }
            }
            return f;
        }
        throw ValidationError("unknown functional '" + std::string(text) + "'");
    }

    std::string Functional::name() const
    {
        for (const auto& k : kKinds)
        {
            if (k.kind == kind)
            {
                if (!k.parameterised)
                {
                    return std::string(k.name);
                }
                std::ostringstream os;
                os << k.name << ':' << param;
                return os.str();
            }
        }
        return "?";
    }

    bool Functional::total_only() const noexcept
    {
        switch (kind)
        {
        case FunctionalKind::time:
        case FunctionalKind::centered_total:
        case FunctionalKind::total_equals:
        case FunctionalKind::x_positive_pow:
        case FunctionalKind::x_at_most:
            return true;
        default:
            return false;
        }
    }

    bool Functional::idle_only() const noexcept
    {
        switch (kind)
        {
        case FunctionalKind::time:
        case FunctionalKind::idle:
        case FunctionalKind::idle_zero:
        case FunctionalKind::idle_equals:
            return true;
        default:
            return false;
        }
    }

    double Functional::operator()(const StateView& s, const ScalingRegime& regime) const
    {
        switch (kind)
        {
        case FunctionalKind::time:
            return 1.0;
        case FunctionalKind::idle:
            return static_cast<double>(s.idle);
        case FunctionalKind::centered_total:
            return static_cast<double>(s.total - regime.n);
        case FunctionalKind::q2:
            return static_cast<double>(s.q2);
        case FunctionalKind::qbar3:
            return static_cast<double>(s.qbar3);
        case FunctionalKind::qbar3_positive:
            return s.qbar3 > 0 ? 1.0 : 0.0;
        case FunctionalKind::idle_zero:
            return s.idle == 0 ? 1.0 : 0.0;
        case FunctionalKind::idle_equals:
            return static_cast<double>(s.idle) == param ? 1.0 : 0.0;
        case FunctionalKind::total_equals:
            return static_cast<double>(s.total) == param ? 1.0 : 0.0;
        case FunctionalKind::x_positive_pow:
            return positive_pow(static_cast<double>(s.total - regime.n) / regime.space_scale(), param);
        case FunctionalKind::x_at_most:
            return static_cast<double>(s.total - regime.n) / regime.space_scale() <= param ? 1.0 : 0.0;
        }
        return 0.0;
    }

    std::vector<Functional> parse_functionals(const std::vector<std::string>& names)
    {
        std::vector<Functional> out;
        out.reserve(names.size());
        for (const auto& n : names)
        {
            out.push_back(Functional::parse(n));
        }
        return out;
    }

    double OccupationHistogram::total() const noexcept
    {
        double sum = 0.0;
        for (double b : bins_)
        {
            sum += b;
        }
        return sum;
    }

    void OccupationHistogram::grow_to(std::int64_t value)
    {
        if (bins_.empty())
        {
            base_ = value;
            bins_.assign(1, 0.0);
            return;
        }
        const std::int64_t size = static_cast<std::int64_t>(bins_.size());
        const std::int64_t slack = size / 2 + 16;
        if (value < base_)
        {
            const std::int64_t new_base = value - slack;
            bins_.insert(bins_.begin(), static_cast<std::size_t>(base_ - new_base), 0.0);
            base_ = new_base;
        }
        else
        {
            bins_.resize(static_cast<std::size_t>(value - base_ + 1 + slack), 0.0);
        }
    }

    void OccupationHistogram::merge(const OccupationHistogram& other)
    {
        if (other.bins_.empty())
        {
            return;
        }
        add(other.lowest(), 0.0);
        add(other.highest(), 0.0);
        const auto offset = static_cast<std::size_t>(other.base_ - base_);
        for (std::size_t i = 0; i < other.bins_.size(); ++i)
        {
            bins_[offset + i] += other.bins_[i];
        }
    }

    double OccupationAccumulator::integral(const Functional& f, const ScalingRegime& regime) const
    {
        switch (f.kind)
        {
        case FunctionalKind::time:
            return time_;
        case FunctionalKind::idle:
            return idle_;
        case FunctionalKind::q2:
            return q2_;
        case FunctionalKind::qbar3:
            return qbar3_;
        case FunctionalKind::qbar3_positive:
            return qbar3_positive_;
        default:
            break;
        }
        double sum = 0.0;
        if (f.total_only())
        {
            StateView view;
            total_hist_.for_each([&](std::int64_t total, double dt) {
                view.total = total;
                sum += f(view, regime) * dt;
            });
        }
        else
        {
            StateView view;
            idle_hist_.for_each([&](std::int64_t idle, double dt) {
                view.idle = idle;
                sum += f(view, regime) * dt;
            });
        }
        return sum;
    }

    double OccupationAccumulator::average(const Functional& f, const ScalingRegime& regime) const
    {
        if (!(time_ > 0.0))
        {
            throw std::logic_error("average over an empty time window");
        }
        return integral(f, regime) / time_;
    }

    void OccupationAccumulator::merge(const OccupationAccumulator& other)
    {
        time_ += other.time_;
        idle_ += other.idle_;
        q2_ += other.q2_;
        qbar3_ += other.qbar3_;
        qbar3_positive_ += other.qbar3_positive_;
        total_hist_.merge(other.total_hist_);
        idle_hist_.merge(other.idle_hist_);
    }

    void OccupationAccumulator::clear() noexcept
    {
        time_ = idle_ = q2_ = qbar3_ = qbar3_positive_ = 0.0;
        total_hist_.clear();
        idle_hist_.clear();
    }
}
