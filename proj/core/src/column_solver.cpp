#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "kpo/cg.hpp"
#include "kpo/errors.hpp"
#include "kpo/floquet.hpp"

namespace kpo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Per-column residuals r_j, j = 0..n-k-1, depend on the column only through
// Delta_j = F_{j+k} - F_j. Both models share the mirror bookkeeping below.
class ColumnModel {
public:
    virtual ~ColumnModel() = default;
    virtual void prepare(const DesignProblem& prob, const ModulationMatrix& f, int k) = 0;
    // value and dvalue/dDelta_j
    virtual double eval_delta(const Eigen::VectorXd& delta, Eigen::VectorXd* dvalue) const = 0;

    double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
        const int m = static_cast<int>(x.size());
        delta_.resize(m);
        for (int j = 0; j < m; ++j) delta_(j) = upper(x, j) - x(j);
        if (!grad) return eval_delta(delta_, nullptr);
        const double v = eval_delta(delta_, &w_);
        grad->setZero(m);
        for (int j = 0; j < m; ++j) {
            (*grad)(j) -= w_(j);
            if (j + k_ < m) (*grad)(j + k_) += w_(j);
            else (*grad)(j % k_) -= w_(j);
        }
        return v;
    }

protected:
    int k_ = 1;

private:
    double upper(const Eigen::VectorXd& x, int j) const {
        const int m = static_cast<int>(x.size());
        return j + k_ < m ? x(j + k_) : -x(j % k_);
    }
    mutable Eigen::VectorXd delta_, w_;
};

Eigen::VectorXd target_ratio(const DesignProblem& prob, int k) {
    const int m = prob.n() - k;
    Eigen::VectorXd c(m);
    for (int j = 0; j < m; ++j) c(j) = prob.lambda_c * prob.c(j + k, j) / prob.j(j + k, j);
    return c;
}

// Row j: Delta_l for the pair (j+k, j), column l-1.
Eigen::MatrixXd pair_differences(const ModulationMatrix& f, int k) {
    const int n = static_cast<int>(f.rows());
    return f.bottomRows(n - k) - f.topRows(n - k);
}

class Taylor2Model final : public ColumnModel {
public:
    void prepare(const DesignProblem& prob, const ModulationMatrix& f, int k) override {
        k_ = k;
        const int n = prob.n();
        const int m = n - k;
        Eigen::MatrixXd d = pair_differences(f, k);
        base_ = target_ratio(prob, k);
        slope_.setConstant(m, 0.5);
        const bool has_2k = 2 * k <= n - 1;
        if (has_2k) slope_ += 0.25 * d.col(2 * k - 1);
        const int tail = n - 1 - k;   // l = 1..n-1-k pairs with l + k
        for (int j = 0; j < m; ++j) {
            double u = 0.0;
            if (tail > 0) {
                u = 0.25 * d.row(j).head(tail).dot(d.row(j).segment(k, tail));
                if (has_2k) u -= 0.25 * d(j, k - 1) * d(j, 2 * k - 1);
            }
            if (k > 1) u -= 0.125 * d.row(j).head(k - 1).dot(d.row(j).head(k - 1).reverse());
            base_(j) += u;
        }
    }

    double eval_delta(const Eigen::VectorXd& delta, Eigen::VectorXd* dvalue) const override {
        r_ = base_ + slope_.cwiseProduct(delta);
        if (dvalue) *dvalue = 2.0 * r_.cwiseProduct(slope_);
        return r_.squaredNorm();
    }

private:
    Eigen::VectorXd base_, slope_;
    mutable Eigen::VectorXd r_;
};

class FullModel final : public ColumnModel {
public:
    FullModel(int n, int samples) : samples_(samples) {
        sines_.resize(n - 1, samples);
        for (int k = 1; k < n; ++k)
            for (long s = 0; s < samples; ++s)
                sines_(k - 1, s) = std::sin(kTwoPi * static_cast<double>((k * s) % samples) / samples);
    }

    void prepare(const DesignProblem& prob, const ModulationMatrix& f, int k) override {
        k_ = k;
        const int n = prob.n();
        Eigen::MatrixXd d = pair_differences(f, k);
        d.col(k - 1).setZero();
        target_ = target_ratio(prob, k);
        Eigen::MatrixXd u = d * sines_;
        for (long s = 0; s < samples_; ++s)
            u.col(s).array() += kTwoPi * static_cast<double>((k * s) % samples_) / samples_;
        cos_u_ = u.array().cos();
        sin_u_ = u.array().sin();
        sk_ = sines_.row(k - 1).array();
        (void)n;
    }

    double eval_delta(const Eigen::VectorXd& delta, Eigen::VectorXd* dvalue) const override {
        const int m = static_cast<int>(delta.size());
        if (dvalue) dvalue->resize(m);
        double total = 0.0;
        for (int j = 0; j < m; ++j) {
            arg_ = delta(j) * sk_;
            c_ = arg_.cos();
            s_ = arg_.sin();
            const double avg_cos = (c_ * cos_u_.row(j) - s_ * sin_u_.row(j)).sum() / samples_;
            const double r = target_(j) - avg_cos;
            total += r * r;
            if (dvalue) {
                const double avg_sin =
                    ((s_ * cos_u_.row(j) + c_ * sin_u_.row(j)) * sk_).sum() / samples_;
                (*dvalue)(j) = 2.0 * r * avg_sin;
            }
        }
        return total;
    }

private:
    int samples_;
    Eigen::MatrixXd sines_;
    Eigen::VectorXd target_;
    Eigen::ArrayXXd cos_u_, sin_u_;
    Eigen::Array<double, 1, Eigen::Dynamic> sk_;
    mutable Eigen::Array<double, 1, Eigen::Dynamic> arg_, c_, s_;
};

void check_column(const DesignProblem& prob, const ModulationMatrix& f, int k) {
    if (f.rows() != prob.n() || f.cols() != prob.n() - 1) throw InvalidInput("modulation matrix shape mismatch");
    if (k < 1 || k >= prob.n()) throw InvalidInput("harmonic index out of range");
}

std::unique_ptr<ColumnModel> make_model(DesignMethod method, int n, int samples) {
    if (method == DesignMethod::FullOrder) return std::make_unique<FullModel>(n, samples);
    return std::make_unique<Taylor2Model>();
}

} // namespace

double column_objective_full(const DesignProblem& prob, const ModulationMatrix& f, int k, int samples) {
    check_column(prob, f, k);
    if (samples <= 0) samples = default_samples(prob.n());
    FullModel model(prob.n(), samples);
    model.prepare(prob, f, k);
    return model.eval(column_free_variables(f, k), nullptr);
}

ColumnValue column_objective_full_gradient(const DesignProblem& prob, const ModulationMatrix& f, int k,
                                           int samples) {
    check_column(prob, f, k);
    if (samples <= 0) samples = default_samples(prob.n());
    FullModel model(prob.n(), samples);
    model.prepare(prob, f, k);
    ColumnValue out;
    out.value = model.eval(column_free_variables(f, k), &out.gradient);
    return out;
}

ColumnValue column_objective_taylor2(const DesignProblem& prob, const ModulationMatrix& f, int k) {
    check_column(prob, f, k);
    Taylor2Model model;
    model.prepare(prob, f, k);
    ColumnValue out;
    out.value = model.eval(column_free_variables(f, k), &out.gradient);
    return out;
}

DesignSolution solve_design(const DesignProblem& prob, DesignMode mode, const DesignOptions& opts) {
    const int n = prob.n();
    const int samples = opts.samples > 0 ? opts.samples : default_samples(n);
    if (mode == DesignMode::Auto)
        mode = n <= opts.full_order_max_n ? DesignMode::FullOrder : DesignMode::SecondOrder;
    const DesignMethod method = mode == DesignMode::FullOrder ? DesignMethod::FullOrder : DesignMethod::SecondOrder;
    const double eta = opts.eta > 0.0 ? opts.eta : prob.eta();

    const ModulationMatrix first = first_order_solution(prob);
    ModulationMatrix f = first;
    auto model = make_model(method, n, samples);

    auto column_value = [&](int k) {
        model->prepare(prob, f, k);
        return model->eval(column_free_variables(f, k), nullptr);
    };

    std::vector<double> tol(n), initial(n), value(n);
    std::vector<int> stalls(n, 0);
    std::vector<char> active(n, 1), retired(n, 0);
    for (int k = 1; k < n; ++k) {
        const double t = opts.tolerance_scale * eta;
        tol[k] = t * t * (n - k);
        initial[k] = value[k] = column_value(k);
    }
    active[0] = 0;

    int passes = 0;
    for (; passes < opts.max_passes; ++passes) {
        if (std::none_of(active.begin(), active.end(), [](char a) { return a != 0; })) break;
        for (int k = 1; k < n; ++k) {
            if (!active[k]) continue;
            model->prepare(prob, f, k);
            Eigen::VectorXd x = column_free_variables(f, k);
            const double before = model->eval(x, nullptr);
            GradientObjective obj = [&](const Eigen::VectorXd& v, Eigen::VectorXd& g) { return model->eval(v, &g); };
            CgOptions cg;
            cg.max_iterations = opts.max_cg_iterations;
            cg.target = 1e-6 * tol[k];
            CgResult res = minimize_cg(obj, x, cg);
            double after = before;
            if (res.value < before) {
                set_column(f, k, res.x);
                after = res.value;
            }
            value[k] = after;
            const double gain = before > 0.0 ? (before - after) / before : 1.0;
            stalls[k] = gain < opts.stagnation ? stalls[k] + 1 : 0;
            if (after <= tol[k]) {
                active[k] = 0;
            } else if (stalls[k] >= opts.stall_passes) {
                active[k] = 0;
                retired[k] = 1;
            }
        }
        // columns are coupled: re-admit converged ones that drifted above tolerance
        for (int k = 1; k < n; ++k) {
            if (active[k] || retired[k]) continue;
            value[k] = column_value(k);
            if (value[k] > tol[k]) active[k] = 1;
        }
    }

    bool reject = false;
    for (int k = 1; k < n; ++k) {
        value[k] = column_value(k);
        if (value[k] > initial[k] + 0.01 * tol[k]) reject = true;
    }

    DesignSolution base = evaluate_design(prob, first, DesignMethod::FirstOrder, samples);
    DesignSolution out = base;
    if (!reject) {
        DesignSolution opt = evaluate_design(prob, f, method, samples);
        if (opt.error <= base.error) out = std::move(opt);
    }
    out.first_order_error = base.error;
    out.passes = passes;
    out.column_objective.assign(value.begin() + 1, value.end());
    if (out.method == DesignMethod::FirstOrder) out.column_objective.assign(initial.begin() + 1, initial.end());
    return out;
}

} // namespace kpo
