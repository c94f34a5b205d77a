#include "racing_sr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace racing_sr {

BatchEvaluator::BatchEvaluator(const ExpressionTree& tree, const Matrix& inputs) : rows_(inputs.rows()) {
    if (inputs.cols() != tree.n_vars()) {
        throw DimensionMismatch("input matrix has " + std::to_string(inputs.cols()) + " columns, tree expects " +
                                std::to_string(tree.n_vars()));
    }
    const auto nodes = tree.nodes();
    const std::size_t n = nodes.size();
    instrs_.resize(n);
    registers_.assign(n * rows_, 0.0);

    std::vector<char> depends(n, 0);
    // Children sit after their parent in prefix order, so a reverse sweep
    // visits every child before its parent.
    for (std::size_t k = n; k-- > 0;) {
        const Node& nd = nodes[k];
        Instr ins{nd.op, 0, 0};
        if (is_binary(nd.op)) {
            ins.lhs = k + 1;
            ins.rhs = tree.subtree_end(k + 1);
            depends[k] = static_cast<char>(depends[ins.lhs] | depends[ins.rhs]);
        } else if (is_unary(nd.op)) {
            ins.lhs = k + 1;
            depends[k] = depends[k + 1];
        } else if (nd.is_open_constant()) {
            depends[k] = 1;
        }
        instrs_[k] = ins;

        double* out = registers_.data() + k * rows_;
        if (nd.op == Op::var) {
            for (std::size_t r = 0; r < rows_; ++r) out[r] = inputs(r, nd.var);
        } else if (nd.op == Op::constant && nd.value) {
            std::fill(out, out + rows_, *nd.value);
        } else if (!depends[k]) {
            run(k);
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (nodes[k].is_open_constant()) slot_of_.push_back(k);
    }
    for (std::size_t k = n; k-- > 0;) {
        if (depends[k] && !nodes[k].is_open_constant()) dependent_.push_back(k);
    }
    depends_ = std::move(depends);
    for (auto k : dependent_) {
        if (instrs_[k].op == Op::sin || instrs_[k].op == Op::cos) {
            slopes_.assign(registers_.size(), 0.0);
            break;
        }
    }
}

void BatchEvaluator::run(std::size_t k) {
    const Instr& ins = instrs_[k];
    double* out = registers_.data() + k * rows_;
    const double* a = registers_.data() + ins.lhs * rows_;
    const double* b = registers_.data() + ins.rhs * rows_;
    const std::size_t m = rows_;
    switch (ins.op) {
    case Op::add:
        for (std::size_t r = 0; r < m; ++r) out[r] = a[r] + b[r];
        break;
    case Op::sub:
        for (std::size_t r = 0; r < m; ++r) out[r] = a[r] - b[r];
        break;
    case Op::mul:
        for (std::size_t r = 0; r < m; ++r) out[r] = a[r] * b[r];
        break;
    case Op::div:
        for (std::size_t r = 0; r < m; ++r) out[r] = a[r] / b[r];
        break;
    case Op::sin:
        for (std::size_t r = 0; r < m; ++r) out[r] = std::sin(a[r]);
        break;
    case Op::cos:
        for (std::size_t r = 0; r < m; ++r) out[r] = std::cos(a[r]);
        break;
    case Op::log:
        for (std::size_t r = 0; r < m; ++r) out[r] = std::log(a[r]);
        break;
    case Op::exp:
        for (std::size_t r = 0; r < m; ++r) out[r] = std::exp(a[r]);
        break;
    case Op::sqrt:
        for (std::size_t r = 0; r < m; ++r) out[r] = std::sqrt(a[r]);
        break;
    case Op::var:
    case Op::constant:
        break;
    }
}

void BatchEvaluator::run_dependent(std::size_t k) {
    const Instr& ins = instrs_[k];
    if (ins.op != Op::sin && ins.op != Op::cos) {
        run(k);
        return;
    }
    double* out = registers_.data() + k * rows_;
    double* slope = slopes_.data() + k * rows_;
    const double* a = registers_.data() + ins.lhs * rows_;
    if (ins.op == Op::sin) {
        for (std::size_t r = 0; r < rows_; ++r) {
            out[r] = std::sin(a[r]);
            slope[r] = std::cos(a[r]);
        }
    } else {
        for (std::size_t r = 0; r < rows_; ++r) {
            out[r] = std::cos(a[r]);
            slope[r] = -std::sin(a[r]);
        }
    }
}

std::span<const double> BatchEvaluator::evaluate(std::span<const double> constants) {
    if (constants.size() != slot_of_.size()) {
        throw DimensionMismatch("expected " + std::to_string(slot_of_.size()) + " constants, got " +
                                std::to_string(constants.size()));
    }
    for (std::size_t j = 0; j < slot_of_.size(); ++j) {
        double* out = registers_.data() + slot_of_[j] * rows_;
        std::fill(out, out + rows_, constants[j]);
    }
    for (auto k : dependent_) run_dependent(k);
    return {registers_.data(), rows_};
}

void BatchEvaluator::gradient(std::span<const double> seed, std::span<double> out) {
    if (seed.size() != rows_ || out.size() != slot_of_.size()) {
        throw DimensionMismatch("gradient buffers do not match the evaluator");
    }
    std::fill(out.begin(), out.end(), 0.0);
    if (slot_of_.empty()) return;
    const std::size_t m = rows_;
    if (adjoints_.size() != registers_.size()) adjoints_.resize(registers_.size());
    auto adj = [&](std::size_t k) { return adjoints_.data() + k * m; };
    for (auto k : dependent_) std::fill(adj(k), adj(k) + m, 0.0);
    for (auto k : slot_of_) std::fill(adj(k), adj(k) + m, 0.0);
    std::copy(seed.begin(), seed.end(), adj(0));
    auto val = [&](std::size_t k) { return registers_.data() + k * m; };
    // dependent_ lists children first; walk it backwards so every parent has
    // its full adjoint before pushing it down.
    for (auto it = dependent_.rbegin(); it != dependent_.rend(); ++it) {
        const std::size_t k = *it;
        const Instr& ins = instrs_[k];
        const double* a = adj(k);
        const double* v = val(k);
        double* la = depends_[ins.lhs] ? adj(ins.lhs) : nullptr;
        double* ra = is_binary(ins.op) && depends_[ins.rhs] ? adj(ins.rhs) : nullptr;
        const double* lv = val(ins.lhs);
        const double* rv = val(ins.rhs);
        switch (ins.op) {
        case Op::add:
            if (la) for (std::size_t r = 0; r < m; ++r) la[r] += a[r];
            if (ra) for (std::size_t r = 0; r < m; ++r) ra[r] += a[r];
            break;
        case Op::sub:
            if (la) for (std::size_t r = 0; r < m; ++r) la[r] += a[r];
            if (ra) for (std::size_t r = 0; r < m; ++r) ra[r] -= a[r];
            break;
        case Op::mul:
            if (la) for (std::size_t r = 0; r < m; ++r) la[r] += a[r] * rv[r];
            if (ra) for (std::size_t r = 0; r < m; ++r) ra[r] += a[r] * lv[r];
            break;
        case Op::div:
            if (la) for (std::size_t r = 0; r < m; ++r) la[r] += a[r] / rv[r];
            if (ra) for (std::size_t r = 0; r < m; ++r) ra[r] -= a[r] * v[r] / rv[r];
            break;
        case Op::sin:
        case Op::cos: {
            const double* slope = slopes_.data() + k * m;
            for (std::size_t r = 0; r < m; ++r) la[r] += a[r] * slope[r];
            break;
        }
        case Op::log:
            for (std::size_t r = 0; r < m; ++r) la[r] += a[r] / lv[r];
            break;
        case Op::exp:
            for (std::size_t r = 0; r < m; ++r) la[r] += a[r] * v[r];
            break;
        case Op::sqrt:
            for (std::size_t r = 0; r < m; ++r) la[r] += a[r] * 0.5 / v[r];
            break;
        case Op::var:
        case Op::constant:
            break;
        }
    }
    for (std::size_t j = 0; j < slot_of_.size(); ++j) {
        const double* a = adj(slot_of_[j]);
        double sum = 0.0;
        for (std::size_t r = 0; r < m; ++r) sum += a[r];
        out[j] = sum;
    }
}

} // namespace racing_sr
