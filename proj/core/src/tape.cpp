#include "egsage/tape.hpp"

#include <cmath>
#include <sstream>

#include "egsage/errors.hpp"

namespace egsage {

auto Tape::node_at(Var v) const -> const Node& {
    return nodes_[v.id];
}

auto Tape::check(Var v, const char* op) const -> const Node& {
    if (v.id >= nodes_.size()) {
        throw StateError(std::string(op) + ": var does not belong to this tape");
    }
    return nodes_[v.id];
}

auto Tape::push(Node node) -> Var {
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

auto Tape::grad_slot(std::size_t id) -> Matrix& {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
        n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    return n.grad;
}

auto Tape::leaf(Matrix value, bool requires_grad) -> Var {
    Node n;
    n.op = Op::leaf;
    n.needs_grad = requires_grad;
    n.value = std::move(value);
    return push(std::move(n));
}

auto Tape::matmul(Var a, Var b, bool transpose_a, bool transpose_b) -> Var {
    const Node& na = check(a, "matmul");
    const Node& nb = check(b, "matmul");
    Node n;
    n.op = Op::matmul;
    n.in = {a.id, b.id};
    n.needs_grad = na.needs_grad || nb.needs_grad;
    n.value = egsage::matmul(na.value, nb.value, transpose_a, transpose_b);
    n.aux = MatmulAux{transpose_a, transpose_b};
    return push(std::move(n));
}

auto Tape::add(Var a, Var b) -> Var {
    const Node& na = check(a, "add");
    const Node& nb = check(b, "add");
    Node n;
    n.op = Op::add;
    n.in = {a.id, b.id};
    n.needs_grad = na.needs_grad || nb.needs_grad;
    n.value = egsage::add(na.value, nb.value);
    return push(std::move(n));
}

auto Tape::concat_cols(Var a, Var b) -> Var {
    const Node& na = check(a, "concat_cols");
    const Node& nb = check(b, "concat_cols");
    Node n;
    n.op = Op::concat_cols;
    n.in = {a.id, b.id};
    n.needs_grad = na.needs_grad || nb.needs_grad;
    n.value = egsage::concat_cols(na.value, nb.value);
    return push(std::move(n));
}

auto Tape::relu(Var a) -> Var {
    const Node& na = check(a, "relu");
    Node n;
    n.op = Op::relu;
    n.in = {a.id, SIZE_MAX};
    n.needs_grad = na.needs_grad;
    n.value = egsage::relu(na.value);
    return push(std::move(n));
}

auto Tape::dropout(Var a, double rate, Rng& rng) -> Var {
    const Node& na = check(a, "dropout");
    if (rate < 0.0 || rate >= 1.0) {
        throw StateError("dropout: rate must lie in [0, 1)");
    }
    if (rate == 0.0) {
        return a;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    Matrix factors(na.value.rows(), na.value.cols());
    for (std::size_t i = 0; i < factors.size(); ++i) {
        factors.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    }
    Node n;
    n.op = Op::dropout;
    n.in = {a.id, SIZE_MAX};
    n.needs_grad = na.needs_grad;
    n.value = hadamard(na.value, factors);
    n.aux = DropoutAux{std::move(factors)};
    return push(std::move(n));
}

auto Tape::log_softmax(Var a) -> Var {
    const Node& na = check(a, "log_softmax");
    Node n;
    n.op = Op::log_softmax;
    n.in = {a.id, SIZE_MAX};
    n.needs_grad = na.needs_grad;
    n.value = log_softmax_rows(na.value);
    return push(std::move(n));
}

auto Tape::mean_rows(Var a, std::shared_ptr<const RowGroups> groups) -> Var {
    const Node& na = check(a, "mean_rows");
    if (!groups) {
        throw StateError("mean_rows: groups must not be null");
    }
    Matrix out(groups->size(), na.value.cols());
    for (std::size_t g = 0; g < groups->size(); ++g) {
        const auto& members = (*groups)[g];
        if (members.empty()) {
            continue;
        }
        for (std::uint32_t row : members) {
            if (row >= na.value.rows()) {
                throw DimensionError("mean_rows: group index " + std::to_string(row) +
                                     " outside input " + na.value.shape_string());
            }
            for (std::size_t c = 0; c < na.value.cols(); ++c) {
                out(g, c) += na.value(row, c);
            }
        }
        const double inv = 1.0 / static_cast<double>(members.size());
        for (std::size_t c = 0; c < out.cols(); ++c) {
            out(g, c) *= inv;
        }
    }
    Node n;
    n.op = Op::mean_rows;
    n.in = {a.id, SIZE_MAX};
    n.needs_grad = na.needs_grad;
    n.value = std::move(out);
    n.aux = MeanRowsAux{std::move(groups)};
    return push(std::move(n));
}

auto Tape::gather_rows(Var a, std::shared_ptr<const std::vector<std::uint32_t>> rows) -> Var {
    const Node& na = check(a, "gather_rows");
    if (!rows) {
        throw StateError("gather_rows: rows must not be null");
    }
    Matrix out(rows->size(), na.value.cols());
    for (std::size_t r = 0; r < rows->size(); ++r) {
        const std::uint32_t src = (*rows)[r];
        if (src >= na.value.rows()) {
            throw DimensionError("gather_rows: row index " + std::to_string(src) +
                                 " outside input " + na.value.shape_string());
        }
        for (std::size_t c = 0; c < na.value.cols(); ++c) {
            out(r, c) = na.value(src, c);
        }
    }
    Node n;
    n.op = Op::gather_rows;
    n.in = {a.id, SIZE_MAX};
    n.needs_grad = na.needs_grad;
    n.value = std::move(out);
    n.aux = GatherAux{std::move(rows)};
    return push(std::move(n));
}

auto Tape::nll_loss(Var log_probs,
                    std::shared_ptr<const std::vector<std::uint16_t>> labels,
                    const std::vector<double>* class_weights) -> Var {
    const Node& np = check(log_probs, "nll_loss");
    if (!labels) {
        throw StateError("nll_loss: labels must not be null");
    }
    if (labels->size() != np.value.rows()) {
        throw DimensionError("nll_loss: " + std::to_string(labels->size()) + " labels for " +
                             np.value.shape_string() + " log probs");
    }
    if (np.value.rows() == 0) {
        throw DimensionError("nll_loss: empty input");
    }
    std::vector<double> row_weights(labels->size());
    double weight_sum = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < labels->size(); ++i) {
        const std::uint16_t label = (*labels)[i];
        if (label >= np.value.cols()) {
            throw ArtifactError("nll_loss: label " + std::to_string(label) + " out of range at edge " +
                                std::to_string(i));
        }
        double w = 1.0;
        if (class_weights != nullptr) {
            if (label >= class_weights->size()) {
                throw ArtifactError("nll_loss: no class weight for label " + std::to_string(label));
            }
            w = (*class_weights)[label];
        }
        row_weights[i] = w;
        weight_sum += w;
        acc += w * -np.value(i, label);
    }
    if (weight_sum <= 0.0) {
        throw NumericError("nll_loss: class weights sum to zero");
    }
    Matrix out(1, 1);
    out(0, 0) = acc / weight_sum;
    Node n;
    n.op = Op::nll_loss;
    n.in = {log_probs.id, SIZE_MAX};
    n.needs_grad = np.needs_grad;
    n.value = std::move(out);
    n.aux = NllAux{std::move(labels), std::move(row_weights), weight_sum};
    return push(std::move(n));
}

auto Tape::scale(Var a, double factor) -> Var {
    const Node& na = check(a, "scale");
    Node n;
    n.op = Op::scale;
    n.in = {a.id, SIZE_MAX};
    n.needs_grad = na.needs_grad;
    n.value = egsage::scale(na.value, factor);
    n.aux = ScaleAux{factor};
    return push(std::move(n));
}

auto Tape::sum(Var a) -> Var {
    const Node& na = check(a, "sum");
    Matrix out(1, 1);
    out(0, 0) = egsage::sum(na.value);
    Node n;
    n.op = Op::sum;
    n.in = {a.id, SIZE_MAX};
    n.needs_grad = na.needs_grad;
    n.value = std::move(out);
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    if (nodes_.empty()) {
        throw StateError("backward: tape is empty, record a forward pass first");
    }
    check(loss, "backward");
    const Node& target = nodes_[loss.id];
    if (target.value.rows() != 1 || target.value.cols() != 1) {
        throw StateError("backward: loss must be scalar, got " + target.value.shape_string());
    }
    for (Node& n : nodes_) {
        n.grad = Matrix();
    }
    grad_slot(loss.id)(0, 0) = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        const Node& n = nodes_[id];
        if (n.grad.empty() || !n.needs_grad || n.op == Op::leaf) {
            continue;
        }
        backprop_node(id);
    }
    ran_backward_ = true;
}

void Tape::backprop_node(std::size_t id) {
    Node& n = nodes_[id];
    const Matrix& up = n.grad;
    const auto wants = [&](std::size_t input) { return nodes_[input].needs_grad; };

    switch (n.op) {
    case Op::matmul: {
        const auto& aux = std::get<MatmulAux>(n.aux);
        const Matrix& a = nodes_[n.in[0]].value;
        const Matrix& b = nodes_[n.in[1]].value;
        if (wants(n.in[0])) {
            Matrix da;
            if (!aux.transpose_a && !aux.transpose_b) {
                da = egsage::matmul(up, b, false, true);
            } else if (!aux.transpose_a && aux.transpose_b) {
                da = egsage::matmul(up, b, false, false);
            } else if (aux.transpose_a && !aux.transpose_b) {
                da = egsage::matmul(b, up, false, true);
            } else {
                da = egsage::matmul(b, up, true, true);
            }
            Matrix& slot = grad_slot(n.in[0]);
            slot = egsage::add(slot, da);
        }
        if (wants(n.in[1])) {
            Matrix db;
            if (!aux.transpose_a && !aux.transpose_b) {
                db = egsage::matmul(a, up, true, false);
            } else if (!aux.transpose_a && aux.transpose_b) {
                db = egsage::matmul(up, a, true, false);
            } else if (aux.transpose_a && !aux.transpose_b) {
                db = egsage::matmul(a, up, false, false);
            } else {
                db = egsage::matmul(up, a, true, true);
            }
            Matrix& slot = grad_slot(n.in[1]);
            slot = egsage::add(slot, db);
        }
        break;
    }
    case Op::add: {
        for (int side = 0; side < 2; ++side) {
            if (wants(n.in[side])) {
                Matrix& slot = grad_slot(n.in[side]);
                slot = egsage::add(slot, up);
            }
        }
        break;
    }
    case Op::concat_cols: {
        const std::size_t left_cols = nodes_[n.in[0]].value.cols();
        if (wants(n.in[0])) {
            Matrix& slot = grad_slot(n.in[0]);
            for (std::size_t r = 0; r < up.rows(); ++r) {
                for (std::size_t c = 0; c < left_cols; ++c) {
                    slot(r, c) += up(r, c);
                }
            }
        }
        if (wants(n.in[1])) {
            Matrix& slot = grad_slot(n.in[1]);
            for (std::size_t r = 0; r < up.rows(); ++r) {
                for (std::size_t c = 0; c < slot.cols(); ++c) {
                    slot(r, c) += up(r, left_cols + c);
                }
            }
        }
        break;
    }
    case Op::relu: {
        if (wants(n.in[0])) {
            const Matrix& a = nodes_[n.in[0]].value;
            Matrix& slot = grad_slot(n.in[0]);
            // Subgradient at exactly 0 is taken as 0.
            for (std::size_t i = 0; i < slot.size(); ++i) {
                if (a.data()[i] > 0.0) {
                    slot.data()[i] += up.data()[i];
                }
            }
        }
        break;
    }
    case Op::dropout: {
        if (wants(n.in[0])) {
            const auto& aux = std::get<DropoutAux>(n.aux);
            Matrix& slot = grad_slot(n.in[0]);
            slot = egsage::add(slot, hadamard(up, aux.factors));
        }
        break;
    }
    case Op::log_softmax: {
        if (wants(n.in[0])) {
            Matrix& slot = grad_slot(n.in[0]);
            for (std::size_t r = 0; r < up.rows(); ++r) {
                double row_sum = 0.0;
                for (std::size_t c = 0; c < up.cols(); ++c) {
                    row_sum += up(r, c);
                }
                for (std::size_t c = 0; c < up.cols(); ++c) {
                    slot(r, c) += up(r, c) - std::exp(n.value(r, c)) * row_sum;
                }
            }
        }
        break;
    }
    case Op::mean_rows: {
        if (wants(n.in[0])) {
            const auto& groups = *std::get<MeanRowsAux>(n.aux).groups;
            Matrix& slot = grad_slot(n.in[0]);
            for (std::size_t g = 0; g < groups.size(); ++g) {
                if (groups[g].empty()) {
                    continue;
                }
                const double inv = 1.0 / static_cast<double>(groups[g].size());
                for (std::uint32_t row : groups[g]) {
                    for (std::size_t c = 0; c < slot.cols(); ++c) {
                        slot(row, c) += up(g, c) * inv;
                    }
                }
            }
        }
        break;
    }
    case Op::gather_rows: {
        if (wants(n.in[0])) {
            const auto& rows = *std::get<GatherAux>(n.aux).rows;
            Matrix& slot = grad_slot(n.in[0]);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                for (std::size_t c = 0; c < slot.cols(); ++c) {
                    slot(rows[r], c) += up(r, c);
                }
            }
        }
        break;
    }
    case Op::nll_loss: {
        if (wants(n.in[0])) {
            const auto& aux = std::get<NllAux>(n.aux);
            const double upstream = up(0, 0);
            Matrix& slot = grad_slot(n.in[0]);
            for (std::size_t i = 0; i < aux.labels->size(); ++i) {
                slot(i, (*aux.labels)[i]) -= upstream * aux.row_weights[i] / aux.weight_sum;
            }
        }
        break;
    }
    case Op::scale: {
        if (wants(n.in[0])) {
            Matrix& slot = grad_slot(n.in[0]);
            slot = egsage::add(slot, egsage::scale(up, std::get<ScaleAux>(n.aux).factor));
        }
        break;
    }
    case Op::sum: {
        if (wants(n.in[0])) {
            const double upstream = up(0, 0);
            Matrix& slot = grad_slot(n.in[0]);
            for (std::size_t i = 0; i < slot.size(); ++i) {
                slot.data()[i] += upstream;
            }
        }
        break;
    }
    case Op::leaf:
        break;
    }
}

auto Tape::value(Var v) const -> const Matrix& {
    return check(v, "value").value;
}

auto Tape::grad(Var v) const -> const Matrix& {
    const Node& n = check(v, "grad");
    if (!ran_backward_) {
        throw StateError("grad: backward has not run on this tape");
    }
    if (n.grad.empty()) {
        throw StateError("grad: no gradient tracked for this var");
    }
    return n.grad;
}

auto Tape::has_grad(Var v) const -> bool {
    return ran_backward_ && !check(v, "has_grad").grad.empty();
}

} // namespace egsage
