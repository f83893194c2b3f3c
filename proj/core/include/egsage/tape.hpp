#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "egsage/matrix.hpp"
#include "egsage/rng.hpp"

namespace egsage {

// Handle to a value recorded on a Tape.
struct Var {
    std::size_t id = SIZE_MAX;
};

// Row index groups for mean_rows: output row i is the element-wise mean of
// the input rows listed in groups[i]; an empty group yields a zero row.
using RowGroups = std::vector<std::vector<std::uint32_t>>;

// Reverse-mode autodiff over a fixed set of primitives. Operations record
// their output value plus whatever the backward pass needs; backward() walks
// the recording in reverse and accumulates gradients into every node that
// depends on a gradient-tracked leaf. Gradient slots are zeroed at the start
// of each backward() call, so a tape can be replayed.
class Tape {
public:
    // Registers a constant (requires_grad = false) or a parameter.
    auto leaf(Matrix value, bool requires_grad = false) -> Var;

    auto matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false) -> Var;
    auto add(Var a, Var b) -> Var;
    auto concat_cols(Var a, Var b) -> Var;
    auto relu(Var a) -> Var;
    // Inverted dropout: kept entries are scaled by 1/(1-rate) so eval mode
    // needs no rescaling. rate 0 records nothing and returns the input var.
    auto dropout(Var a, double rate, Rng& rng) -> Var;
    auto log_softmax(Var a) -> Var;
    auto mean_rows(Var a, std::shared_ptr<const RowGroups> groups) -> Var;
    auto gather_rows(Var a, std::shared_ptr<const std::vector<std::uint32_t>> rows) -> Var;
    // Scalar negative log likelihood: sum_i w(y_i) * -log_probs(i, y_i)
    // divided by sum_i w(y_i). class_weights may be null for uniform weights.
    auto nll_loss(Var log_probs,
                  std::shared_ptr<const std::vector<std::uint16_t>> labels,
                  const std::vector<double>* class_weights = nullptr) -> Var;
    auto scale(Var a, double factor) -> Var;
    auto sum(Var a) -> Var;

    // Seeds d(loss)/d(loss) = 1 and accumulates gradients in reverse order.
    // loss must be scalar (1x1).
    void backward(Var loss);

    auto value(Var v) const -> const Matrix&;
    // Gradient of the last backward() target with respect to v. StateError
    // if backward has not run or v is not gradient-tracked.
    auto grad(Var v) const -> const Matrix&;
    auto has_grad(Var v) const -> bool;
    auto size() const -> std::size_t { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        leaf,
        matmul,
        add,
        concat_cols,
        relu,
        dropout,
        log_softmax,
        mean_rows,
        gather_rows,
        nll_loss,
        scale,
        sum,
    };

    struct MatmulAux {
        bool transpose_a;
        bool transpose_b;
    };
    struct DropoutAux {
        // 0 for dropped entries, 1/(1-rate) for kept ones.
        Matrix factors;
    };
    struct MeanRowsAux {
        std::shared_ptr<const RowGroups> groups;
    };
    struct GatherAux {
        std::shared_ptr<const std::vector<std::uint32_t>> rows;
    };
    struct NllAux {
        std::shared_ptr<const std::vector<std::uint16_t>> labels;
        std::vector<double> row_weights;
        double weight_sum;
    };
    struct ScaleAux {
        double factor;
    };
    using Aux =
        std::variant<std::monostate, MatmulAux, DropoutAux, MeanRowsAux, GatherAux, NllAux, ScaleAux>;

    struct Node {
        Op op;
        std::array<std::size_t, 2> in{SIZE_MAX, SIZE_MAX};
        bool needs_grad = false;
        Matrix value;
        Matrix grad;
        Aux aux;
    };

    auto node_at(Var v) const -> const Node&;
    auto check(Var v, const char* op) const -> const Node&;
    auto push(Node node) -> Var;
    // Gradient accumulation slot, allocated as zeros on first touch.
    auto grad_slot(std::size_t id) -> Matrix&;
    void backprop_node(std::size_t id);

    std::vector<Node> nodes_;
    bool ran_backward_ = false;
};

} // namespace egsage
