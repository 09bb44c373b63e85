#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace schedsynth {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One value in the computation graph. Parents are kept alive by shared
// ownership, so the graph is acyclic by construction.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until backward touches the node
    bool requires_grad = false;
    bool leaf = true;
    std::string op = "leaf";
    std::vector<NodePtr> parents;
    // Reads self.grad and accumulates into parents' grads.
    std::function<void(Node& self)> backward;

    std::vector<double>& ensure_grad();
};

// Dense row-major f64 tensor handle with reverse-mode autodiff.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->value.size(); }
    // Rows/cols view a rank-1 tensor as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const { return node_->value; }
    std::span<double> mutable_data() { return node_->value; }
    double item() const;
    double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

    bool requires_grad() const { return node_->requires_grad; }
    // Empty span when no gradient has been accumulated.
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() { return node_->ensure_grad(); }
    void zero_grad();

    Node* node() const { return node_.get(); }
    const NodePtr& node_ptr() const { return node_; }

private:
    NodePtr node_;
};

// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// Creates an op result. Records parents and the backward closure only when
// recording is on and some parent requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::string op, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);

// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
// calls; intermediate gradients are released once propagated.
void backward(const Tensor& loss);

}  // namespace schedsynth
