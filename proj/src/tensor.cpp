#include "schedsynth/tensor.hpp"

#include <unordered_map>

#include "schedsynth/errors.hpp"

namespace schedsynth {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_size(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::vector<double>& Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const auto n = shape_size(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    if (shape.empty() || shape.size() > 2) throw ShapeError("tensors are rank 1 or 2, got " + shape_string(shape));
    if (shape_size(shape) != data.size()) {
        throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " + shape_string(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({1}, {v}, requires_grad); }

std::size_t Tensor::rows() const { return rank() == 1 ? 1 : node_->shape[0]; }
std::size_t Tensor::cols() const { return rank() == 1 ? node_->shape[0] : node_->shape[1]; }

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
    return node_->value[0];
}

void Tensor::zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(Shape shape, std::vector<double> value, std::string op, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->op = std::move(op);
    node->leaf = false;
    bool needs = false;
    if (g_grad_enabled) {
        for (const auto& p : parents) needs = needs || p.requires_grad();
    }
    if (needs) {
        node->requires_grad = true;
        node->parents.reserve(parents.size());
        for (const auto& p : parents) node->parents.push_back(p.node_ptr());
        node->backward = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) throw ShapeError("backward needs a scalar loss");
    Node* root = loss.node();
    if (!root->requires_grad) return;

    // Iterative post-order DFS; a grey node met again means a cycle.
    enum class Mark { grey, black };
    std::unordered_map<Node*, Mark> marks;
    std::vector<Node*> order;
    std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
    marks[root] = Mark::grey;
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (!parent->requires_grad) continue;
            auto it = marks.find(parent);
            if (it == marks.end()) {
                marks[parent] = Mark::grey;
                stack.push_back({parent, 0});
            } else if (it->second == Mark::grey) {
                throw NumericError("cycle detected in computation graph");
            }
        } else {
            marks[node] = Mark::black;
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->leaf) continue;
        if (!node->grad.empty() && node->backward) node->backward(*node);
        if (node != root) {
            node->grad.clear();
            node->grad.shrink_to_fit();
        }
    }
}

}  // namespace schedsynth
