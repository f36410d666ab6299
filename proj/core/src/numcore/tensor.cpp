#include "mvpt/numcore/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "mvpt/error.hpp"

namespace mvpt::numcore {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.size() > 2) {
    throw ShapeError("tensor rank " + std::to_string(shape.size()) + " unsupported, shape " +
                     shape_string(shape));
  }
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

template <typename T>
thread_local Tape<T>* g_active_tape = nullptr;

}  // namespace

template <typename T>
Tensor<T> make_result(Shape shape) {
  check_shape(shape);
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->data.assign(shape_numel(shape), T{0});
  impl->shape = std::move(shape);
  return Tensor<T>(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  auto t = make_result<T>(std::move(shape));
  t.impl_->requires_grad = requires_grad;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto t = zeros(std::move(shape), requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " needs " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::identity(std::size_t n) {
  auto t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.impl_->data[i * n + i] = T{1};
  return t;
}

template <typename T>
std::size_t Tensor<T>::rows() const {
  return impl_->shape.size() == 2 ? impl_->shape[0] : 1;
}

template <typename T>
std::size_t Tensor<T>::cols() const {
  if (impl_->shape.empty()) return 1;
  return impl_->shape.back();
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return impl_->data[0];
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(impl_->shape, impl_->data, false);
}

template <typename T>
void Tape<T>::clear() {
  for (auto& node : nodes_) node.output->tape = nullptr;
  nodes_.clear();
}

template <typename T>
void Tape<T>::push(Node node) {
  node.output->tape = this;
  nodes_.push_back(std::move(node));
}

template <typename T>
Tape<T>::Scope::Scope(Tape& tape) : previous_(g_active_tape<T>) {
  g_active_tape<T> = &tape;
}

template <typename T>
Tape<T>::Scope::~Scope() {
  g_active_tape<T> = previous_;
}

template <typename T>
Tape<T>::Pause::Pause() : previous_(g_active_tape<T>) {
  g_active_tape<T> = nullptr;
}

template <typename T>
Tape<T>::Pause::~Pause() {
  g_active_tape<T> = previous_;
}

template <typename T>
Tape<T>* Tape<T>::active() {
  return g_active_tape<T>;
}

template <typename T>
void record(const char* op, std::initializer_list<const Tensor<T>*> inputs, Tensor<T>& out,
            std::function<void()> backward) {
  Tape<T>* tape = Tape<T>::active();
  if (tape == nullptr) return;
  bool any = false;
  for (const auto* in : inputs) any = any || in->requires_grad();
  if (!any) return;
  typename Tape<T>::Node node{op, {}, out.shared(), std::move(backward)};
  node.inputs.reserve(inputs.size());
  for (const auto* in : inputs) node.inputs.push_back(in->shared());
  out.set_requires_grad(true);
  tape->push(std::move(node));
}

template <typename T>
void record(const char* op, const std::vector<Tensor<T>>& inputs, Tensor<T>& out,
            std::function<void()> backward) {
  Tape<T>* tape = Tape<T>::active();
  if (tape == nullptr) return;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return;
  typename Tape<T>::Node node{op, {}, out.shared(), std::move(backward)};
  node.inputs.reserve(inputs.size());
  for (const auto& in : inputs) node.inputs.push_back(in.shared());
  out.set_requires_grad(true);
  tape->push(std::move(node));
}

template <typename T>
Tensor<T> GradientMap<T>::at(const Tensor<T>& leaf) const {
  auto it = grads_.find(leaf.impl());
  if (it == grads_.end()) return Tensor<T>::zeros(leaf.shape());
  return it->second;
}

template <typename T>
GradientMap<T> backward(Tape<T>& tape, const Tensor<T>& loss) {
  if (!loss.defined()) throw ValueError("backward: undefined loss tensor");
  if (loss.numel() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_string(loss.shape()));
  }
  if (tape.empty() || loss.impl()->tape != &tape) {
    throw ValueError("backward: loss has no recorded history on this tape (detached)");
  }

  // Intermediate gradients from an earlier backward over the same tape would
  // otherwise leak in.
  std::unordered_set<const TensorImpl<T>*> produced;
  for (const auto& node : tape.nodes()) {
    node.output->grad.clear();
    produced.insert(node.output.get());
  }
  loss.impl()->accumulate_grad(0, T{1});

  const auto& nodes = tape.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward();
  }

  GradientMap<T> result;
  for (const auto& node : nodes) {
    for (const auto& in : node.inputs) {
      if (!in->requires_grad || produced.contains(in.get())) continue;
      if (in->grad.empty()) continue;
      result.insert(in.get(), Tensor<T>::from(in->shape, in->grad));
    }
  }
  return result;
}

#define MVPT_INSTANTIATE(T)                                                                       \
  template class Tensor<T>;                                                                       \
  template class Tape<T>;                                                                         \
  template class GradientMap<T>;                                                                  \
  template Tensor<T> make_result<T>(Shape);                                                       \
  template void record<T>(const char*, std::initializer_list<const Tensor<T>*>, Tensor<T>&,       \
                          std::function<void()>);                                                 \
  template void record<T>(const char*, const std::vector<Tensor<T>>&, Tensor<T>&,                 \
                          std::function<void()>);                                                 \
  template GradientMap<T> backward<T>(Tape<T>&, const Tensor<T>&);

MVPT_INSTANTIATE(float)
MVPT_INSTANTIATE(double)

#undef MVPT_INSTANTIATE

}  // namespace mvpt::numcore
