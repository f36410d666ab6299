#pragma once

// Dense row-major tensors with a reverse-mode tape.
//
// Every tensor is viewed as a matrix: rank 0 is 1x1, rank 1 of size n is
// 1xn, rank 2 is rows x cols. Higher ranks are not used by any kernel.
//
// A Tensor is a cheap shared handle. Operations record onto the tape made
// active on the calling thread by Tape::Scope, and only when at least one
// input requires a gradient. With no active tape nothing is recorded, which
// is how inference runs.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace mvpt::numcore {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
class Tape;

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient flows in
  bool requires_grad = false;
  Tape<T>* tape = nullptr;  // set while the producing node lives on a tape

  void accumulate_grad(std::size_t i, T g) {
    if (grad.empty()) grad.assign(data.size(), T{0});
    grad[i] += g;
  }
  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T{0});
    return grad.data();
  }
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);
  static Tensor identity(std::size_t n);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t numel() const { return impl_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const T> data() const { return impl_->data; }
  // Mutable access is meant for leaves (parameters, inputs). Writing into a
  // recorded intermediate invalidates its backward.
  std::span<T> mutable_data() { return impl_->data; }

  T at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }
  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }

  // Copy of the values with no gradient history.
  Tensor detach() const;

  TensorImpl<T>* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl<T>>& shared() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl<T>> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<TensorImpl<T>> impl_;

  template <typename U>
  friend Tensor<U> make_result(Shape shape);
};

// Allocates an output tensor for a kernel.
template <typename T>
Tensor<T> make_result(Shape shape);

template <typename T>
class Tape {
 public:
  struct Node {
    const char* op;
    std::vector<std::shared_ptr<TensorImpl<T>>> inputs;
    std::shared_ptr<TensorImpl<T>> output;
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape() { clear(); }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  void clear();

  void push(Node node);

  // Makes a tape the active recorder for the current thread.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  // Suspends recording on the current thread, e.g. for finite differences.
  class Pause {
   public:
    Pause();
    ~Pause();
    Pause(const Pause&) = delete;
    Pause& operator=(const Pause&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active();

 private:
  std::vector<Node> nodes_;
};

// Records `out` as produced by `op` from `inputs` when a tape is active and
// any input requires a gradient. `backward` reads out's gradient and
// accumulates into the inputs that require one.
template <typename T>
void record(const char* op, std::initializer_list<const Tensor<T>*> inputs, Tensor<T>& out,
            std::function<void()> backward);
template <typename T>
void record(const char* op, const std::vector<Tensor<T>>& inputs, Tensor<T>& out,
            std::function<void()> backward);

// Gradient of the loss with respect to every leaf that requires one.
template <typename T>
class GradientMap {
 public:
  bool contains(const Tensor<T>& leaf) const { return grads_.contains(leaf.impl()); }
  // Returns the gradient for `leaf`; zeros when no path reached it.
  Tensor<T> at(const Tensor<T>& leaf) const;
  std::size_t size() const { return grads_.size(); }

  void insert(const TensorImpl<T>* leaf, Tensor<T> grad) { grads_[leaf] = std::move(grad); }

 private:
  std::unordered_map<const TensorImpl<T>*, Tensor<T>> grads_;
};

// Runs reverse-mode accumulation from a scalar loss recorded on `tape`.
// Leaf gradients accumulate into the leaves (call zero_grad between steps)
// and are also returned as a map.
template <typename T>
GradientMap<T> backward(Tape<T>& tape, const Tensor<T>& loss);

}  // namespace mvpt::numcore
