#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "util/errors.hpp"

namespace forager::nn {

// Dense row-major tensor over float or double. Owns its storage; copies are
// deep, so distinct tensors never alias.
template <typename T>
class TensorT {
  public:
    using value_type = T;

    TensorT() = default;

    explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(count(shape_), T(0));
    }

    TensorT(std::initializer_list<int> shape) : TensorT(std::vector<int>(shape)) {}

    static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

    static TensorT full(std::vector<int> shape, T v) {
        TensorT t(std::move(shape));
        for (auto& x : t.data_) x = v;
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](size_t i) { return data_[i]; }
    T operator[](size_t i) const { return data_[i]; }

    // Coordinate access for ranks 1-4; hot loops index flat.
    T& at(int i) { return data_[static_cast<size_t>(i)]; }
    T& at(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    T& at(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    T& at(int i, int j, int k, int l) {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    T at(int i) const { return data_[static_cast<size_t>(i)]; }
    T at(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    T at(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    T at(int i, int j, int k, int l) const {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    void fill(T v) {
        for (auto& x : data_) x = v;
    }

    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
        os << "]";
        return os.str();
    }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(shape_);
        for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    bool operator==(const TensorT& o) const { return shape_ == o.shape_ && data_ == o.data_; }

  private:
    static size_t count(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) {
            if (d < 0) throw usage_error("tensor dimension must be non-negative");
            n *= static_cast<size_t>(d);
        }
        return s.empty() ? 0 : n;
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;

template <typename T>
void check_shape(const TensorT<T>& t, const std::vector<int>& want, const char* what) {
    if (t.shape() != want) {
        TensorT<T> w(want);
        throw usage_error(std::string(what) + ": expected shape " + w.shape_str() + ", got " +
                          t.shape_str());
    }
}

} // namespace forager::nn
