#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dcf/error.hpp"
#include "dcf/rng.hpp"

namespace dcf {

// All numerics are dense f64; tail probabilities underflow in f32.
using Tensor = Eigen::MatrixXd;

// Named parameter tensors for one model. Indices are stable once added, which
// is what the tape, the optimizer state and the serialized form all key on.
class ParamStore {
public:
    int add(std::string name, Tensor value) {
        names_.push_back(std::move(name));
        values_.push_back(std::move(value));
        return static_cast<int>(values_.size()) - 1;
    }

    int find(const std::string& name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return static_cast<int>(i);
        return -1;
    }

    std::size_t size() const { return values_.size(); }
    const std::string& name(int i) const { return names_.at(i); }
    Tensor& value(int i) { return values_.at(i); }
    const Tensor& value(int i) const { return values_.at(i); }
    std::vector<Tensor>& values() { return values_; }
    const std::vector<Tensor>& values() const { return values_; }

    // Flat row-major view of every tensor back to back; used by grad checks.
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);
    Eigen::Index total_size() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

// Fan-in scaled uniform init.
Tensor glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace dcf
