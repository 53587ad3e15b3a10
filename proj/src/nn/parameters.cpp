#include "stgd/nn/parameters.hpp"

#include "stgd/core/errors.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace stgd::nn {

Parameter& ParameterStore::add(const std::string& name, Matrix value) {
  if (find(name) != nullptr) throw ConfigError("duplicate parameter name " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(value);
  p->grad = Matrix::Zero(p->value.rows(), p->value.cols());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::add_weight(const std::string& name, Eigen::Index rows,
                                      Eigen::Index cols, Eigen::Index fan_in, double gain,
                                      std::mt19937_64& rng) {
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix w(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = u(rng);
  }
  return add(name, std::move(w));
}

Parameter& ParameterStore::add_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return add(name, Matrix::Zero(rows, cols));
}

Parameter* ParameterStore::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->find(name);
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.setZero(p->value.rows(), p->value.cols());
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

std::size_t ParameterStore::copy_matching(const ParameterStore& other) {
  std::size_t copied = 0;
  for (auto& p : params_) {
    const Parameter* q = other.find(p->name);
    if (q && q->value.rows() == p->value.rows() && q->value.cols() == p->value.cols()) {
      p->value = q->value;
      ++copied;
    }
  }
  return copied;
}

void Adam::step(ParameterStore& params, double grad_scale) {
  auto& items = params.items();
  if (first_.size() != items.size()) {
    first_.clear();
    second_.clear();
    for (const auto& p : items) {
      first_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      second_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < items.size(); ++k) {
    Parameter& p = *items[k];
    const auto g = (p.grad * grad_scale).array();
    first_[k] = config_.beta1 * first_[k].array() + (1.0 - config_.beta1) * g;
    second_[k] = config_.beta2 * second_[k].array() + (1.0 - config_.beta2) * g.square();
    p.value.array() -= config_.learning_rate * (first_[k].array() / c1) /
                       ((second_[k].array() / c2).sqrt() + config_.epsilon);
  }
}

void write_matrix(std::ostream& out, const Matrix& m) {
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::istream& in) {
  std::int64_t dims[2] = {0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[0] < 0 || dims[1] < 0 || dims[0] * dims[1] > (std::int64_t{1} << 31)) {
    throw DataError("corrupted matrix header");
  }
  Matrix m(dims[0], dims[1]);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  if (!in) throw DataError("truncated matrix payload");
  return m;
}

void Adam::write(std::ostream& out) const {
  out.write(reinterpret_cast<const char*>(&steps_), sizeof(steps_));
  const std::int64_t count = static_cast<std::int64_t>(first_.size());
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (std::size_t k = 0; k < first_.size(); ++k) {
    write_matrix(out, first_[k]);
    write_matrix(out, second_[k]);
  }
}

void Adam::read(std::istream& in, const ParameterStore& params) {
  in.read(reinterpret_cast<char*>(&steps_), sizeof(steps_));
  std::int64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || count < 0) throw DataError("corrupted optimizer state");
  if (count != 0 && static_cast<std::size_t>(count) != params.items().size()) {
    throw DataError("optimizer state does not match parameter count");
  }
  first_.clear();
  second_.clear();
  for (std::int64_t k = 0; k < count; ++k) {
    first_.push_back(read_matrix(in));
    second_.push_back(read_matrix(in));
  }
}

}  // namespace stgd::nn
