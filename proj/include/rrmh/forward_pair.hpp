#pragma once

#include "rrmh/core.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <string>

namespace rrmh {

enum class Level { exact, reduced };

/// An exact forward map F and a reduced map F* over shared parameter and
/// data spaces. Implementations must be safe for concurrent const use.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Index param_dim() const = 0;
  virtual Index data_dim() const = 0;
  virtual DataVector exact(const ParameterVector& x) const = 0;
  virtual DataVector reduced(const ParameterVector& x) const = 0;
  virtual std::string name() const = 0;

  DataVector evaluate(const ParameterVector& x, Level level) const {
    return level == Level::exact ? exact(x) : reduced(x);
  }
};

/// Forward model assembled from two callables; mainly for tests and bindings.
class FunctionForwardModel final : public ForwardModel {
 public:
  using Map = std::function<DataVector(const ParameterVector&)>;

  FunctionForwardModel(Index d, Index m, Map exact, Map reduced, std::string name = "function");

  Index param_dim() const override { return d_; }
  Index data_dim() const override { return m_; }
  DataVector exact(const ParameterVector& x) const override { return exact_(x); }
  DataVector reduced(const ParameterVector& x) const override { return reduced_(x); }
  std::string name() const override { return name_; }

 private:
  Index d_, m_;
  Map exact_, reduced_;
  std::string name_;
};

/// Result of a timed forward evaluation.
struct TimedOutput {
  DataVector value;
  std::chrono::nanoseconds elapsed{0};
};

/// Instrumented handle on a ForwardModel: every evaluation goes through here
/// and is counted and timed per level. Several handles may share one model,
/// each with independent counters.
class ForwardPair {
 public:
  explicit ForwardPair(std::shared_ptr<const ForwardModel> model);

  ForwardPair(const ForwardPair&) = delete;
  ForwardPair& operator=(const ForwardPair&) = delete;

  Index param_dim() const { return model_->param_dim(); }
  Index data_dim() const { return model_->data_dim(); }
  const ForwardModel& model() const { return *model_; }
  std::shared_ptr<const ForwardModel> shared_model() const { return model_; }

  DataVector exact(const ParameterVector& x) const { return exact_timed(x).value; }
  DataVector reduced(const ParameterVector& x) const { return reduced_timed(x).value; }
  TimedOutput exact_timed(const ParameterVector& x) const;
  TimedOutput reduced_timed(const ParameterVector& x) const;
  TimedOutput evaluate_timed(const ParameterVector& x, Level level) const {
    return level == Level::exact ? exact_timed(x) : reduced_timed(x);
  }

  std::uint64_t exact_calls() const { return exact_calls_.load(); }
  std::uint64_t reduced_calls() const { return reduced_calls_.load(); }
  std::chrono::nanoseconds exact_time() const {
    return std::chrono::nanoseconds(exact_ns_.load());
  }
  std::chrono::nanoseconds reduced_time() const {
    return std::chrono::nanoseconds(reduced_ns_.load());
  }
  void reset_counters();

 private:
  TimedOutput run(const ParameterVector& x, Level level) const;

  std::shared_ptr<const ForwardModel> model_;
  mutable std::atomic<std::uint64_t> exact_calls_{0};
  mutable std::atomic<std::uint64_t> reduced_calls_{0};
  mutable std::atomic<std::int64_t> exact_ns_{0};
  mutable std::atomic<std::int64_t> reduced_ns_{0};
};

}  // namespace rrmh
