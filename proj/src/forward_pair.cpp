#include "rrmh/forward_pair.hpp"

namespace rrmh {

FunctionForwardModel::FunctionForwardModel(Index d, Index m, Map exact, Map reduced,
                                           std::string name)
    : d_(d), m_(m), exact_(std::move(exact)), reduced_(std::move(reduced)), name_(std::move(name)) {}

ForwardPair::ForwardPair(std::shared_ptr<const ForwardModel> model) : model_(std::move(model)) {
  if (!model_) throw Error("ForwardPair: null model");
}

TimedOutput ForwardPair::run(const ParameterVector& x, Level level) const {
  require_dim(x.size(), model_->param_dim(), "forward map input");
  const auto start = std::chrono::steady_clock::now();
  DataVector out = model_->evaluate(x, level);
  const auto elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now() - start);
  if (out.size() != model_->data_dim()) {
    throw SolverError(model_->name() + ": forward map returned wrong data length");
  }
  if (!out.allFinite()) throw SolverError(model_->name() + ": forward map returned non-finite output");
  return {std::move(out), elapsed};
}

TimedOutput ForwardPair::exact_timed(const ParameterVector& x) const {
  exact_calls_.fetch_add(1);
  TimedOutput r = run(x, Level::exact);
  exact_ns_.fetch_add(r.elapsed.count());
  return r;
}

TimedOutput ForwardPair::reduced_timed(const ParameterVector& x) const {
  reduced_calls_.fetch_add(1);
  TimedOutput r = run(x, Level::reduced);
  reduced_ns_.fetch_add(r.elapsed.count());
  return r;
}

void ForwardPair::reset_counters() {
  exact_calls_ = 0;
  reduced_calls_ = 0;
  exact_ns_ = 0;
  reduced_ns_ = 0;
}

}  // namespace rrmh
