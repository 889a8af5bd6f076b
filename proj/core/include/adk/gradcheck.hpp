#pragma once

#include <functional>
#include <string>

#include "adk/ops.hpp"

namespace adk {

// Finite-difference gradient verification. Runs in f64. The checked value is
// sum(w * op(inputs)) with fixed random weights w so every output element
// contributes to the scalar.
struct GradCheckResult {
    bool pass = false;
    double max_rel_err = 0.0;
    int retries = 0;  // resamples taken after hitting a non-smooth point
    std::string note;
};

using GradFn = std::function<DTensor(const std::vector<DTensor>&)>;

// Relative error uses |ad - fd| / max(1, |ad|, |fd|). On failure the inputs
// are jittered and the check reruns, up to five times.
GradCheckResult gradcheck(const GradFn& op, std::vector<DTensor> inputs, double tol,
                          uint64_t seed, double h = 1e-5);

// One registered primitive with an in-domain input generator.
struct OpCase {
    std::string name;
    GradFn fn;
    std::function<std::vector<DTensor>(uint64_t seed)> make_inputs;
};

// Every differentiable primitive in the engine, with representative shapes.
std::vector<OpCase> builtin_op_cases();

}  // namespace adk
