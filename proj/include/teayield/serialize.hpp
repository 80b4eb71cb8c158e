#pragma once

#include <iosfwd>
#include <string>

#include "teayield/ensemble.hpp"
#include "teayield/regressors.hpp"

namespace teayield {

// Plain-text model files. The first line names the model type and format
// version ("teayield-ensemble 1"); the rest is whitespace-separated tokens
// with doubles in shortest round-trip form, so a reload predicts bit for bit
// what the saved model did. The layout is documented in the README.

void save_model(std::ostream& out, const LinearModel& model);
void save_model(std::ostream& out, const MLPModel& model);
/// Stores hyperparameters and training data; loading refits the factorization.
void save_model(std::ostream& out, const GPRModel& model);
void save_model(std::ostream& out, const EnsembleModel& model);

LinearModel load_linear(std::istream& in);
MLPModel load_mlp(std::istream& in);
GPRModel load_gpr(std::istream& in);
EnsembleModel load_ensemble(std::istream& in);

void save_ensemble_file(const std::string& path, const EnsembleModel& model);
EnsembleModel load_ensemble_file(const std::string& path);

}  // namespace teayield
