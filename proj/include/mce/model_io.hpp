#pragma once

#include <string>
#include <variant>

#include "mce/model.hpp"

namespace mce {

// Versioned model container: magic + version, a JSON header (kernel spec or
// feature map, lambda, shapes, scaling, class mapping, array manifest), then
// raw little-endian 64-bit float arrays. Save -> load -> predict is
// bit-identical to in-memory predict.
using AnyModel = std::variant<FittedMCE, ExplicitFittedMCE>;

void save_model(const std::string& path, const FittedMCE& model);
void save_model(const std::string& path, const ExplicitFittedMCE& model);
AnyModel load_model(const std::string& path);

Eigen::Index model_input_dim(const AnyModel& model);
const std::vector<std::string>& model_class_names(const AnyModel& model);
const ScalingParams& model_scaling(const AnyModel& model);
Eigen::MatrixXd model_predict_proba(const AnyModel& model, const Eigen::MatrixXd& X_query);
Eigen::VectorXd model_entropy_clipnorm(const AnyModel& model, const Eigen::MatrixXd& X_query);
Eigen::VectorXd model_entropy_embedding(const AnyModel& model, const Eigen::MatrixXd& X_query);
double model_rcb(const AnyModel& model);

}  // namespace mce
