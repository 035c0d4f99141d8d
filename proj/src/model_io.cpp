#include "mce/model_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace mce {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(sizeof(double) == 8, "model container assumes 64-bit doubles");

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw std::runtime_error(path + ": truncated model file");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[i]) << (8 * i);
  return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw std::runtime_error(path + ": truncated model file");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[i]) << (8 * i);
  return v;
}

// Arrays are written column-major as little-endian doubles. The build
// targets little-endian machines; byte-swapping is out of scope.
void write_array(std::ostream& out, const Eigen::MatrixXd& M) {
  out.write(reinterpret_cast<const char*>(M.data()),
            static_cast<std::streamsize>(sizeof(double)) * M.size());
}

Eigen::MatrixXd read_array(std::istream& in, const std::string& path, Eigen::Index rows,
                           Eigen::Index cols) {
  Eigen::MatrixXd M(rows, cols);
  if (!in.read(reinterpret_cast<char*>(M.data()),
               static_cast<std::streamsize>(sizeof(double)) * M.size())) {
    throw std::runtime_error(path + ": truncated model array payload");
  }
  return M;
}

nlohmann::json array_entry(const std::string& name, const Eigen::MatrixXd& M) {
  return {{"name", name}, {"rows", M.rows()}, {"cols", M.cols()}};
}

void write_container(const std::string& path, nlohmann::json header,
                     const std::vector<const Eigen::MatrixXd*>& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  const std::string text = header.dump();
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* M : arrays) write_array(out, *M);
  if (!out) throw std::runtime_error("failed writing model file: " + path);
}

nlohmann::json common_header(const char* type, double lambda, Eigen::Index n, Eigen::Index d,
                             Eigen::Index m, const std::vector<std::string>& class_names,
                             const ScalingParams& scaling) {
  nlohmann::json j;
  j["type"] = type;
  j["lambda"] = lambda;
  j["n"] = n;
  j["d"] = d;
  j["m"] = m;
  j["class_names"] = class_names;
  if (scaling.col_min.size() > 0) j["scaling"] = scaling.to_json();
  return j;
}

}  // namespace

void save_model(const std::string& path, const FittedMCE& model) {
  nlohmann::json header = common_header("implicit", model.lambda, model.n(), model.X.cols(),
                                        model.num_classes(), model.class_names, model.scaling);
  header["kernel"] = model.kernel.to_json();
  header["arrays"] = {array_entry("X", model.X), array_entry("Y", model.Y),
                      array_entry("V", model.V)};
  write_container(path, std::move(header), {&model.X, &model.Y, &model.V});
}

void save_model(const std::string& path, const ExplicitFittedMCE& model) {
  nlohmann::json header = common_header("explicit", model.lambda, model.n(), model.X.cols(),
                                        model.num_classes(), model.class_names, model.scaling);
  header["feature_map"] = model.map->to_json();
  const Eigen::MatrixXd params = model.map->params();
  header["arrays"] = {array_entry("feature_params", params), array_entry("X", model.X),
                      array_entry("Y", model.Y), array_entry("W", model.W)};
  write_container(path, std::move(header), {&params, &model.X, &model.Y, &model.W});
}

AnyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": not a model file (bad magic)");
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion) {
    throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));
  }
  const std::uint64_t header_len = read_u64(in, path);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw std::runtime_error(path + ": truncated model header");
  }
  const nlohmann::json header = nlohmann::json::parse(text);

  std::vector<Eigen::MatrixXd> arrays;
  for (const auto& entry : header.at("arrays")) {
    arrays.push_back(read_array(in, path, entry.at("rows").get<Eigen::Index>(),
                                entry.at("cols").get<Eigen::Index>()));
  }

  const double lambda = header.at("lambda").get<double>();
  std::vector<std::string> class_names =
      header.at("class_names").get<std::vector<std::string>>();
  ScalingParams scaling;
  if (header.contains("scaling")) scaling = ScalingParams::from_json(header.at("scaling"));

  if (header.at("type") == "implicit") {
    FittedMCE model;
    model.kernel = KernelSpec::from_json(header.at("kernel"));
    model.lambda = lambda;
    model.X = std::move(arrays[0]);
    model.Y = std::move(arrays[1]);
    model.V = std::move(arrays[2]);
    model.class_names = std::move(class_names);
    model.scaling = std::move(scaling);
    model.chol = cholesky_psd_shifted(gram(model.kernel, model.X),
                                      static_cast<double>(model.n()) * model.lambda);
    return model;
  }

  auto map = std::make_shared<FeatureMap>(FeatureMap::from_json(header.at("feature_map")));
  map->set_params(Eigen::VectorXd(arrays[0]));
  ExplicitFittedMCE model = fit_explicit(map, lambda, arrays[1], arrays[2]);
  model.W = std::move(arrays[3]);  // stored weights win bit-for-bit
  model.class_names = std::move(class_names);
  model.scaling = std::move(scaling);
  return model;
}

Eigen::Index model_input_dim(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.X.cols(); }, model);
}

const std::vector<std::string>& model_class_names(const AnyModel& model) {
  return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.class_names; },
                    model);
}

const ScalingParams& model_scaling(const AnyModel& model) {
  return std::visit([](const auto& m) -> const ScalingParams& { return m.scaling; }, model);
}

Eigen::MatrixXd model_predict_proba(const AnyModel& model, const Eigen::MatrixXd& X_query) {
  return std::visit([&](const auto& m) { return predict_proba(m, X_query); }, model);
}

Eigen::VectorXd model_entropy_clipnorm(const AnyModel& model, const Eigen::MatrixXd& X_query) {
  return std::visit([&](const auto& m) { return entropy_clipnorm(m, X_query); }, model);
}

Eigen::VectorXd model_entropy_embedding(const AnyModel& model, const Eigen::MatrixXd& X_query) {
  return std::visit([&](const auto& m) { return entropy_embedding(m, X_query); }, model);
}

double model_rcb(const AnyModel& model) {
  return std::visit([](const auto& m) { return rcb(m); }, model);
}

}  // namespace mce
