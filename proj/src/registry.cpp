#include "jumpflow/registry.hpp"

#include <algorithm>

#include "jumpflow/errors.hpp"

namespace jumpflow {

namespace {

std::vector<Mat> zero_gradient(int n, int m) { return std::vector<Mat>(n, Mat::Zero(n, m)); }

void attach_additive_jumps(JumpDiffusionModel& model, std::vector<MarkAtom> atoms) {
  const int n = model.dim;
  model.mark_dim = n;
  model.state_independent_jumps = true;
  model.marks.atoms = std::move(atoms);
  model.jump = [](double, const Vec&, const Vec& mark) -> Vec { return mark; };
  model.jump_jacobian = [n](double, const Vec&, const Vec&) -> Mat { return Mat::Zero(n, n); };
}

double param(const std::map<std::string, double>& params, const std::string& name) {
  return params.at(name);
}

}  // namespace

MarkAtom atom(double mark, double rate) {
  MarkAtom a;
  a.mark = Vec::Constant(1, mark);
  a.rate = rate;
  return a;
}

std::vector<std::string> registry_keys() {
  return {"additive", "geometric", "ou_jump", "pure_jump", "rotation2d"};
}

std::map<std::string, double> registry_defaults(const std::string& key) {
  if (key == "additive") return {{"dim", 1}, {"drift", 0.5}, {"sigma", 0.3}};
  if (key == "geometric") return {{"alpha", 0.1}, {"sigma", 0.3}};
  if (key == "ou_jump") return {{"theta", 1.0}, {"sigma", 0.5}};
  if (key == "pure_jump") return {{"dim", 1}};
  if (key == "rotation2d") return {{"omega", 1.0}, {"sigma", 0.0}};
  throw InvalidModelError("unknown model key '" + key + "'");
}

std::vector<MarkAtom> registry_default_atoms(const std::string& key, int dim) {
  if (key == "additive") return {};
  if (key == "geometric") return {atom(0.2, 0.5), atom(-0.15, 0.5)};
  if (key == "ou_jump") return {atom(0.5, 1.0), atom(-0.5, 1.0)};
  if (key == "pure_jump") {
    MarkAtom a;
    a.mark = Vec::Ones(dim);
    a.rate = 1.0;
    return {a};
  }
  if (key == "rotation2d") return {};
  throw InvalidModelError("unknown model key '" + key + "'");
}

JumpDiffusionModel make_additive(const Vec& drift, const Mat& diffusion,
                                 std::vector<MarkAtom> atoms) {
  JumpDiffusionModel model;
  model.name = "additive";
  model.dim = static_cast<int>(drift.size());
  model.noise_dim = static_cast<int>(diffusion.cols());
  model.autonomous = true;
  const int n = model.dim;
  const int m = model.noise_dim;
  model.drift = [drift](double, const Vec&) -> Vec { return drift; };
  model.diffusion = [diffusion](double, const Vec&) -> Mat { return diffusion; };
  model.drift_jacobian = [n](double, const Vec&) -> Mat { return Mat::Zero(n, n); };
  model.diffusion_gradient = [n, m](double, const Vec&) { return zero_gradient(n, m); };
  model.diffusion_hessian = [n, m](double, const Vec&) {
    return std::vector<Mat>(n * n, Mat::Zero(n, m));
  };
  attach_additive_jumps(model, std::move(atoms));
  return model;
}

JumpDiffusionModel make_geometric(double alpha, double sigma, std::vector<MarkAtom> atoms) {
  JumpDiffusionModel model;
  model.name = "geometric";
  model.dim = 1;
  model.noise_dim = 1;
  model.mark_dim = 1;
  model.autonomous = true;
  model.drift = [alpha](double, const Vec& x) -> Vec { return alpha * x; };
  model.diffusion = [sigma](double, const Vec& x) -> Mat { return Mat::Constant(1, 1, sigma * x[0]); };
  model.jump = [](double, const Vec& x, const Vec& c) -> Vec { return c[0] * x; };
  model.drift_jacobian = [alpha](double, const Vec&) -> Mat { return Mat::Constant(1, 1, alpha); };
  model.diffusion_gradient = [sigma](double, const Vec&) {
    return std::vector<Mat>{Mat::Constant(1, 1, sigma)};
  };
  model.diffusion_hessian = [](double, const Vec&) { return std::vector<Mat>{Mat::Zero(1, 1)}; };
  model.jump_jacobian = [](double, const Vec&, const Vec& c) -> Mat {
    return Mat::Constant(1, 1, c[0]);
  };
  for (const auto& a : atoms) {
    if (!(a.mark.size() == 1 && a.mark[0] > -1.0)) {
      throw InvalidModelError("geometric jump factor must exceed -1");
    }
  }
  model.marks.atoms = std::move(atoms);
  return model;
}

JumpDiffusionModel make_ou_jump(double theta, double sigma, std::vector<MarkAtom> atoms) {
  JumpDiffusionModel model;
  model.name = "ou_jump";
  model.dim = 1;
  model.noise_dim = 1;
  model.autonomous = true;
  model.drift = [theta](double, const Vec& x) -> Vec { return -theta * x; };
  model.diffusion = [sigma](double, const Vec&) -> Mat { return Mat::Constant(1, 1, sigma); };
  model.drift_jacobian = [theta](double, const Vec&) -> Mat { return Mat::Constant(1, 1, -theta); };
  model.diffusion_gradient = [](double, const Vec&) { return zero_gradient(1, 1); };
  model.diffusion_hessian = [](double, const Vec&) { return zero_gradient(1, 1); };
  attach_additive_jumps(model, std::move(atoms));
  return model;
}

JumpDiffusionModel make_pure_jump(std::vector<MarkAtom> atoms, int dim) {
  JumpDiffusionModel model = make_additive(Vec::Zero(dim), Mat::Zero(dim, 0), std::move(atoms));
  model.name = "pure_jump";
  return model;
}

JumpDiffusionModel make_rotation2d(double omega, double sigma, std::vector<MarkAtom> atoms) {
  JumpDiffusionModel model;
  model.name = "rotation2d";
  model.dim = 2;
  model.noise_dim = 2;
  model.autonomous = true;
  model.drift = [omega](double, const Vec& x) -> Vec {
    Vec a(2);
    a << -omega * x[1], omega * x[0];
    return a;
  };
  model.diffusion = [sigma](double, const Vec&) -> Mat { return sigma * Mat::Identity(2, 2); };
  model.drift_jacobian = [omega](double, const Vec&) -> Mat {
    Mat j(2, 2);
    j << 0.0, -omega, omega, 0.0;
    return j;
  };
  model.diffusion_gradient = [](double, const Vec&) { return zero_gradient(2, 2); };
  model.diffusion_hessian = [](double, const Vec&) { return std::vector<Mat>(4, Mat::Zero(2, 2)); };
  attach_additive_jumps(model, std::move(atoms));
  return model;
}

JumpDiffusionModel make_model(const ModelSpec& spec) {
  auto params = registry_defaults(spec.key);
  for (const auto& [name, value] : spec.params) {
    if (!params.count(name)) {
      throw InvalidModelError("model '" + spec.key + "' has no parameter '" + name + "'");
    }
    params[name] = value;
  }
  int dim = 1;
  if (params.count("dim")) {
    dim = static_cast<int>(params.at("dim"));
    if (dim < 1 || static_cast<double>(dim) != params.at("dim")) {
      throw InvalidModelError("dim must be a positive integer");
    }
  }
  if (spec.key == "rotation2d") dim = 2;
  if (spec.key == "geometric" || spec.key == "ou_jump") dim = 1;

  std::vector<MarkAtom> atoms =
      spec.atoms ? *spec.atoms : registry_default_atoms(spec.key, dim);
  for (const auto& a : atoms) {
    if (a.mark.size() != dim) {
      throw InvalidModelError("model '" + spec.key + "' expects marks of dimension " +
                              std::to_string(dim));
    }
  }

  JumpDiffusionModel model;
  if (spec.key == "additive") {
    model = make_additive(Vec::Constant(dim, param(params, "drift")),
                          param(params, "sigma") * Mat::Identity(dim, dim), std::move(atoms));
  } else if (spec.key == "geometric") {
    model = make_geometric(param(params, "alpha"), param(params, "sigma"), std::move(atoms));
  } else if (spec.key == "ou_jump") {
    model = make_ou_jump(param(params, "theta"), param(params, "sigma"), std::move(atoms));
  } else if (spec.key == "pure_jump") {
    model = make_pure_jump(std::move(atoms), dim);
  } else {
    model = make_rotation2d(param(params, "omega"), param(params, "sigma"), std::move(atoms));
  }
  validate_marks(model.marks);
  return model;
}

}  // namespace jumpflow
