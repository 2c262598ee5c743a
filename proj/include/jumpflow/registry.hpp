#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jumpflow/model.hpp"

namespace jumpflow {

// A registry family plus its parameterization. Unknown parameter names are
// rejected by make_model; missing ones take the family defaults.
struct ModelSpec {
  std::string key;
  std::map<std::string, double> params;
  std::optional<std::vector<MarkAtom>> atoms;  // nullopt -> family default
};

// Built-in families:
//   additive    a = drift (constant), b = sigma I, g = gamma
//   geometric   a = alpha x, b = sigma x, g = c x with mark c     (1D)
//   ou_jump     a = -theta x, b = sigma, g = gamma                (1D)
//   pure_jump   a = 0, b = 0, g = gamma
//   rotation2d  a = omega (-x2, x1), b = sigma I, g = gamma       (2D)
std::vector<std::string> registry_keys();

// Parameter names accepted by a family, with defaults.
std::map<std::string, double> registry_defaults(const std::string& key);
std::vector<MarkAtom> registry_default_atoms(const std::string& key, int dim);

JumpDiffusionModel make_model(const ModelSpec& spec);

JumpDiffusionModel make_additive(const Vec& drift, const Mat& diffusion,
                                 std::vector<MarkAtom> atoms = {});
JumpDiffusionModel make_geometric(double alpha, double sigma, std::vector<MarkAtom> atoms = {});
JumpDiffusionModel make_ou_jump(double theta, double sigma, std::vector<MarkAtom> atoms = {});
JumpDiffusionModel make_pure_jump(std::vector<MarkAtom> atoms, int dim = 1);
JumpDiffusionModel make_rotation2d(double omega, double sigma, std::vector<MarkAtom> atoms = {});

// Convenience for one-dimensional marks.
MarkAtom atom(double mark, double rate);

}  // namespace jumpflow
