#pragma once

#include <string>

#include "bilevel/io.hpp"

inline std::string corpus_path(const std::string& name) {
  return std::string(BILEVEL_CORPUS_DIR) + "/" + name + ".json";
}

inline bilevel::InstanceFile corpus(const std::string& name) { return bilevel::load_instance(corpus_path(name)); }

inline bilevel::PointEvaluation corpus_eval(const std::string& name) {
  auto f = corpus(name);
  return bilevel::evaluate(f.instance, f.candidate);
}

inline bilevel::Vector V(std::initializer_list<bilevel::Scalar> xs) { return bilevel::Vector(xs); }
