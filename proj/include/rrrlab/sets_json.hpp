// rrrlab: JSON (de)serialization of set oracles. Schema in docs/formats.md.
#pragma once

#include "rrrlab/sets.hpp"

#include <json.hpp>

namespace rrrlab::sets {

namespace detail {

inline nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Vec vec_from_json(const nlohmann::json& a) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (const auto& x : a) v[i++] = x.get<double>();
  return v;
}

// box bounds allow "inf"/"-inf" strings and null for unbounded coordinates
inline Vec bound_from_json(const nlohmann::json& a, double unbounded) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (const auto& x : a) {
    if (x.is_null()) v[i] = unbounded;
    else if (x.is_string()) v[i] = (x.get<std::string>() == "-inf") ? -kInf : kInf;
    else v[i] = x.get<double>();
    ++i;
  }
  return v;
}

inline nlohmann::json bound_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] == kInf) a.push_back("inf");
    else if (v[i] == -kInf) a.push_back("-inf");
    else a.push_back(v[i]);
  }
  return a;
}

}  // namespace detail

inline nlohmann::json to_json(const SetOracle& set) {
  using nlohmann::json;
  json j;
  j["kind"] = set.kind();
  if (const auto* a = set.as_affine()) {
    j["basepoint"] = detail::vec_to_json(a->basepoint());
    json basis = json::array();
    for (Eigen::Index c = 0; c < a->basis().cols(); ++c)
      basis.push_back(detail::vec_to_json(a->basis().col(c)));
    j["tangent_basis"] = basis;
  } else if (const auto* s = set.as_sphere()) {
    j["center"] = detail::vec_to_json(s->center());
    j["radius"] = s->radius();
  } else if (const auto* b = set.as_box()) {
    j["lower"] = detail::bound_to_json(b->lower());
    j["upper"] = detail::bound_to_json(b->upper());
  } else if (const auto* f = set.as_finite()) {
    json pts = json::array();
    for (const Vec& p : f->points()) pts.push_back(detail::vec_to_json(p));
    j["points"] = pts;
  } else if (const auto* bl = set.as_bilinear()) {
    j["target"] = bl->target();
    j["factor_dim"] = bl->factor_dim();
    j["nonneg"] = bl->nonneg();
  } else if (const auto* c = set.as_consensus()) {
    j["copies"] = c->copies();
    j["copy_dim"] = c->copy_dim();
    j["nonneg"] = c->nonneg();
  } else if (const auto* pr = set.as_product()) {
    json blocks = json::array();
    for (const auto& ch : pr->children()) {
      json blk;
      json indices = json::array();
      for (auto i : ch.idx) indices.push_back(i);
      blk["indices"] = indices;
      blk["oracle"] = to_json(detail::OracleAccess::wrap(ch.oracle));
      blocks.push_back(blk);
    }
    j["blocks"] = blocks;
  }
  return j;
}

inline SetOracle from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    Vec p = detail::vec_from_json(j.at("basepoint"));
    const auto& basis = j.at("tangent_basis");
    Mat U(p.size(), static_cast<Eigen::Index>(basis.size()));
    Eigen::Index c = 0;
    for (const auto& col : basis) U.col(c++) = detail::vec_from_json(col);
    return SetOracle::affine(std::move(p), std::move(U));
  }
  if (kind == "sphere")
    return SetOracle::sphere(detail::vec_from_json(j.at("center")), j.at("radius").get<double>());
  if (kind == "box")
    return SetOracle::box(detail::bound_from_json(j.at("lower"), -kInf),
                          detail::bound_from_json(j.at("upper"), kInf));
  if (kind == "finite") {
    std::vector<Vec> pts;
    for (const auto& p : j.at("points")) pts.push_back(detail::vec_from_json(p));
    return SetOracle::finite(std::move(pts));
  }
  if (kind == "bilinear")
    return SetOracle::bilinear(j.at("target").get<double>(),
                               j.at("factor_dim").get<Eigen::Index>(),
                               j.value("nonneg", false));
  if (kind == "consensus")
    return SetOracle::consensus(j.at("copies").get<Eigen::Index>(),
                                j.at("copy_dim").get<Eigen::Index>(),
                                j.value("nonneg", false));
  if (kind == "product") {
    std::vector<ProductBlock> blocks;
    for (const auto& blk : j.at("blocks")) {
      ProductBlock b;
      b.oracle = from_json(blk.at("oracle"));
      if (blk.contains("indices"))
        for (const auto& i : blk.at("indices")) b.indices.push_back(i.get<Eigen::Index>());
      blocks.push_back(std::move(b));
    }
    return make_product(std::move(blocks));
  }
  throw std::invalid_argument("set JSON: unknown kind '" + kind + "'");
}

}  // namespace rrrlab::sets
