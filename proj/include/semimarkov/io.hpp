#ifndef SEMIMARKOV_IO_HPP
#define SEMIMARKOV_IO_HPP

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semimarkov/extensions.hpp"
#include "semimarkov/model.hpp"
#include "semimarkov/reduction.hpp"
#include "semimarkov/simulate.hpp"

namespace smp {

template <class S>
S scalar_from_json(const nlohmann::json& value) {
  if (value.is_string()) {
    const auto parsed = ScalarTraits<S>::from_text(value.get<std::string>());
    if (!parsed)
      fail(ErrorCode::MalformedDocument,
           "cannot parse number \"" + value.get<std::string>() + "\"");
    return *parsed;
  }
  if (value.is_number_integer())
    return S(static_cast<long>(value.get<std::int64_t>()));
  if (value.is_number()) {
    if constexpr (ScalarTraits<S>::is_exact) {
      Rational q;
      mpq_set_d(q.get_mpq_t(), value.get<double>());
      return q;
    } else {
      return value.get<double>();
    }
  }
  fail(ErrorCode::MalformedDocument, "expected a number or fraction string");
}

template <class S>
nlohmann::json scalar_to_json(const S& value) {
  if constexpr (ScalarTraits<S>::is_exact)
    return ScalarTraits<S>::repr(value);
  else
    return value;
}

template <class S>
DenseMatrix<S> matrix_from_json(const nlohmann::json& value, int rows,
                                int cols, const std::string& what) {
  if (!value.is_array() || static_cast<int>(value.size()) != rows)
    fail(ErrorCode::MalformedDocument,
         what + " must be an array of " + std::to_string(rows) + " rows");
  DenseMatrix<S> out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const auto& row = value[i];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      fail(ErrorCode::MalformedDocument,
           what + " row " + std::to_string(i) + " must have " +
               std::to_string(cols) + " entries");
    for (int j = 0; j < cols; ++j) out(i, j) = scalar_from_json<S>(row[j]);
  }
  return out;
}

template <class S>
nlohmann::json matrix_to_json(const DenseMatrix<S>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(scalar_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class S>
SojournLaw<S> law_from_json(const nlohmann::json& value) {
  if (!value.is_object() || !value.contains("kind"))
    fail(ErrorCode::MalformedDocument, "a sojourn law needs a \"kind\"");
  const std::string kind = value.at("kind").get<std::string>();
  if (kind == "point") {
    if (!value.contains("at"))
      fail(ErrorCode::MalformedDocument, "point law needs \"at\"");
    return SojournLaw<S>::point(scalar_from_json<S>(value.at("at")));
  }
  if (kind == "exp") {
    if (!value.contains("rate"))
      fail(ErrorCode::MalformedDocument, "exp law needs \"rate\"");
    return SojournLaw<S>::exponential(scalar_from_json<S>(value.at("rate")));
  }
  if (kind == "mix") {
    if (!value.contains("parts") || !value.at("parts").is_array())
      fail(ErrorCode::MalformedDocument, "mix law needs a \"parts\" array");
    std::vector<std::pair<SojournLaw<S>, S>> parts;
    for (const auto& part : value.at("parts")) {
      if (!part.contains("law") || !part.contains("weight"))
        fail(ErrorCode::MalformedDocument,
             "each mixture part needs \"law\" and \"weight\"");
      parts.emplace_back(law_from_json<S>(part.at("law")),
                         scalar_from_json<S>(part.at("weight")));
    }
    return SojournLaw<S>::mixture(std::move(parts));
  }
  fail(ErrorCode::MalformedDocument, "unknown law kind \"" + kind + "\"");
}

template <class S>
nlohmann::json law_to_json(const SojournLaw<S>& law) {
  nlohmann::json out;
  switch (law.kind) {
    case SojournLaw<S>::Kind::Point:
      out["kind"] = "point";
      out["at"] = scalar_to_json(law.value);
      break;
    case SojournLaw<S>::Kind::Exponential:
      out["kind"] = "exp";
      out["rate"] = scalar_to_json(law.value);
      break;
    case SojournLaw<S>::Kind::Mixture: {
      out["kind"] = "mix";
      nlohmann::json parts = nlohmann::json::array();
      for (const auto& [part, weight] : law.parts)
        parts.push_back({{"law", law_to_json(part)},
                         {"weight", scalar_to_json(weight)}});
      out["parts"] = std::move(parts);
      break;
    }
  }
  return out;
}

template <class S>
struct ModelDocument {
  SmpModel<S> model;
  std::optional<DistributionSpec<S>> distributions;
};

/// Parses a model document: fields m, d, reward_kind, p, e (matrices for
/// orders 1..d), optional e0 (checked against p), optional distributions,
/// optional initial. Numbers may be written as fraction strings anywhere.
template <class S>
ModelDocument<S> load_model_document(const nlohmann::json& doc,
                                     double tolerance = 1e-9) {
  if (!doc.is_object())
    fail(ErrorCode::MalformedDocument, "model document must be an object");
  for (const char* field : {"m", "d", "p", "e"})
    if (!doc.contains(field))
      fail(ErrorCode::MalformedDocument,
           std::string("missing field \"") + field + "\"");
  const int m = doc.at("m").get<int>();
  const int d = doc.at("d").get<int>();
  if (m < 0) fail(ErrorCode::MalformedDocument, "m must be >= 0");
  if (d < 1) fail(ErrorCode::MalformedDocument, "d must be >= 1");
  const int n = m + 1;

  RewardKind kind = RewardKind::Nonnegative;
  if (doc.contains("reward_kind")) {
    const std::string text = doc.at("reward_kind").get<std::string>();
    if (text == "nonnegative")
      kind = RewardKind::Nonnegative;
    else if (text == "real")
      kind = RewardKind::Real;
    else
      fail(ErrorCode::MalformedDocument,
           "reward_kind must be \"nonnegative\" or \"real\"");
  }

  MomentStack<S> slices;
  slices.push_back(matrix_from_json<S>(doc.at("p"), n, n, "p"));
  const auto& e = doc.at("e");
  if (!e.is_array() || static_cast<int>(e.size()) != d)
    fail(ErrorCode::MalformedDocument,
         "e must hold exactly d = " + std::to_string(d) + " matrices");
  for (int r = 1; r <= d; ++r)
    slices.push_back(
        matrix_from_json<S>(e[r - 1], n, n, "e[" + std::to_string(r - 1) + "]"));

  if (doc.contains("e0")) {
    MomentStack<S> checked = slices;
    checked[0] = matrix_from_json<S>(doc.at("e0"), n, n, "e0");
    slices = stack_with_order_zero(slices[0], checked, tolerance);
  }

  std::optional<DenseVector<S>> initial;
  if (doc.contains("initial")) {
    const auto& init = doc.at("initial");
    if (!init.is_array() || static_cast<int>(init.size()) != n)
      fail(ErrorCode::MalformedDocument,
           "initial must be an array of m+1 numbers");
    DenseVector<S> vec(n);
    for (int i = 0; i < n; ++i) vec(i) = scalar_from_json<S>(init[i]);
    initial = std::move(vec);
  }

  ModelDocument<S> out{
      SmpModel<S>(std::move(slices), kind, std::move(initial), tolerance),
      std::nullopt};

  if (doc.contains("distributions")) {
    const auto& dist = doc.at("distributions");
    if (!dist.is_array() || static_cast<int>(dist.size()) != n)
      fail(ErrorCode::MalformedDocument,
           "distributions must be an (m+1) x (m+1) array of laws or nulls");
    DistributionSpec<S> spec;
    spec.laws.resize(n);
    for (int i = 0; i < n; ++i) {
      const auto& row = dist[i];
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        fail(ErrorCode::MalformedDocument,
             "distributions row " + std::to_string(i) + " must have m+1 entries");
      spec.laws[i].resize(n);
      for (int j = 0; j < n; ++j)
        if (!row[j].is_null()) spec.laws[i][j] = law_from_json<S>(row[j]);
    }
    out.distributions = std::move(spec);
  }
  return out;
}

template <class S>
ModelDocument<S> load_model_file(const std::string& path,
                                 double tolerance = 1e-9) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MalformedDocument, "cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& err) {
    fail(ErrorCode::MalformedDocument, std::string("invalid JSON: ") + err.what());
  }
  return load_model_document<S>(doc, tolerance);
}

template <class S>
nlohmann::json model_to_json(const SmpModel<S>& model,
                             const DistributionSpec<S>* spec = nullptr) {
  nlohmann::json doc;
  doc["m"] = model.m();
  doc["d"] = model.max_order();
  doc["reward_kind"] = to_string(model.reward_kind());
  doc["p"] = matrix_to_json(model.transition_matrix());
  nlohmann::json e = nlohmann::json::array();
  for (int r = 1; r <= model.max_order(); ++r)
    e.push_back(matrix_to_json(model.moment_matrix(r)));
  doc["e"] = std::move(e);
  if (model.initial_distribution()) {
    nlohmann::json init = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.initial_distribution()->size(); ++i)
      init.push_back(scalar_to_json((*model.initial_distribution())(i)));
    doc["initial"] = std::move(init);
  }
  if (spec) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < model.num_states(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < model.num_states(); ++j) {
        if (spec->laws[i][j])
          row.push_back(law_to_json(*spec->laws[i][j]));
        else
          row.push_back(nullptr);
      }
      rows.push_back(std::move(row));
    }
    doc["distributions"] = std::move(rows);
  }
  return doc;
}

/// Bivariate document: p plus "e_mixed", a ragged array where
/// e_mixed[q][s] holds E_i[X1^q X2^s; J_1=j] for q+s <= d, e_mixed[0][0] = p.
template <class S>
BivariateModel<S> load_bivariate_document(const nlohmann::json& doc,
                                          double tolerance = 1e-9) {
  if (!doc.is_object())
    fail(ErrorCode::MalformedDocument, "bivariate document must be an object");
  for (const char* field : {"m", "d", "e_mixed"})
    if (!doc.contains(field))
      fail(ErrorCode::MalformedDocument,
           std::string("missing field \"") + field + "\"");
  const int m = doc.at("m").get<int>();
  const int d = doc.at("d").get<int>();
  if (m < 0 || d < 1)
    fail(ErrorCode::MalformedDocument, "need m >= 0 and d >= 1");
  const int n = m + 1;
  const auto& mixed = doc.at("e_mixed");
  if (!mixed.is_array() || static_cast<int>(mixed.size()) != d + 1)
    fail(ErrorCode::MalformedDocument, "e_mixed must have d+1 rows");
  std::vector<std::vector<DenseMatrix<S>>> tensor(d + 1);
  for (int q = 0; q <= d; ++q) {
    const auto& row = mixed[q];
    if (!row.is_array() || static_cast<int>(row.size()) != d - q + 1)
      fail(ErrorCode::MalformedDocument,
           "e_mixed[" + std::to_string(q) + "] must have d+1-q entries");
    for (int s = 0; s <= d - q; ++s)
      tensor[q].push_back(matrix_from_json<S>(
          row[s], n, n,
          "e_mixed[" + std::to_string(q) + "][" + std::to_string(s) + "]"));
  }
  if (doc.contains("p")) {
    const DenseMatrix<S> p = matrix_from_json<S>(doc.at("p"), n, n, "p");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!near(tensor[0][0](i, j), p(i, j), tolerance))
          fail(ErrorCode::OrderZeroMismatch,
               "e_mixed[0][0] differs from p at (" + std::to_string(i) + "," +
                   std::to_string(j) + ")");
  }
  return BivariateModel<S>(std::move(tensor), tolerance);
}

/// Step-dependent document: "steps" is an array of {p, e} kernels, "targets"
/// the per-step target sets (the last one must cover every state).
template <class S>
std::pair<std::vector<SmpModel<S>>, std::vector<std::vector<StateId>>>
load_timedep_document(const nlohmann::json& doc, double tolerance = 1e-9) {
  if (!doc.is_object())
    fail(ErrorCode::MalformedDocument, "step document must be an object");
  for (const char* field : {"m", "d", "steps", "targets"})
    if (!doc.contains(field))
      fail(ErrorCode::MalformedDocument,
           std::string("missing field \"") + field + "\"");
  const int m = doc.at("m").get<int>();
  const int d = doc.at("d").get<int>();
  const int n = m + 1;
  RewardKind kind = RewardKind::Nonnegative;
  if (doc.contains("reward_kind") &&
      doc.at("reward_kind").get<std::string>() == "real")
    kind = RewardKind::Real;

  std::vector<SmpModel<S>> steps;
  for (const auto& step : doc.at("steps")) {
    MomentStack<S> slices;
    slices.push_back(matrix_from_json<S>(step.at("p"), n, n, "step p"));
    const auto& e = step.at("e");
    if (!e.is_array() || static_cast<int>(e.size()) != d)
      fail(ErrorCode::MalformedDocument, "each step needs d moment matrices");
    for (int r = 1; r <= d; ++r)
      slices.push_back(matrix_from_json<S>(e[r - 1], n, n, "step e"));
    steps.emplace_back(std::move(slices), kind, std::nullopt, tolerance);
  }
  std::vector<std::vector<StateId>> targets;
  for (const auto& entry : doc.at("targets"))
    targets.push_back(entry.get<std::vector<StateId>>());
  return {std::move(steps), std::move(targets)};
}

/// Reduction trace as shown step by step: the matrices after each exclusion,
/// rows over (active states + the state just excluded), columns over the
/// active states.
template <class S>
nlohmann::json trace_to_json(const ReductionTrace<S>& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : trace.steps) {
    const ReducedModel<S>& snap = step.snapshot;
    nlohmann::json entry;
    entry["excluded"] = step.excluded;
    entry["active"] = snap.active();
    std::vector<StateId> rows = snap.active();
    rows.push_back(step.excluded);
    std::sort(rows.begin(), rows.end());
    entry["rows"] = rows;
    nlohmann::json matrices = nlohmann::json::array();
    for (int r = 0; r <= snap.max_order(); ++r) {
      nlohmann::json mat = nlohmann::json::array();
      for (StateId i : rows) {
        nlohmann::json row = nlohmann::json::array();
        for (StateId j : snap.active())
          row.push_back(scalar_to_json(snap.moment(r, i, j)));
        mat.push_back(std::move(row));
      }
      matrices.push_back(std::move(mat));
    }
    entry["matrices"] = std::move(matrices);
    steps.push_back(std::move(entry));
  }
  return {{"steps", std::move(steps)}};
}

}  // namespace smp

#endif  // SEMIMARKOV_IO_HPP
