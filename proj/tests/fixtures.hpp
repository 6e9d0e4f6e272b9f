#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pragsynth/domain.hpp"

namespace fixtures {

inline std::vector<pragsynth::RegexAst> demo_concepts() {
  using pragsynth::parse;
  return {parse("[01]+0+"), parse("1*0+1*"), parse("0*1+0*"), parse("[01]*")};
}

inline std::vector<pragsynth::BinaryString> demo_strings() {
  using pragsynth::BinaryString;
  return {BinaryString::parse("1100"), BinaryString::parse("0000"),
          BinaryString::parse("0010"), BinaryString::parse("0111")};
}

inline pragsynth::MeaningMatrix demo() {
  return pragsynth::build_matrix(demo_concepts(), demo_strings());
}

// Faces game: concepts none/G/GH, utterances n/g/h.
inline pragsynth::MeaningMatrix faces() {
  using pragsynth::ConceptSet;
  using pragsynth::Sign;
  ConceptSet n(3), g(3), h(3);
  n.set(0);
  g.set(1);
  g.set(2);
  h.set(2);
  return pragsynth::MeaningMatrix({"none", "G", "GH"},
                                  {{"n", Sign::Unsigned}, {"g", Sign::Unsigned},
                                   {"h", Sign::Unsigned}},
                                  {n, g, h});
}

inline std::string read_file(const std::string& name) {
  std::ifstream in(std::string(PRAGSYNTH_FIXTURE_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures
