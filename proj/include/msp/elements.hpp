#pragma once

// Frozen periodic-table ordering (atomic number 1..118). Composition vectors
// index into this table, so the ordering must never change.

#include <array>
#include <optional>
#include <string_view>
#include <unordered_map>

namespace msp::elements {

inline constexpr int kElementCount = 118;

inline constexpr std::array<std::string_view, kElementCount> kSymbols = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr",
    "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf",
    "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po",
    "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

// 0-based slot in the frozen ordering, i.e. atomic number - 1.
inline std::optional<int> symbol_index(std::string_view symbol) {
  static const std::unordered_map<std::string_view, int> lookup = [] {
    std::unordered_map<std::string_view, int> m;
    m.reserve(kSymbols.size());
    for (int i = 0; i < kElementCount; ++i) m.emplace(kSymbols[i], i);
    return m;
  }();
  auto it = lookup.find(symbol);
  if (it == lookup.end()) return std::nullopt;
  return it->second;
}

inline bool is_element_symbol(std::string_view symbol) {
  return symbol_index(symbol).has_value();
}

// Loose metal/metalloid test used by the oxide precursor-type rule: everything
// except H, the nonmetal p-block elements and the noble gases. Metalloids
// (B, Si, Ge, As, Sb, Te) count as metal-like so that B2O3, SiO2, GeO2, ...
// classify as oxide precursors, which matches solid-state synthesis practice.
inline bool is_metal_like(std::string_view symbol) {
  static const std::unordered_map<std::string_view, bool> nonmetal = {
      {"H", true},  {"C", true},  {"N", true},  {"O", true},  {"F", true},
      {"P", true},  {"S", true},  {"Cl", true}, {"Se", true}, {"Br", true},
      {"I", true},  {"At", true}, {"He", true}, {"Ne", true}, {"Ar", true},
      {"Kr", true}, {"Xe", true}, {"Rn", true}, {"Og", true}};
  return is_element_symbol(symbol) && nonmetal.find(symbol) == nonmetal.end();
}

}  // namespace msp::elements
